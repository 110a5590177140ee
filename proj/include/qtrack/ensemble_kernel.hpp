#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qtrack/montecarlo.hpp"
#include "qtrack/statistics.hpp"

namespace qtrack {

// OpenMP ensemble kernels. Results for a run depend only on
// (master_seed, run_index) and the configuration, never on the thread count
// or on the order in which runs finish.
//
// For coupled runs the covariance A_n does not depend on the outcomes, so it
// is propagated once per step and shared. Only the linear coefficient varies
// between runs; it is stored as b_n = Pi_n c in a frame Pi_n that is reset
// every `segment` steps, which makes a run-step O(N) instead of O(N^2).
struct KernelOptions {
    int threads = 0;                // 0: leave the OpenMP default alone
    std::size_t chunk_steps = 1024; // rounded up to a multiple of segment
    std::size_t segment = 32;
};

// Deterministic per-step quantities shared by all coupled runs, generated in
// consecutive chunks.
class CoupledGainTable {
public:
    CoupledGainTable(const CoupledModel& model, std::size_t segment);

    struct Chunk {
        std::uint64_t first = 0;
        std::size_t count = 0;
        std::size_t dim = 0;
        std::vector<double> sigma;  // per step
        std::vector<double> h;      // per step: Re h[dim], Im h[dim]
        std::vector<double> q;      // per step: Re q[dim], Im q[dim]
        // frames[j] is applied before local step j * segment (none before
        // global step 0).
        std::vector<Eigen::MatrixXcd> frames;
    };

    // Tables for the next `count` steps, continuing where the last call ended.
    // Every chunk but the last must be a multiple of the segment length.
    void next_chunk(std::size_t count, Chunk& out);

    std::uint64_t next_step() const { return n_; }
    std::size_t segment() const { return segment_; }
    double max_asymmetry() const { return max_asym_; }

private:
    const CoupledModel* model_;
    std::size_t segment_;
    std::uint64_t n_ = 0;
    Eigen::MatrixXcd A_;
    Eigen::MatrixXcd Pi_;
    double max_asym_ = 0.0;
};

std::vector<Track> simulate_tracks(const RunConfig& cfg, const CoupledModel* model, std::uint64_t first_run,
                                   std::uint64_t count, const KernelOptions& opt = {});

// First crossing of |x| > gamma for every run 0..n_runs-1 over steps
// 0..n_steps. Runs stop at their first crossing.
std::vector<CrossingResult> simulate_crossings(const RunConfig& cfg, const CoupledModel* model, double gamma,
                                               const KernelOptions& opt = {});

// log_likelihood_ratio for each track.
std::vector<double> llr_scores(std::span<const Track> tracks, const RunConfig& isolated_model,
                               const CoupledModel& coupled_model, const KernelOptions& opt = {});

}  // namespace qtrack
