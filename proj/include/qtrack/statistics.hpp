#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qtrack/montecarlo.hpp"

namespace qtrack {

// First index n with |x_n| > gamma; empty when the track never crosses.
struct CrossingResult {
    std::optional<std::uint64_t> n_gamma;
    double gamma = 0.0;
    std::uint64_t horizon = 0;  // last observed index
    double tau = 0.0;

    bool censored() const { return !n_gamma.has_value(); }
    double epoch() const;  // n_gamma * tau; throws DomainError when censored
};

CrossingResult first_crossing(std::span<const double> xs, double gamma, double tau = 0.0);
inline CrossingResult first_crossing(const Track& t, double gamma, double tau = 0.0) {
    return first_crossing(std::span<const double>(t.xs), gamma, tau);
}

// Empirical P[N_gamma tau > t] for t = n tau, n = 0..horizon (the shortest
// horizon among the inputs). Censored runs count as surviving to the end.
struct CcdfEstimate {
    std::vector<double> grid;
    std::vector<double> values;
    std::uint64_t n_runs = 0;
    std::uint64_t censored = 0;

    // Indices where the step function changes, plus both ends. Enough to
    // reproduce the curve exactly.
    std::vector<std::size_t> change_points() const;
};

CcdfEstimate ccdf(std::span<const CrossingResult> results, double tau);

struct MeanEpoch {
    double mean = 0.0;
    double stderr_ = 0.0;  // NaN with fewer than two uncensored runs
    std::uint64_t censored = 0;
    std::uint64_t uncensored = 0;
};

// Over uncensored runs only. Throws EmptyInput / AllCensored.
MeanEpoch mean_crossing_epoch(std::span<const CrossingResult> results);

struct Histogram {
    std::vector<double> edges;    // bins + 1
    std::vector<std::uint64_t> counts;
    std::vector<double> density;  // counts / (total * width)
    std::vector<double> theory;   // N(0, theory_variance) density at bin centres
    double theory_variance = 0.0;
};

// Histogram of the last sample of each track, range symmetric about 0.
Histogram limit_point_histogram(std::span<const Track> tracks, std::size_t bins, double theory_variance);

// sup_x |F_n(x) - F(x)|.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

enum class KsLevel { one_percent, five_percent };

// Asymptotic Kolmogorov critical value with Stephens' small-sample
// correction: c / (sqrt(n) + 0.12 + 0.11 / sqrt(n)).
double ks_critical_value(std::size_t n, KsLevel level);

double normal_cdf(double x, double mean, double variance);

double sample_variance(std::span<const double> xs);

}  // namespace qtrack
