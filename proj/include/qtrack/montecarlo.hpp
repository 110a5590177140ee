#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qtrack/coupled_core.hpp"
#include "qtrack/gaussian_core.hpp"

namespace qtrack {

enum class Regime { isolated, coupled };

// Which algebraic form evaluates the free evolution of the coupled state.
// `matrix` is the cot/csc form and refuses singular tau; `normal_mode` is the
// cos/sin form and is defined for every tau.
enum class PropagatorKind { matrix, normal_mode };

// Initial bath state: product of uncoupled ground states, or the ground
// state of the coupled Hamiltonian.
enum class InitialBath { product, normal_mode };

// Everything needed to reproduce an ensemble. All quantities are in the
// natural units of `main` (see OscillatorParams).
struct RunConfig {
    Regime regime = Regime::isolated;
    std::uint64_t n_steps = 100;
    double tau = 2.0 * M_PI;
    MeasurementDevice device{};
    OscillatorParams main = OscillatorParams::natural();
    std::optional<EnsembleSpec> ensemble;
    std::uint64_t n_runs = 1;
    std::uint64_t master_seed = 0;
    PropagatorKind propagator = PropagatorKind::matrix;
    InitialBath initial = InitialBath::product;

    void validate() const;
    // tau equals one main-oscillator period to 1e-12 relative.
    bool is_qnd() const;
};

struct Track {
    std::vector<double> xs;  // x_0 .. x_n, natural units
    std::uint64_t seed = 0;
    Regime regime = Regime::isolated;
};

// Precomputed system for coupled runs; immutable and shared across runs.
class CoupledModel {
public:
    static CoupledModel prepare(const RunConfig& cfg);

    const SystemMatrices& system() const { return sys_; }
    const CoupledGaussianState& initial_state() const { return initial_; }
    const OscillatorParams& main() const { return main_; }
    const MeasurementDevice& device() const { return device_; }
    double tau() const { return tau_; }
    Eigen::Index dim() const { return sys_.dim(); }
    // (m omega / hbar) delta, the increment to A_00 per measurement.
    double kick() const { return main_.stiffness() * device_.delta; }

    CovariancePropagation propagate(const Eigen::MatrixXcd& A0) const;
    // Measure x, then evolve over tau.
    CoupledGaussianState step(const CoupledGaussianState& s, double x, EvolveAudit* audit = nullptr) const;

private:
    OscillatorParams main_;
    MeasurementDevice device_;
    double tau_ = 0.0;
    SystemMatrices sys_;
    std::variant<EvolutionOperators, ModePropagator> propagator_;
    CoupledGaussianState initial_;
};

// Serial per-track reference implementations.
Track run_isolated(const RunConfig& cfg, std::uint64_t run_index);
Track run_coupled(const CoupledModel& model, const RunConfig& cfg, std::uint64_t run_index);

// Same as run_coupled, also reporting the smallest eigenvalue of Re(A_n)
// seen along the track.
struct AuditedTrack {
    Track track;
    double min_pd_eig = 0.0;
    double max_asymmetry = 0.0;
};
AuditedTrack run_coupled_audited(const CoupledModel& model, const RunConfig& cfg, std::uint64_t run_index);

// Conditional laws (mu_n, sigma_n^2) of each outcome given the previous ones.
std::vector<GaussianLaw> conditional_laws_isolated(const RunConfig& cfg, std::span<const double> xs);
std::vector<GaussianLaw> conditional_laws_coupled(const CoupledModel& model, std::span<const double> xs);

// sum_n [log f_coupled(x_n | x_<n) - log f_isolated(x_n | x_<n)].
double log_likelihood_ratio(std::span<const double> xs, const RunConfig& isolated_model,
                            const CoupledModel& coupled_model);

double gaussian_log_density(double x, const GaussianLaw& law);

}  // namespace qtrack
