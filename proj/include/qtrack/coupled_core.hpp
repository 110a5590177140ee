#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "qtrack/gaussian_core.hpp"

namespace qtrack {

// Bath of N oscillators coupled linearly to the measured one.
struct EnsembleSpec {
    std::vector<double> masses;
    std::vector<double> frequencies;
    std::vector<double> couplings;

    std::size_t size() const { return masses.size(); }
    void validate() const;
};

// Express `ens` in the natural units of `main` (masses in m, frequencies in
// omega, couplings in m omega^2).
EnsembleSpec to_natural(const EnsembleSpec& ens, const OscillatorParams& main);

// Mass vector M, frequency-coupling matrix K = U^T diag(lambda) U.
struct SystemMatrices {
    Eigen::VectorXd mass;
    Eigen::MatrixXd K;
    Eigen::MatrixXd U;
    Eigen::VectorXd lambda;

    Eigen::Index dim() const { return K.rows(); }
    // W = U M^{1/2}: y = W q are the unit-mass normal coordinates.
    Eigen::MatrixXd normal_transform() const;
};

SystemMatrices build_matrices(const OscillatorParams& main, const EnsembleSpec& ens);

inline constexpr double kSingularityEps = 1e-9;

// Cot/csc-form evolution matrices Ccal(t), Scal(t); both purely imaginary and
// symmetric. Throws PropagatorSingularity if any |sin(sqrt(lambda_j) t)| <= eps.
struct EvolutionOperators {
    Eigen::MatrixXcd C;
    Eigen::MatrixXcd S;
    double tau = 0.0;
};

EvolutionOperators evolution_operators(const SystemMatrices& sys, double t, double hbar,
                                       double eps_sing = kSingularityEps);

// The same free evolution written per normal mode with cos/sin factors
// instead of cot/csc. Defined for every t, including multiples of the mode
// periods where the cot/csc form is singular.
struct ModePropagator {
    Eigen::VectorXd cos_t;
    Eigen::VectorXd sin_over_freq;   // sin(s t) / s
    Eigen::VectorXd freq_times_sin;  // s sin(s t)
    Eigen::MatrixXd W;               // U M^{1/2}
    Eigen::MatrixXd W_inv_T;         // U M^{-1/2}
    double hbar = 2.0;
    double tau = 0.0;
};

ModePropagator mode_propagator(const SystemMatrices& sys, double t, double hbar);

// Psi(q) ~ exp{-q^T A q / 2 + q^T b}.
struct CoupledGaussianState {
    Eigen::MatrixXcd A;
    Eigen::VectorXcd b;
};

// Diagnostics from one free-evolution solve.
struct EvolveAudit {
    double asymmetry = 0.0;  // ||A - A^T||_F / ||A||_F before symmetrization
    double rcond = 0.0;      // reciprocal condition estimate of the solved matrix
};

inline constexpr double kAsymmetryTol = 1e-10;

// Covariance half of the free evolution. Returns A(t) and the gain G with
// b(t) = G b(0). Shared by the per-track path and the ensemble kernel.
struct CovariancePropagation {
    Eigen::MatrixXcd A;
    Eigen::MatrixXcd G;
    EvolveAudit audit;
};

CovariancePropagation propagate_covariance(const Eigen::MatrixXcd& A0, const EvolutionOperators& ops);
CovariancePropagation propagate_covariance(const Eigen::MatrixXcd& A0, const ModePropagator& ops);

CoupledGaussianState evolve_free_nd(const CoupledGaussianState& s, const EvolutionOperators& ops,
                                    EvolveAudit* audit = nullptr);
CoupledGaussianState evolve_free_nd(const CoupledGaussianState& s, const ModePropagator& ops,
                                    EvolveAudit* audit = nullptr);

// (m omega / hbar) delta added to A_00, times xbar to b_0.
CoupledGaussianState apply_measurement_nd(const CoupledGaussianState& s, double xbar, const MeasurementDevice& d,
                                          const OscillatorParams& main);

template <class Propagator>
CoupledGaussianState step_nd(const CoupledGaussianState& s, double x_prev, const Propagator& ops,
                             const MeasurementDevice& d, const OscillatorParams& main, EvolveAudit* audit = nullptr) {
    return evolve_free_nd(apply_measurement_nd(s, x_prev, d, main), ops, audit);
}

// Law of the next main-oscillator outcome: mu = [Re(A)^-1 Re(b)]_0,
// sigma^2 = [Re(A)^-1]_00 / 2. Throws SolveFailure if Re(A) is not PD.
GaussianLaw measurement_distribution_nd(const CoupledGaussianState& s);

// r = Re(A)^-1 e_0 and sigma^2 = r_0 / 2, so that mu = r . Re(b).
struct MainReadout {
    Eigen::VectorXd r;
    double sigma2 = 0.0;
};

MainReadout main_readout(const Eigen::MatrixXcd& A);

// Product of the uncoupled ground states: A = diag(m_j omega_j / hbar), b = 0.
CoupledGaussianState initial_frozen_state(const OscillatorParams& main, const EnsembleSpec& ens);

// Ground state of the coupled Hamiltonian, A = M^{1/2} U^T diag(sqrt(lambda)/hbar) U M^{1/2}.
CoupledGaussianState normal_mode_ground_state(const SystemMatrices& sys, double hbar);

struct PdCheck {
    bool positive_definite = false;
    double min_eig = 0.0;
};

PdCheck check_pd_real(const Eigen::MatrixXcd& A);

}  // namespace qtrack
