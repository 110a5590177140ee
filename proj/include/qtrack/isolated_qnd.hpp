#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qtrack/gaussian_core.hpp"

namespace qtrack {

// Real-valued (alpha_n, beta_n) of the nondemolition scheme tau = 2 pi / omega,
// plus the running sum of outcomes that beta_n is built from.
struct QndState {
    std::uint64_t n = 0;
    double alpha = 1.0;
    double beta = 0.0;
    double running_sum = 0.0;
};

QndState qnd_update(const QndState& s, double x_prev, double delta);

struct QndTheory {
    double delta = 1.0;
    OscillatorParams params = OscillatorParams::natural();

    QndTheory() = default;
    QndTheory(double d, const OscillatorParams& p);
};

// mu_n = (sum_{k<n} x_k) / (n + 1/delta); 0 for an empty prefix.
double conditional_mean(std::span<const double> xs, double delta);

// sigma_n^2 = gs / (n delta + 1).
double conditional_var(std::uint64_t n, const QndTheory& th);

// sum_{k<n} w_k / (k + 1 + 1/delta) with w_0 = x_0.
double mu_representation(std::span<const double> ws, double delta);

// Dimensionless v_n(delta); <mu_n^2> = gs * v_n.
double v_n(std::uint64_t n, double delta);

// Upper bound on v_inf - v_n: sum_{k>=n} (1/delta) / (k + 1/delta)^3.
double v_n_tail_bound(std::uint64_t n, double delta);

// <x_tilde^2> / gs = 1 + delta - psi'(1/delta) / delta, in (0, 1].
double limit_variance_factor(double delta);

double energy_conditional(std::uint64_t n, double mu_n, const QndTheory& th);
double energy_mean(std::uint64_t n, const QndTheory& th);

// <p_n^2> = (hbar m omega / 2)(n delta + 1).
double momentum_variance(std::uint64_t n, const QndTheory& th);

// <x_n^2> = gs [v_n + 1/(n delta + 1)].
double position_variance(std::uint64_t n, const QndTheory& th);

// Reconstruct w_n = x_n - mu_n from an outcome sequence.
std::vector<double> innovations(std::span<const double> xs, double delta);

// Track x_0..x_{n_steps}, starting from `initial` (ground state by default).
template <NormalSource G>
std::vector<double> simulate_track(std::uint64_t n_steps, const QndTheory& th, G& rng,
                                   const QndState& initial = {}) {
    std::vector<double> xs;
    xs.reserve(n_steps + 1);
    const double gs = th.params.ground_state_variance();
    QndState s = initial;
    for (std::uint64_t n = 0; n <= n_steps; ++n) {
        const double mu = s.beta / s.alpha;
        const double x = mu + std::sqrt(gs / s.alpha) * rng.next();
        xs.push_back(x);
        s = qnd_update(s, x, th.delta);
    }
    return xs;
}

}  // namespace qtrack
