#include "qtrack/isolated_qnd.hpp"

#include <array>
#include <cmath>

#include "qtrack/special.hpp"

namespace qtrack {

QndState qnd_update(const QndState& s, double x_prev, double delta) {
    return {s.n + 1, s.alpha + delta, s.beta + delta * x_prev, s.running_sum + x_prev};
}

QndTheory::QndTheory(double d, const OscillatorParams& p) : delta(d), params(p) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("delta must be finite and positive");
    params.validate();
}

double conditional_mean(std::span<const double> xs, double delta) {
    if (xs.empty()) return 0.0;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / (static_cast<double>(xs.size()) + 1.0 / delta);
}

double conditional_var(std::uint64_t n, const QndTheory& th) {
    return th.params.ground_state_variance() / (static_cast<double>(n) * th.delta + 1.0);
}

double mu_representation(std::span<const double> ws, double delta) {
    const double z = 1.0 / delta;
    double mu = 0.0;
    for (std::size_t k = 0; k < ws.size(); ++k) mu += ws[k] / (static_cast<double>(k) + 1.0 + z);
    return mu;
}

double v_n(std::uint64_t n, double delta) {
    if (!(delta > 0.0)) throw DomainError("v_n requires delta > 0");
    const double z = 1.0 / delta;
    double acc = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) {
        const double a = static_cast<double>(k) + z;
        acc += z / ((a + 1.0) * (a + 1.0) * a);
    }
    return acc;
}

double v_n_tail_bound(std::uint64_t n, double delta) {
    const double z = 1.0 / delta;
    const double a = static_cast<double>(n) + z;
    return z / (a * a * a) + z / (2.0 * a * a);
}

double limit_variance_factor(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("limit_variance_factor requires delta > 0");
    // 1 + delta - psi'(1/delta)/delta = 1 - psi'(y)/delta with y = 1 + 1/delta.
    const double y = 1.0 + 1.0 / delta;
    if (y < 10.0) return 1.0 - trigamma(y) / delta;

    // Expand (y-1) psi'(y) asymptotically so the leading 1 cancels exactly.
    constexpr std::array<double, 6> bernoulli = {
        1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0,
    };
    const double inv = 1.0 / y;
    const double inv2 = inv * inv;
    double corr = 0.0;
    double pw = inv2;  // y^-2k
    for (double b : bernoulli) {
        corr += b * (pw - pw * inv);
        pw *= inv2;
    }
    return 0.5 * inv + 0.5 * inv2 - corr;
}

double energy_conditional(std::uint64_t n, double mu_n, const QndTheory& th) {
    const auto& p = th.params;
    const double g = static_cast<double>(n) * th.delta + 1.0;
    return 0.25 * p.hbar * p.omega * (g + 1.0 / g) + 0.5 * p.mass * p.omega * p.omega * mu_n * mu_n;
}

double energy_mean(std::uint64_t n, const QndTheory& th) {
    const auto& p = th.params;
    const double g = static_cast<double>(n) * th.delta + 1.0;
    return 0.25 * p.hbar * p.omega * (g + 1.0 / g + v_n(n, th.delta));
}

double momentum_variance(std::uint64_t n, const QndTheory& th) {
    const auto& p = th.params;
    return 0.5 * p.hbar * p.mass * p.omega * (static_cast<double>(n) * th.delta + 1.0);
}

double position_variance(std::uint64_t n, const QndTheory& th) {
    const double g = static_cast<double>(n) * th.delta + 1.0;
    return th.params.ground_state_variance() * (v_n(n, th.delta) + 1.0 / g);
}

std::vector<double> innovations(std::span<const double> xs, double delta) {
    std::vector<double> ws(xs.size());
    double sum = 0.0;
    for (std::size_t n = 0; n < xs.size(); ++n) {
        const double mu = n == 0 ? 0.0 : sum / (static_cast<double>(n) + 1.0 / delta);
        ws[n] = xs[n] - mu;
        sum += xs[n];
    }
    return ws;
}

}  // namespace qtrack
