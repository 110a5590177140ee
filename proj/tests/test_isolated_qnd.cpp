#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/math/special_functions/trigamma.hpp>

#include "qtrack/isolated_qnd.hpp"
#include "qtrack/special.hpp"

using namespace qtrack;

namespace {

struct ConstantNormal {
    double value;
    double next() { return value; }
};

// Scalar pipeline at tau = one period, used as an independent check of the
// closed forms.
std::vector<double> scalar_track(std::uint64_t steps, double delta, std::uint64_t seed) {
    const auto p = OscillatorParams::natural();
    CounterNormalStream rng(seed);
    ScalarGaussianState s = ScalarGaussianState::ground();
    std::vector<double> xs;
    for (std::uint64_t n = 0; n <= steps; ++n) {
        const double x = sample_measurement(s, p, rng);
        xs.push_back(x);
        s = step(s, x, 2.0 * M_PI, {delta}, p);
    }
    return xs;
}

}  // namespace

TEST_CASE("qnd_update") {
    const auto s = qnd_update({}, 0.7, 1.0);
    CHECK(s.n == 1);
    CHECK(s.alpha == 2.0);
    CHECK(s.beta == doctest::Approx(0.7));

    QndState t;
    const double d = 0.3;
    for (double x : {1.0, -2.0, 0.25}) t = qnd_update(t, x, d);
    CHECK(t.beta == doctest::Approx(d * (1.0 - 2.0 + 0.25)).epsilon(1e-14));
    CHECK(t.alpha == doctest::Approx(1.0 + 3 * d).epsilon(1e-14));

    QndState z{0, 1.5, 0.2, 0.0};
    const auto z1 = qnd_update(z, 4.0, 0.0);
    CHECK(z1.alpha == z.alpha);
    CHECK(z1.beta == z.beta);
}

TEST_CASE("QND state invariants along a track") {
    const double delta = 0.7;
    CounterNormalStream rng(3);
    QndState s;
    for (int i = 0; i < 500; ++i) {
        s = qnd_update(s, 2.0 * rng.next(), delta);
        REQUIRE(std::fabs(s.alpha - (1.0 + s.n * delta)) <= 1e-12 * s.alpha);
        REQUIRE(std::fabs(s.beta - delta * s.running_sum) <= 1e-12 * (1.0 + std::fabs(s.beta)));
    }
}

TEST_CASE("conditional mean and variance") {
    const std::vector<double> a{2.0};
    CHECK(conditional_mean(a, 1.0) == doctest::Approx(1.0));
    const std::vector<double> b{1.0, 1.0};
    CHECK(conditional_mean(b, 0.5) == doctest::Approx(0.5));
    CHECK(conditional_mean({}, 1.0) == 0.0);

    const QndTheory th(1.0, OscillatorParams::si(1e-26, 1e10));
    const double gs = th.params.ground_state_variance();
    CHECK(conditional_var(0, th) == doctest::Approx(gs));
    CHECK(conditional_var(1, th) == doctest::Approx(kHbarSI / (4.0 * 1e-26 * 1e10)));
    double prev = conditional_var(0, th);
    for (std::uint64_t n = 1; n < 1000; n += 37) {
        const double v = conditional_var(n, th);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(conditional_var(1000000000, th) < 1e-8 * gs);
}

TEST_CASE("closed forms match the scalar pipeline") {
    const double delta = 0.8;
    const auto xs = scalar_track(60, delta, 17);
    const auto p = OscillatorParams::natural();
    ScalarGaussianState s = ScalarGaussianState::ground();
    const QndTheory th(delta, p);
    for (std::size_t n = 0; n < xs.size(); ++n) {
        const auto law = measurement_distribution(s, p);
        CHECK(law.mu == doctest::Approx(conditional_mean(std::span(xs).first(n), delta)).epsilon(1e-10));
        CHECK(law.sigma2 == doctest::Approx(conditional_var(n, th)).epsilon(1e-12));
        s = step(s, xs[n], 2.0 * M_PI, {delta}, p);
    }
}

TEST_CASE("mu representation identity on random tracks") {
    CHECK(mu_representation(std::vector<double>{2.0}, 1.0) == doctest::Approx(1.0));
    CHECK(mu_representation(std::vector<double>(5, 0.0), 0.3) == 0.0);
    double worst = 0.0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        const double delta = 0.1 + 0.05 * static_cast<double>(r % 37);
        CounterNormalStream rng(derive_seed(77, r));
        const auto xs = simulate_track(80, QndTheory(delta, OscillatorParams::natural()), rng);
        const auto ws = innovations(xs, delta);
        for (std::size_t n = 1; n <= xs.size(); ++n) {
            const double a = conditional_mean(std::span(xs).first(n), delta);
            const double b = mu_representation(std::span(ws).first(n), delta);
            worst = std::max(worst, std::fabs(a - b));
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("v_n values and tail bound") {
    CHECK(v_n(0, 1.0) == 0.0);
    CHECK(v_n(1, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
    for (double delta : {0.05, 0.3, 1.0, 4.0, 50.0}) {
        const double lim = limit_variance_factor(delta);
        double prev = 0.0;
        for (std::uint64_t n : {1, 2, 5, 10, 100, 1000, 10000}) {
            const double v = v_n(n, delta);
            CHECK(v >= prev);
            CHECK(v <= lim + 1e-14);
            CHECK(lim - v <= v_n_tail_bound(n, delta) + 1e-14);
            prev = v;
        }
    }
}

TEST_CASE("limit variance factor") {
    CHECK(limit_variance_factor(1.0) == doctest::Approx(2.0 - M_PI * M_PI / 6.0).epsilon(1e-14));
    CHECK(limit_variance_factor(1.0) == doctest::Approx(0.355066).epsilon(1e-6));
    CHECK(std::fabs(limit_variance_factor(1e6) - 1.0) < 1e-5);
    CHECK(limit_variance_factor(1e-6) < 1e-4);
    CHECK(limit_variance_factor(1e-6) > 0.0);
    CHECK_THROWS_AS(limit_variance_factor(0.0), DomainError);

    // Against boost's trigamma in the unsharp range where both forms are accurate.
    for (double delta : {0.2, 0.5, 1.0, 3.0, 100.0}) {
        const double ref = 1.0 + delta - boost::math::trigamma(1.0 / delta) / delta;
        CHECK(limit_variance_factor(delta) == doctest::Approx(ref).epsilon(1e-10));
    }
    // Continuity across the switch to the asymptotic expansion at y = 10.
    const double d0 = 1.0 / 9.0;
    CHECK(limit_variance_factor(std::nextafter(d0, 0.0)) == doctest::Approx(limit_variance_factor(d0)).epsilon(1e-13));
}

TEST_CASE("limit factor is monotone in the device variance") {
    double prev = 1.0 + 1e-12;
    for (int i = 0; i <= 120; ++i) {
        const double s2 = std::pow(10.0, -3.0 + 0.05 * i);
        const double f = limit_variance_factor(1.0 / s2);
        CHECK(f < prev);
        CHECK(f > 0.0);
        prev = f;
    }
}

TEST_CASE("energies") {
    const QndTheory th(1.0, OscillatorParams::si(1e-26, 1e10));
    const double hw = kHbarSI * 1e10;
    CHECK(energy_conditional(0, 0.0, th) == doctest::Approx(0.5 * hw).epsilon(1e-14));
    CHECK(energy_conditional(1, 0.0, th) == doctest::Approx(0.625 * hw).epsilon(1e-14));
    CHECK(energy_mean(0, th) == doctest::Approx(0.5 * hw).epsilon(1e-14));
    CHECK(energy_mean(1, th) == doctest::Approx(0.6875 * hw).epsilon(1e-14));
    const std::uint64_t n = 1000000;
    CHECK(energy_conditional(n, 0.0, th) / (static_cast<double>(n) * hw / 4.0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("uncertainty products") {
    const QndTheory th(0.6, OscillatorParams::natural());
    const double h2 = th.params.hbar * th.params.hbar / 4.0;
    CHECK(momentum_variance(0, th) == doctest::Approx(0.5 * th.params.hbar));
    for (std::uint64_t n : {0, 1, 3, 10, 250}) {
        CHECK(conditional_var(n, th) * momentum_variance(n, th) == doctest::Approx(h2).epsilon(1e-15));
        const double xp = position_variance(n, th) * momentum_variance(n, th);
        const double g = static_cast<double>(n) * th.delta + 1.0;
        CHECK(xp == doctest::Approx(h2 * (1.0 + v_n(n, th.delta) * g)).epsilon(1e-13));
        CHECK(xp >= h2);
    }
}

TEST_CASE("simulate_track") {
    const QndTheory th(1.0, OscillatorParams::natural());
    ConstantNormal zero{0.0};
    const auto xs = simulate_track(50, th, zero);
    CHECK(xs.size() == 51);
    for (double x : xs) CHECK(x == 0.0);

    CounterNormalStream a(9), b(9);
    CHECK(simulate_track(30, th, a) == simulate_track(30, th, b));
}

TEST_CASE("ensemble position variance follows the closed form") {
    const QndTheory th(1.0, OscillatorParams::natural());
    const int runs = 10000;
    const std::uint64_t steps = 20;
    std::vector<double> sum(steps + 1, 0.0), sum2(steps + 1, 0.0), e_sum(steps + 1, 0.0), e_sum2(steps + 1, 0.0);
    for (int r = 0; r < runs; ++r) {
        CounterNormalStream rng(derive_seed(555, r));
        const auto xs = simulate_track(steps, th, rng);
        for (std::uint64_t n = 0; n <= steps; ++n) {
            sum[n] += xs[n];
            sum2[n] += xs[n] * xs[n];
            const double e = energy_conditional(n, conditional_mean(std::span(xs).first(n), th.delta), th);
            e_sum[n] += e;
            e_sum2[n] += e * e;
        }
    }
    for (std::uint64_t n : {0, 1, 5, 20}) {
        const double m2 = sum2[n] / runs;
        const double theory = position_variance(n, th);
        // Var of x^2 for a centred normal is 2 sigma^4.
        CHECK(std::fabs(m2 - theory) < 3.0 * theory * std::sqrt(2.0 / runs) + 1e-12);

        const double em = e_sum[n] / runs;
        const double es = std::sqrt(std::max(0.0, e_sum2[n] / runs - em * em) / runs);
        CHECK(std::fabs(em - energy_mean(n, th)) <= 3.0 * es + 1e-12);
    }
}
