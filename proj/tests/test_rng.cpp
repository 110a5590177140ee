#include <doctest.h>

#include <cmath>
#include <unordered_set>

#include <boost/math/distributions/normal.hpp>

#include "qtrack/rng.hpp"

using namespace qtrack;

TEST_CASE("derive_seed is deterministic") {
    CHECK(derive_seed(123, 456) == derive_seed(123, 456));
    static_assert(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST_CASE("derive_seed test vectors") {
    // Frozen at first implementation; also reproduced by a Python transcription of the mixer.
    CHECK(derive_seed(0x243F6A8885A308D3ULL, 7) == 16911753153453118205ULL);
    CHECK(mix64(1) == 6238072747940578789ULL);
    CHECK(derive_seed(42, 0) == 12058926934050108962ULL);
}

TEST_CASE("derive_seed has no collisions over 1e6 run indices") {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(2000000);
    for (std::uint64_t i = 0; i < 1000000; ++i) seen.insert(derive_seed(0xDEADBEEF, i));
    CHECK(seen.size() == 1000000);
}

TEST_CASE("uniform_at stays inside (0, 1)") {
    CHECK(uniform_at(42, 0) == doctest::Approx(0.7415648787718234).epsilon(1e-15));
    for (std::uint64_t k = 0; k < 100000; ++k) {
        const double u = uniform_at(7, k);
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("inverse normal CDF against boost quantile") {
    const boost::math::normal_distribution<double> nd;
    double worst = 0.0;
    for (double p : {1e-300, 1e-100, 1e-20, 1e-10, 1e-5, 0.001, 0.02425, 0.075, 0.3, 0.425, 0.5, 0.575, 0.7,
                     0.925, 0.975, 0.999, 1.0 - 1e-10}) {
        const double ref = quantile(nd, p);
        const double got = inverse_normal_cdf(p);
        const double err = std::fabs(got - ref) / std::max(1.0, std::fabs(ref));
        worst = std::max(worst, err);
    }
    for (std::uint64_t k = 0; k < 20000; ++k) {
        const double p = uniform_at(99, k);
        const double ref = quantile(nd, p);
        worst = std::max(worst, std::fabs(inverse_normal_cdf(p) - ref) / std::max(1.0, std::fabs(ref)));
    }
    CHECK(worst < 1e-14);
    CHECK(inverse_normal_cdf(0.5) == 0.0);
}

TEST_CASE("inverse normal CDF is odd") {
    // Dyadic p keeps 1 - p exact.
    for (double p : {std::ldexp(1.0, -40), 0.0078125, 0.1875, 0.4990234375})
        CHECK(inverse_normal_cdf(p) == doctest::Approx(-inverse_normal_cdf(1.0 - p)).epsilon(1e-9));
}

TEST_CASE("counter stream: next() walks at()") {
    CounterNormalStream a(5);
    const CounterNormalStream b(5);
    for (std::uint64_t k = 0; k < 100; ++k) CHECK(a.next() == b.at(k));
    CHECK(a.counter() == 100);
}

TEST_CASE("counter stream moments") {
    CounterNormalStream g(2024);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = g.next();
        s += z;
        s2 += z * z;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(n));
    CHECK(std::fabs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}
