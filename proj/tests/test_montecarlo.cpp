#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qtrack/ensemble_builder.hpp"
#include "qtrack/isolated_qnd.hpp"
#include "qtrack/montecarlo.hpp"
#include "qtrack/rng.hpp"
#include "qtrack/statistics.hpp"

using namespace qtrack;

namespace {

RunConfig isolated_config(std::uint64_t steps, double tau = 2.0 * M_PI) {
    RunConfig rc;
    rc.n_steps = steps;
    rc.tau = tau;
    rc.master_seed = 1234;
    return rc;
}

RunConfig coupled_config(EnsembleSpec ens, std::uint64_t steps, double tau = 2.0 * M_PI) {
    RunConfig rc = isolated_config(steps, tau);
    rc.regime = Regime::coupled;
    rc.ensemble = std::move(ens);
    return rc;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("run config validation") {
    RunConfig rc;
    CHECK_NOTHROW(rc.validate());
    rc.n_runs = 0;
    CHECK_THROWS_AS(rc.validate(), ConfigError);
    rc = RunConfig{};
    rc.n_steps = 0;
    CHECK_THROWS_AS(rc.validate(), ConfigError);
    rc = RunConfig{};
    rc.regime = Regime::coupled;
    CHECK_THROWS_AS(rc.validate(), ConfigError);
    rc = RunConfig{};
    rc.ensemble = EnsembleSpec{};
    CHECK_THROWS_AS(rc.validate(), ConfigError);
    CHECK(RunConfig{}.is_qnd());
    CHECK_FALSE(isolated_config(3, 1.0).is_qnd());
}

TEST_CASE("isolated tracks") {
    const RunConfig rc = isolated_config(100);
    const Track a = run_isolated(rc, 3);
    const Track b = run_isolated(rc, 3);
    CHECK(a.xs.size() == 101);
    CHECK(a.xs == b.xs);
    CHECK(a.seed == derive_seed(rc.master_seed, 3));
    CHECK(run_isolated(rc, 4).xs != a.xs);

    // QND path equals the closed-form simulator on the same stream.
    CounterNormalStream rng(a.seed);
    CHECK(simulate_track(100, QndTheory(1.0, rc.main), rng) == a.xs);

    // Generic tau goes through the scalar step and stays finite.
    const Track g = run_isolated(isolated_config(200, 0.7), 0);
    for (double x : g.xs) CHECK(std::isfinite(x));
}

TEST_CASE("isolated tracks settle") {
    // Mean squared increment over the second half shrinks as the conditional
    // variance 1/(n+1) does.
    const RunConfig rc = isolated_config(100);
    double early = 0.0, late = 0.0;
    for (std::uint64_t r = 0; r < 200; ++r) {
        const auto xs = run_isolated(rc, r).xs;
        for (int n = 51; n <= 60; ++n) early += (xs[n] - xs[n - 1]) * (xs[n] - xs[n - 1]);
        for (int n = 91; n <= 100; ++n) late += (xs[n] - xs[n - 1]) * (xs[n] - xs[n - 1]);
    }
    CHECK(late < early);
}

TEST_CASE("empty bath reduces to the isolated oscillator") {
    for (double tau : {2.0 * M_PI, M_PI / 3.0}) {
        RunConfig iso = isolated_config(1000, tau);
        RunConfig cpl = coupled_config(EnsembleSpec{}, 1000, tau);
        cpl.propagator = PropagatorKind::normal_mode;
        const CoupledModel model = CoupledModel::prepare(cpl);
        const Track a = run_isolated(iso, 5);
        const Track b = run_coupled(model, cpl, 5);
        CHECK(max_abs_diff(a.xs, b.xs) < 1e-10);

        const auto la = conditional_laws_isolated(iso, a.xs);
        const auto lb = conditional_laws_coupled(model, a.xs);
        double dm = 0.0, dv = 0.0;
        for (std::size_t n = 0; n < la.size(); ++n) {
            dm = std::max(dm, std::fabs(la[n].mu - lb[n].mu));
            dv = std::max(dv, std::fabs(la[n].sigma2 - lb[n].sigma2));
        }
        CHECK(dm < 1e-10);
        CHECK(dv < 1e-10);
    }
}

TEST_CASE("matrix propagator refuses a full period with an empty bath") {
    RunConfig cpl = coupled_config(EnsembleSpec{}, 10);
    CHECK_THROWS_AS(CoupledModel::prepare(cpl), PropagatorSingularity);
}

TEST_CASE("decoupled bath leaves the main oscillator alone") {
    const EnsembleSpec ens{{1.0, 1.0, 1.0}, {0.85, 1.0, 1.15}, {0.0, 0.0, 0.0}};
    const double tau = 0.9;
    RunConfig cpl = coupled_config(ens, 300, tau);
    const CoupledModel model = CoupledModel::prepare(cpl);
    const Track b = run_coupled(model, cpl, 2);
    const Track a = run_isolated(isolated_config(300, tau), 2);
    CHECK(max_abs_diff(a.xs, b.xs) < 1e-10);
}

TEST_CASE("coupled tracks are reproducible and audited") {
    const auto main = OscillatorParams::natural();
    RunConfig cpl = coupled_config(build_ohmic_ensemble(main, OhmicConfig{}), 200);
    const CoupledModel model = CoupledModel::prepare(cpl);
    const auto a = run_coupled_audited(model, cpl, 8);
    const auto b = run_coupled_audited(model, cpl, 8);
    CHECK(a.track.xs == b.track.xs);
    CHECK(a.track.xs.size() == 201);
    CHECK(a.min_pd_eig > 0.0);
    CHECK(a.max_asymmetry < kAsymmetryTol);
}

TEST_CASE("first crossing") {
    const std::vector<double> t{0.0, 0.5, -2.0};
    auto r = first_crossing(t, 1.0);
    REQUIRE_FALSE(r.censored());
    CHECK(*r.n_gamma == 2);
    r = first_crossing(std::vector<double>(10, 0.0), 1.0);
    CHECK(r.censored());
    CHECK(r.horizon == 9);
    CHECK(*first_crossing(std::vector<double>{3.0, 0.0}, 1.0).n_gamma == 0);
    // Exactly at the threshold does not count.
    CHECK(first_crossing(std::vector<double>{1.0, -1.0}, 1.0).censored());
    CHECK_THROWS_AS(first_crossing(t, 0.0), DomainError);
    CHECK(first_crossing(t, 1.0, 0.5).epoch() == 1.0);
}

TEST_CASE("crossing minimality on random tracks") {
    const RunConfig rc = isolated_config(100);
    for (std::uint64_t i = 0; i < 200; ++i) {
        const auto xs = run_isolated(rc, i).xs;
        const auto r = first_crossing(xs, 1.2);
        if (r.censored()) {
            for (double x : xs) REQUIRE(std::fabs(x) <= 1.2);
        } else {
            REQUIRE(std::fabs(xs[*r.n_gamma]) > 1.2);
            for (std::uint64_t k = 0; k < *r.n_gamma; ++k) REQUIRE(std::fabs(xs[k]) <= 1.2);
        }
    }
}

TEST_CASE("ccdf") {
    CrossingResult one{3, 1.0, 10, 0.5};
    auto c = ccdf(std::vector<CrossingResult>{one}, 0.5);
    CHECK(c.values.size() == 11);
    CHECK(c.values[2] == 1.0);
    CHECK(c.values[3] == 0.0);
    CHECK(c.grid[3] == 1.5);
    CHECK(c.censored == 0);

    CrossingResult cens{std::nullopt, 1.0, 10, 0.5};
    c = ccdf(std::vector<CrossingResult>(4, cens), 0.5);
    CHECK(c.censored == 4);
    for (double v : c.values) CHECK(v == 1.0);

    CHECK_THROWS_AS(ccdf(std::vector<CrossingResult>{}, 0.5), EmptyInput);
    CrossingResult other{3, 2.0, 10, 0.5};
    CHECK_THROWS_AS(ccdf(std::vector<CrossingResult>{one, other}, 0.5), DomainError);

    std::vector<CrossingResult> mix;
    for (std::uint64_t n : {0, 2, 2, 7}) mix.push_back({n, 1.0, 9, 1.0});
    mix.push_back(cens);
    mix.back().horizon = 9;
    mix.back().tau = 1.0;
    c = ccdf(mix, 1.0);
    for (std::size_t i = 1; i < c.values.size(); ++i) CHECK(c.values[i] <= c.values[i - 1]);
    CHECK(c.values[0] == doctest::Approx(0.8));
    CHECK(c.values.back() == doctest::Approx(0.2));
    const auto cp = c.change_points();
    CHECK(cp == std::vector<std::size_t>{0, 2, 7, 9});
}

TEST_CASE("mean crossing epoch") {
    std::vector<CrossingResult> r{{1, 1.0, 5, 1.0}, {3, 1.0, 5, 1.0}, {std::nullopt, 1.0, 5, 1.0}};
    const auto m = mean_crossing_epoch(r);
    CHECK(m.mean == 2.0);
    CHECK(m.censored == 1);
    CHECK(m.uncensored == 2);
    CHECK(m.stderr_ == doctest::Approx(1.0));
    CHECK_THROWS_AS(mean_crossing_epoch(std::vector<CrossingResult>{{std::nullopt, 1.0, 5, 1.0}}), AllCensored);
    CHECK_THROWS_AS(mean_crossing_epoch(std::vector<CrossingResult>{}), EmptyInput);
}

TEST_CASE("limit point histogram") {
    std::vector<Track> zeros(50);
    for (auto& t : zeros) t.xs = std::vector<double>(11, 0.0);
    const auto h = limit_point_histogram(zeros, 21, 0.355);
    std::size_t nonzero = 0;
    for (auto c : h.counts) nonzero += c > 0;
    CHECK(nonzero == 1);
    const auto it = std::max_element(h.counts.begin(), h.counts.end());
    const auto i = static_cast<std::size_t>(it - h.counts.begin());
    CHECK(*it == 50);
    CHECK(h.edges[i] <= 0.0);
    CHECK(h.edges[i + 1] > 0.0);

    // Density integrates to one; theory curve is the normal density.
    const RunConfig rc = isolated_config(100);
    std::vector<Track> tr;
    for (std::uint64_t r = 0; r < 500; ++r) tr.push_back(run_isolated(rc, r));
    const auto g = limit_point_histogram(tr, 30, limit_variance_factor(1.0));
    double area = 0.0;
    for (std::size_t k = 0; k < g.density.size(); ++k) area += g.density[k] * (g.edges[k + 1] - g.edges[k]);
    CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("KS statistic and critical values") {
    CHECK(ks_statistic({0.0}, [](double x) { return normal_cdf(x, 0.0, 1.0); }) == doctest::Approx(0.5));
    CHECK(ks_critical_value(1000, KsLevel::one_percent) ==
          doctest::Approx(1.628 / (std::sqrt(1000.0) + 0.12 + 0.11 / std::sqrt(1000.0))));
    CHECK(ks_critical_value(100, KsLevel::five_percent) < ks_critical_value(100, KsLevel::one_percent));

    // Calibration: exact N(0,1) samples should fail at 1% about 1% of the time.
    int fails = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        CounterNormalStream g(derive_seed(99, t));
        std::vector<double> s(200);
        for (auto& x : s) x = g.next();
        if (ks_statistic(s, [](double x) { return normal_cdf(x, 0.0, 1.0); }) >
            ks_critical_value(s.size(), KsLevel::one_percent))
            ++fails;
    }
    CHECK(fails <= 12);
}

TEST_CASE("likelihood ratio") {
    const auto main = OscillatorParams::natural();
    RunConfig iso = isolated_config(150);
    RunConfig empty = coupled_config(EnsembleSpec{}, 150);
    empty.propagator = PropagatorKind::normal_mode;
    const CoupledModel m0 = CoupledModel::prepare(empty);
    for (std::uint64_t r = 0; r < 5; ++r) {
        const auto xs = run_isolated(iso, r).xs;
        CHECK(std::fabs(log_likelihood_ratio(xs, iso, m0)) < 1e-9);
    }

    RunConfig cpl = coupled_config(build_ohmic_ensemble(main, OhmicConfig{}), 150);
    const CoupledModel m = CoupledModel::prepare(cpl);
    CHECK(std::fabs(log_likelihood_ratio(std::vector<double>{0.37}, iso, m)) < 1e-12);

    double s_iso = 0.0, s_cpl = 0.0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        s_iso += log_likelihood_ratio(run_isolated(iso, r).xs, iso, m);
        s_cpl += log_likelihood_ratio(run_coupled(m, cpl, r).xs, iso, m);
    }
    CHECK(s_iso < 0.0);
    CHECK(s_cpl > 0.0);
}
