#include <doctest.h>

#include <cmath>

#include "qtrack/ensemble_builder.hpp"
#include "qtrack/ensemble_kernel.hpp"

using namespace qtrack;

namespace {

RunConfig coupled_config(std::uint64_t steps, std::uint64_t runs) {
    RunConfig rc;
    rc.regime = Regime::coupled;
    rc.n_steps = steps;
    rc.n_runs = runs;
    rc.master_seed = 77;
    rc.ensemble = build_ohmic_ensemble(rc.main, OhmicConfig{});
    return rc;
}

RunConfig isolated_config(std::uint64_t steps, std::uint64_t runs) {
    RunConfig rc;
    rc.n_steps = steps;
    rc.n_runs = runs;
    rc.master_seed = 77;
    return rc;
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]) / std::max(1.0, std::fabs(b[i])));
    return d;
}

}  // namespace

TEST_CASE("isolated kernel reproduces the serial path exactly") {
    for (double tau : {2.0 * M_PI, 0.8}) {
        RunConfig rc = isolated_config(300, 40);
        rc.tau = tau;
        const auto k = simulate_tracks(rc, nullptr, 5, 20, {.threads = 3});
        REQUIRE(k.size() == 20);
        for (std::uint64_t i = 0; i < 20; ++i) {
            const Track s = run_isolated(rc, 5 + i);
            CHECK(k[i].seed == s.seed);
            CHECK(k[i].xs == s.xs);
        }
    }
}

TEST_CASE("coupled kernel matches the serial path") {
    const RunConfig rc = coupled_config(1000, 16);
    const CoupledModel model = CoupledModel::prepare(rc);
    // Small chunks exercise the chunk and frame boundaries.
    const auto k = simulate_tracks(rc, &model, 0, 16, {.threads = 2, .chunk_steps = 96, .segment = 16});
    for (std::uint64_t i = 0; i < 16; ++i) CHECK(rel_diff(k[i].xs, run_coupled(model, rc, i).xs) < 1e-10);
}

TEST_CASE("gain table chunks") {
    const RunConfig rc = coupled_config(10, 1);
    const CoupledModel model = CoupledModel::prepare(rc);
    CoupledGainTable t(model, 8);
    CoupledGainTable::Chunk c;
    t.next_chunk(24, c);
    CHECK(c.first == 0);
    CHECK(c.count == 24);
    CHECK(c.dim == static_cast<std::size_t>(model.dim()));
    CHECK(c.sigma.size() == 24);
    CHECK(t.next_step() == 24);
    t.next_chunk(8, c);
    CHECK(c.first == 24);
    CHECK(t.max_asymmetry() < kAsymmetryTol);
    // Readout variance matches the serial state.
    CoupledGaussianState s = model.initial_state();
    for (int n = 0; n < 24; ++n) s = model.step(s, 0.0);
    CHECK(c.sigma[0] * c.sigma[0] == doctest::Approx(measurement_distribution_nd(s).sigma2).epsilon(1e-12));
}

TEST_CASE("results do not depend on the thread count") {
    const RunConfig rc = coupled_config(400, 64);
    const CoupledModel model = CoupledModel::prepare(rc);
    const auto a = simulate_tracks(rc, &model, 0, 64, {.threads = 1});
    const auto b = simulate_tracks(rc, &model, 0, 64, {.threads = 4});
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].xs == b[i].xs);

    const double gamma = 1.5;
    const auto c1 = simulate_crossings(rc, &model, gamma, {.threads = 1});
    const auto c4 = simulate_crossings(rc, &model, gamma, {.threads = 4});
    for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i].n_gamma == c4[i].n_gamma);

    const RunConfig iso = isolated_config(400, 64);
    const auto s1 = llr_scores(a, iso, model, {.threads = 1});
    const auto s4 = llr_scores(a, iso, model, {.threads = 4});
    CHECK(s1 == s4);
}

TEST_CASE("kernel crossings agree with serial tracks") {
    const RunConfig iso = isolated_config(500, 100);
    const double gamma = 2.0;
    const auto ci = simulate_crossings(iso, nullptr, gamma, {.threads = 2});
    REQUIRE(ci.size() == 100);
    for (std::uint64_t r = 0; r < 100; ++r) {
        const auto ref = first_crossing(run_isolated(iso, r), gamma, iso.tau);
        CHECK(ci[r].n_gamma == ref.n_gamma);
        CHECK(ci[r].horizon == 500);
        CHECK(ci[r].tau == iso.tau);
    }

    RunConfig rc = coupled_config(2000, 40);
    const CoupledModel model = CoupledModel::prepare(rc);
    const auto cc = simulate_crossings(rc, &model, gamma, {.threads = 2});
    int crossed = 0;
    for (std::uint64_t r = 0; r < 40; ++r) {
        const auto ref = first_crossing(run_coupled(model, rc, r), gamma, rc.tau);
        CHECK(cc[r].n_gamma == ref.n_gamma);
        crossed += !ref.censored();
    }
    CHECK(crossed > 0);
}

TEST_CASE("batched likelihood ratios match the serial function") {
    const RunConfig rc = coupled_config(150, 24);
    const CoupledModel model = CoupledModel::prepare(rc);
    const RunConfig iso = isolated_config(150, 24);
    std::vector<Track> tracks = simulate_tracks(iso, nullptr, 0, 12);
    const auto more = simulate_tracks(rc, &model, 12, 12);
    tracks.insert(tracks.end(), more.begin(), more.end());
    const auto s = llr_scores(tracks, iso, model, {.threads = 3});
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const double ref = log_likelihood_ratio(tracks[i].xs, iso, model);
        CHECK(std::fabs(s[i] - ref) < 1e-8 * std::max(1.0, std::fabs(ref)));
    }
}

TEST_CASE("isolated tracks rarely leave five ground-state widths") {
    const RunConfig iso = isolated_config(100, 10000);
    const auto c = simulate_crossings(iso, nullptr, 5.0);
    std::size_t crossed = 0;
    for (const auto& r : c) crossed += !r.censored();
    CHECK(static_cast<double>(crossed) / 10000.0 < 0.01);
}
