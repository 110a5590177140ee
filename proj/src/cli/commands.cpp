#include "qtrack/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <omp.h>

#include "qtrack/ensemble_kernel.hpp"
#include "qtrack/isolated_qnd.hpp"
#include "qtrack/special.hpp"
#include "qtrack/statistics.hpp"

#ifndef QTRACK_VERSION
#define QTRACK_VERSION "unknown"
#endif

namespace qtrack::cli {

namespace fs = std::filesystem;

std::string version_string() { return QTRACK_VERSION; }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int resolve_threads(const Options& opt) {
    if (opt.threads > 0) return opt.threads;
    if (const char* env = std::getenv("QTRACK_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || n <= 0) throw ConfigError("QTRACK_THREADS must be a positive integer");
        return static_cast<int>(n);
    }
    return 0;
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const Options& opt) {
    if (opt.seed) cfg.master_seed = *opt.seed;
    if (opt.out_dir) cfg.out_dir = *opt.out_dir;
    if (opt.perturb_tau != 0.0) {
        if (!std::isfinite(opt.perturb_tau) || !(opt.perturb_tau > -1.0))
            throw ConfigError("--perturb-tau must be finite and greater than -1");
        cfg.tau_natural *= 1.0 + opt.perturb_tau;
    }
    return cfg;
}

OutputSet::OutputSet(fs::path dir) : dir_(std::move(dir)) {}

fs::path OutputSet::path(const std::string& name) {
    fs::create_directories(dir_);
    fs::path p = dir_ / name;
    files_.push_back(p);
    return p;
}

void OutputSet::write_text(const std::string& name, const std::string& contents) {
    const fs::path p = path(name);
    std::ofstream f(p, std::ios::binary);
    f << contents;
    if (!f) throw std::runtime_error("failed to write " + p.string());
}

void OutputSet::write_json(const std::string& name, const json& doc) { write_text(name, doc.dump(2) + "\n"); }

void OutputSet::discard() {
    std::error_code ec;
    for (const auto& p : files_) fs::remove(p, ec);
    files_.clear();
}

std::vector<std::string> OutputSet::names() const {
    std::vector<std::string> out;
    for (const auto& p : files_) out.push_back(p.filename().string());
    return out;
}

namespace {

KernelOptions kernel_options(const Options& opt) {
    KernelOptions k;
    k.threads = resolve_threads(opt);
    return k;
}

std::string run_file(const char* stem, std::uint64_t r) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%05llu.csv", stem, static_cast<unsigned long long>(r));
    return buf;
}

std::string label_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

json manifest(const ExperimentConfig& cfg, const std::string& command, const OutputSet& out, json extra = {}) {
    json doc = cfg.to_json();
    json prov = {{"command", command}, {"version", version_string()}, {"outputs", out.names()}};
    for (auto it = extra.begin(); it != extra.end(); ++it) prov[it.key()] = it.value();
    doc["provenance"] = prov;
    return doc;
}

// Wrap a null for non-finite values, which JSON cannot carry.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

int cmd_simulate(const ExperimentConfig& cfg, const Options& opt, OutputSet& out, std::ostream& log) {
    const RunConfig rc = cfg.run_config();
    std::optional<CoupledModel> model;
    if (rc.regime == Regime::coupled) model = CoupledModel::prepare(rc);
    const auto tracks = simulate_tracks(rc, model ? &*model : nullptr, 0, rc.n_runs, kernel_options(opt));

    const double tau_s = cfg.tau_seconds();
    const double len = cfg.length_scale();
    json seeds = json::array();
    for (std::uint64_t r = 0; r < tracks.size(); ++r) {
        std::string csv = "step,time_s,x_natural,x_si\n";
        const auto& xs = tracks[r].xs;
        for (std::size_t n = 0; n < xs.size(); ++n) {
            csv += std::to_string(n) + ',' + format_double(static_cast<double>(n) * tau_s) + ',' +
                   format_double(xs[n]) + ',' + format_double(xs[n] * len) + '\n';
        }
        out.write_text(run_file("track", r), csv);
        seeds.push_back(tracks[r].seed);
    }

    if (cfg.histogram) {
        if (rc.regime != Regime::isolated || !rc.is_qnd())
            throw ConfigError("histogram: only defined for isolated runs with tau = one period");
        const double theory_var = limit_variance_factor(rc.device.delta) * rc.main.ground_state_variance();
        const Histogram h = limit_point_histogram(tracks, cfg.histogram->bins, theory_var);
        std::string csv = "bin_lo_natural,bin_hi_natural,count,density,theory_density\n";
        for (std::size_t i = 0; i < h.counts.size(); ++i)
            csv += format_double(h.edges[i]) + ',' + format_double(h.edges[i + 1]) + ',' +
                   std::to_string(h.counts[i]) + ',' + format_double(h.density[i]) + ',' +
                   format_double(h.theory[i]) + '\n';
        out.write_text("histogram.csv", csv);
    }
    out.write_json("manifest.json", manifest(cfg, "simulate", out, {{"seeds", seeds}}));
    log << "simulate: wrote " << tracks.size() << " tracks to " << cfg.out_dir << "\n";
    return kExitOk;
}

int cmd_theory(const ExperimentConfig& cfg, const Options&, OutputSet& out, std::ostream& log) {
    TheoryBlock tb = cfg.theory.value_or(TheoryBlock{});
    if (tb.sigma2_device_grid.empty()) {
        for (int i = 0; i <= 60; ++i) tb.sigma2_device_grid.push_back(std::pow(10.0, -3.0 + 0.1 * i));
    }
    std::string csv = "sigma2_device_over_gs,limit_variance_over_gs\n";
    for (double s2 : tb.sigma2_device_grid) {
        if (!(s2 > 0.0)) throw DomainError("device variance grid points must be positive");
        csv += format_double(s2) + ',' + format_double(limit_variance_factor(1.0 / s2)) + '\n';
    }
    out.write_text("limit_variance.csv", csv);

    if (tb.n_max > 0) {
        const QndTheory th(cfg.delta, OscillatorParams::natural());
        const double hw = th.params.hbar * th.params.omega;
        std::string vcsv = "n,v_n,v_tail_bound,energy_mean_over_hbar_omega\n";
        for (std::uint64_t n = 0; n <= tb.n_max; ++n)
            vcsv += std::to_string(n) + ',' + format_double(v_n(n, cfg.delta)) + ',' +
                    format_double(v_n_tail_bound(n, cfg.delta)) + ',' + format_double(energy_mean(n, th) / hw) + '\n';
        out.write_text("v_n.csv", vcsv);
    }
    out.write_json("manifest.json", manifest(cfg, "theory", out));
    log << "theory: " << tb.sigma2_device_grid.size() << " grid points\n";
    return kExitOk;
}

int cmd_crossing(const ExperimentConfig& cfg, const Options& opt, OutputSet& out, std::ostream& log) {
    CrossingBlock cb = cfg.crossing.value_or(CrossingBlock{});
    if (!cfg.crossing) cb.window_steps = cfg.n_steps;
    struct Point {
        std::string label;
        std::optional<BathBlock> bath;
        double delta;
        std::optional<double> eta;
    };
    std::vector<Point> points;
    const bool grids = !cb.eta_grid.empty() || !cb.sigma2_device_grid.empty();
    if (grids) {
        if (cb.include_isolated) points.push_back({"isolated", std::nullopt, cfg.delta, std::nullopt});
        for (double eta : cb.eta_grid) {
            BathBlock b = *cfg.ensemble;
            b.ohmic->eta = eta;
            points.push_back({"eta_" + label_number(eta), b, cfg.delta, eta});
        }
        for (double s2 : cb.sigma2_device_grid) {
            BathBlock b = *cfg.ensemble;
            b.ohmic->eta = cb.eta_for_device_grid;
            points.push_back({"device_" + label_number(s2), b, 1.0 / s2, cb.eta_for_device_grid});
        }
    } else {
        std::optional<double> eta;
        if (cfg.regime == Regime::coupled && cfg.ensemble->ohmic) eta = cfg.ensemble->ohmic->eta;
        points.push_back({cfg.regime == Regime::coupled ? "coupled" : "isolated",
                          cfg.regime == Regime::coupled ? cfg.ensemble : std::nullopt, cfg.delta, eta});
    }

    const double gamma = cb.gamma_over_sigma_gs;  // natural length unit is the ground-state sigma
    const double tau_s = cfg.tau_seconds();
    json summary = json::array();
    bool warned = false;
    for (const Point& p : points) {
        RunConfig rc = cfg.run_config_with(p.bath, p.delta);
        rc.n_steps = cb.window_steps;
        std::optional<CoupledModel> model;
        if (rc.regime == Regime::coupled) model = CoupledModel::prepare(rc);
        const auto results = simulate_crossings(rc, model ? &*model : nullptr, gamma, kernel_options(opt));

        const CcdfEstimate est = ccdf(results, rc.tau);
        std::string csv = "epoch_s,ccdf\n";
        for (std::size_t i : est.change_points())
            csv += format_double(static_cast<double>(i) * tau_s) + ',' + format_double(est.values[i]) + '\n';
        out.write_text("ccdf_" + p.label + ".csv", csv);

        json row = {{"label", p.label},
                    {"regime", rc.regime == Regime::coupled ? "coupled" : "isolated"},
                    {"delta", p.delta},
                    {"sigma2_device_over_gs", 1.0 / p.delta},
                    {"eta", p.eta ? json(*p.eta) : json(nullptr)},
                    {"gamma_over_sigma_gs", gamma},
                    {"window_steps", rc.n_steps},
                    {"n_runs", est.n_runs},
                    {"censored", est.censored},
                    {"crossing_probability",
                     static_cast<double>(est.n_runs - est.censored) / static_cast<double>(est.n_runs)}};
        try {
            const MeanEpoch m = mean_crossing_epoch(results);
            row["mean_epoch_s"] = m.mean / rc.tau * tau_s;
            row["stderr_epoch_s"] = finite_or_null(m.stderr_ / rc.tau * tau_s);
            row["mean_epoch_steps"] = m.mean / rc.tau;
            row["warning"] = nullptr;
        } catch (const AllCensored& e) {
            row["mean_epoch_s"] = nullptr;
            row["stderr_epoch_s"] = nullptr;
            row["mean_epoch_steps"] = nullptr;
            row["warning"] = std::string("all runs censored: ") + e.what();
            warned = true;
        }
        log << "crossing " << p.label << ": censored " << est.censored << "/" << est.n_runs << "\n";
        summary.push_back(row);
    }
    out.write_json("summary.json", {{"points", summary}});
    out.write_json("manifest.json", manifest(cfg, "crossing", out));
    return warned && opt.strict ? kExitStatistical : kExitOk;
}

int cmd_discriminate(const ExperimentConfig& cfg, const Options& opt, OutputSet& out, std::ostream& log) {
    if (!cfg.discriminate) throw ConfigError("discriminate: the config needs a discriminate block");
    const DiscriminateBlock& db = *cfg.discriminate;
    RunConfig iso = cfg.run_config_with(std::nullopt, cfg.delta);
    RunConfig cpl = cfg.run_config_with(db.coupled_hypothesis, cfg.delta);
    iso.n_steps = cpl.n_steps = db.n_steps;
    iso.n_runs = cpl.n_runs = db.n_runs_per_label;
    const CoupledModel model = CoupledModel::prepare(cpl);
    const KernelOptions ko = kernel_options(opt);

    // Label 0 uses run indices [0, R), label 1 uses [R, 2R).
    const std::uint64_t R = db.n_runs_per_label;
    auto tracks = simulate_tracks(iso, nullptr, 0, R, ko);
    auto coupled_tracks = simulate_tracks(cpl, &model, R, R, ko);
    tracks.insert(tracks.end(), std::make_move_iterator(coupled_tracks.begin()),
                  std::make_move_iterator(coupled_tracks.end()));
    const std::vector<double> scores = llr_scores(tracks, iso, model, ko);

    std::string csv = "run,label,score\n";
    double sum[2] = {0.0, 0.0}, sq[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int label = i < R ? 0 : 1;
        csv += std::to_string(i) + ',' + (label ? "coupled" : "isolated") + ',' + format_double(scores[i]) + '\n';
        sum[label] += scores[i];
        sq[label] += scores[i] * scores[i];
    }
    out.write_text("scores.csv", csv);

    // Smallest error rate of any threshold rule "coupled if score > t".
    std::vector<std::pair<double, int>> ranked;
    for (std::size_t i = 0; i < scores.size(); ++i) ranked.emplace_back(scores[i], i < R ? 0 : 1);
    std::sort(ranked.begin(), ranked.end());
    auto err = static_cast<std::int64_t>(R);  // t below everything: every isolated run misclassified
    std::int64_t best = err;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        err += ranked[i].second == 1 ? 1 : -1;
        if (i + 1 < ranked.size() && ranked[i + 1].first == ranked[i].first) continue;
        best = std::min(best, err);
    }
    const double n = static_cast<double>(R);
    auto sd = [&](int l) { return std::sqrt(std::max(0.0, (sq[l] - sum[l] * sum[l] / n) / std::max(n - 1.0, 1.0))); };
    const json summary = {{"n_runs_per_label", R},
                          {"n_steps", db.n_steps},
                          {"mean_score_isolated", sum[0] / n},
                          {"mean_score_coupled", sum[1] / n},
                          {"sd_score_isolated", sd(0)},
                          {"sd_score_coupled", sd(1)},
                          {"overlap", static_cast<double>(best) / (2.0 * n)}};
    out.write_json("summary.json", summary);
    out.write_json("manifest.json", manifest(cfg, "discriminate", out));
    log << "discriminate: overlap " << summary["overlap"].get<double>() << "\n";
    return kExitOk;
}

int cmd_selftest(std::ostream& log) {
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        log << "selftest " << name << ": " << (ok ? "pass" : "FAIL") << "\n";
        if (!ok) ++failures;
    };
    check("trigamma(1) = pi^2/6", std::fabs(trigamma(1.0) - M_PI * M_PI / 6.0) < 1e-14);
    check("limit factor at delta=1", std::fabs(limit_variance_factor(1.0) - (2.0 - M_PI * M_PI / 6.0)) < 1e-14);
    check("seed mixer test vector", derive_seed(0, 0) == 0ULL && derive_seed(1, 0) == mix64(1));
    {
        OhmicConfig oc;
        const OscillatorParams nat = OscillatorParams::natural();
        const SystemMatrices sys = build_matrices(nat, build_ohmic_ensemble(nat, oc));
        check("coupling ratio", std::fabs(coupling_ratio(sys) - 0.2 / (1.0 + 0.04 / 11.0)) < 1e-12);
    }
    {
        RunConfig rc;
        rc.n_steps = 200;
        rc.master_seed = 7;
        const Track iso = run_isolated(rc, 0);
        rc.regime = Regime::coupled;
        rc.ensemble = EnsembleSpec{};
        rc.propagator = PropagatorKind::normal_mode;
        const CoupledModel m = CoupledModel::prepare(rc);
        const Track cpl = run_coupled(m, rc, 0);
        double d = 0.0;
        for (std::size_t n = 0; n < iso.xs.size(); ++n) d = std::max(d, std::fabs(iso.xs[n] - cpl.xs[n]));
        check("empty bath reduces to the isolated oscillator", d < 1e-10);
    }
    {
        RunConfig rc;
        rc.regime = Regime::coupled;
        rc.n_steps = 300;
        rc.n_runs = 2;
        rc.master_seed = 11;
        rc.ensemble = build_ohmic_ensemble(rc.main, OhmicConfig{});
        const CoupledModel m = CoupledModel::prepare(rc);
        const auto fast = simulate_tracks(rc, &m, 0, 2);
        double d = 0.0;
        for (std::uint64_t r = 0; r < 2; ++r) {
            const Track ref = run_coupled(m, rc, r);
            for (std::size_t n = 0; n < ref.xs.size(); ++n) d = std::max(d, std::fabs(ref.xs[n] - fast[r].xs[n]));
        }
        check("ensemble kernel matches the serial reference", d < 1e-9);
    }
    return failures == 0 ? kExitOk : kExitNumerical;
}

int run_command(const std::string& name, const Options& opt, std::ostream& log, std::ostream& err) {
    std::optional<OutputSet> out;
    try {
        const int threads = resolve_threads(opt);
        if (threads > 0) omp_set_num_threads(threads);
        if (name == "selftest") return cmd_selftest(log);

        ExperimentConfig cfg = opt.config_path.empty() ? ExperimentConfig::from_json(json::object())
                                                       : load_config(opt.config_path);
        cfg = apply_overrides(std::move(cfg), opt);
        out.emplace(cfg.out_dir);
        if (name == "simulate") return cmd_simulate(cfg, opt, *out, log);
        if (name == "theory") return cmd_theory(cfg, opt, *out, log);
        if (name == "crossing") return cmd_crossing(cfg, opt, *out, log);
        if (name == "discriminate") return cmd_discriminate(cfg, opt, *out, log);
        throw ConfigError("unknown command '" + name + "'");
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        if (out) out->discard();
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << "\n";
        if (out) out->discard();
        return kExitConfig;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << "\n";
        if (out) out->discard();
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        if (out) out->discard();
        return kExitIo;
    }
}

}  // namespace qtrack::cli
