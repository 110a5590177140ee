#include "qtrack/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qtrack::cli {

namespace {

// Keyed access to one JSON object that remembers which keys were read, so
// leftovers can be reported as unknown.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(where(key) + ": must be finite");
        return d;
    }
    double positive(const std::string& key) {
        const double d = number(key);
        if (!(d > 0.0)) throw ConfigError(where(key) + ": must be positive");
        return d;
    }
    std::uint64_t count(const std::string& key) {
        const json& v = raw(key);
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
        throw ConfigError(where(key) + ": expected a non-negative integer");
    }
    std::uint64_t positive_count(const std::string& key) {
        const std::uint64_t n = count(key);
        if (n == 0) throw ConfigError(where(key) + ": must be positive");
        return n;
    }
    std::string text(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
        return v.get<std::string>();
    }
    bool flag(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
        return v.get<bool>();
    }
    std::vector<double> numbers(const std::string& key, bool positive_only) {
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
            const double d = e.get<double>();
            if (!std::isfinite(d) || (positive_only && !(d > 0.0)))
                throw ConfigError(where(key) + ": entries must be finite" + (positive_only ? " and positive" : ""));
            out.push_back(d);
        }
        return out;
    }
    Section child(const std::string& key) { return Section(raw(key), where(key)); }

    template <class E>
    E choice(const std::string& key, std::initializer_list<std::pair<const char*, E>> options) {
        const std::string s = text(key);
        for (const auto& [name, value] : options)
            if (s == name) return value;
        std::string allowed;
        for (const auto& [name, value] : options) allowed += std::string(allowed.empty() ? "" : ", ") + name;
        throw ConfigError(where(key) + ": '" + s + "' is not one of " + allowed);
    }

    // Throws on any key that was never read.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
    }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string prefix() const { return path_.empty() ? std::string() : path_ + ": "; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

const char* branch_name(ZetaBranch b) { return b == ZetaBranch::small ? "small" : "large"; }

OhmicBlock parse_ohmic(Section s) {
    OhmicBlock o;
    if (s.has("N")) o.N = s.positive_count("N");
    if (s.has("bandwidth_over_omega")) o.bandwidth_over_omega = s.positive("bandwidth_over_omega");
    if (s.has("eta")) o.eta = s.number("eta");
    if (s.has("branch"))
        o.branch = s.choice<ZetaBranch>("branch", {{"small", ZetaBranch::small}, {"large", ZetaBranch::large}});
    if (s.has("bath_mass_over_m")) o.bath_mass_over_m = s.positive("bath_mass_over_m");
    s.finish();
    if (!(o.eta > 0.0 && o.eta < 1.0)) throw ConfigError(s.where("eta") + ": must lie in (0, 1)");
    if (!(o.bandwidth_over_omega < 2.0))
        throw ConfigError(s.where("bandwidth_over_omega") + ": band must stay above zero frequency (< 2)");
    return o;
}

struct ExplicitKeys {
    const char* masses;
    const char* frequencies;
    const char* couplings;
};

ExplicitKeys explicit_keys(Units u) {
    if (u == Units::SI) return {"masses_kg", "frequencies_rad_s", "couplings_N_per_m"};
    return {"masses_over_m", "frequencies_over_omega", "couplings_over_m_omega2"};
}

BathBlock parse_bath(Section s, Units units) {
    BathBlock b;
    if (s.has("ohmic") == s.has("explicit"))
        throw ConfigError(s.prefix() + "exactly one of 'ohmic' or 'explicit' is required");
    if (s.has("ohmic")) {
        b.ohmic = parse_ohmic(s.child("ohmic"));
    } else {
        Section e = s.child("explicit");
        const ExplicitKeys k = explicit_keys(units);
        for (const char* key : {k.masses, k.frequencies, k.couplings})
            if (!e.has(key)) throw ConfigError(e.where(key) + ": required");
        EnsembleSpec ens;
        ens.masses = e.numbers(k.masses, true);
        ens.frequencies = e.numbers(k.frequencies, true);
        ens.couplings = e.numbers(k.couplings, false);
        e.finish();
        try {
            ens.validate();
        } catch (const DomainError& err) {
            throw ConfigError(e.prefix() + err.what());
        }
        b.explicit_bath = std::move(ens);
    }
    s.finish();
    return b;
}

json bath_to_json(const BathBlock& b, Units units) {
    if (b.ohmic) {
        const OhmicBlock& o = *b.ohmic;
        return {{"ohmic",
                 {{"N", o.N},
                  {"bandwidth_over_omega", o.bandwidth_over_omega},
                  {"eta", o.eta},
                  {"branch", branch_name(o.branch)},
                  {"bath_mass_over_m", o.bath_mass_over_m}}}};
    }
    const ExplicitKeys k = explicit_keys(units);
    const EnsembleSpec& e = *b.explicit_bath;
    return {{"explicit", {{k.masses, e.masses}, {k.frequencies, e.frequencies}, {k.couplings, e.couplings}}}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
    ExperimentConfig c;
    Section root(doc, "");

    if (root.has("oscillator")) {
        Section o = root.child("oscillator");
        c.units = o.has("units") ? o.choice<Units>("units", {{"SI", Units::SI}, {"natural", Units::natural}})
                                 : Units::SI;
        if (c.units == Units::SI) {
            const double m = o.has("mass_kg") ? o.positive("mass_kg") : 1e-26;
            const double w = o.has("omega_rad_s") ? o.positive("omega_rad_s") : 1e10;
            const double h = o.has("hbar_J_s") ? o.positive("hbar_J_s") : kHbarSI;
            c.oscillator = OscillatorParams::si(m, w, h);
        } else {
            c.oscillator = OscillatorParams::natural();
        }
        o.finish();
    }

    if (root.has("measurement")) {
        Section m = root.child("measurement");
        if (m.has("delta") && m.has("sigma2_device_over_gs"))
            throw ConfigError("measurement: give either delta or sigma2_device_over_gs, not both");
        if (m.has("delta")) c.delta = m.positive("delta");
        if (m.has("sigma2_device_over_gs")) c.delta = 1.0 / m.positive("sigma2_device_over_gs");
        m.finish();
    }

    if (root.has("run")) {
        Section r = root.child("run");
        if (r.has("regime"))
            c.regime = r.choice<Regime>("regime", {{"isolated", Regime::isolated}, {"coupled", Regime::coupled}});
        const int tau_keys = r.has("tau_periods") + r.has("tau_s") + r.has("tau_natural");
        if (tau_keys > 1) throw ConfigError("run: give at most one of tau_periods, tau_s, tau_natural");
        if (r.has("tau_periods")) c.tau_natural = 2.0 * M_PI * r.positive("tau_periods");
        if (r.has("tau_natural")) c.tau_natural = r.positive("tau_natural");
        if (r.has("tau_s")) {
            if (c.units != Units::SI) throw ConfigError("run.tau_s: only valid with SI units");
            c.tau_natural = r.positive("tau_s") * c.oscillator.omega;
        }
        if (r.has("n_steps") && r.has("window_s")) throw ConfigError("run: give either n_steps or window_s");
        if (r.has("n_steps")) c.n_steps = r.positive_count("n_steps");
        if (r.has("window_s")) {
            if (c.units != Units::SI) throw ConfigError("run.window_s: only valid with SI units");
            c.n_steps = static_cast<std::uint64_t>(std::floor(r.positive("window_s") / c.tau_seconds()));
            if (c.n_steps == 0) throw ConfigError("run.window_s: shorter than one measurement interval");
        }
        if (r.has("n_runs")) c.n_runs = r.positive_count("n_runs");
        if (r.has("master_seed")) c.master_seed = r.count("master_seed");
        if (r.has("propagator"))
            c.propagator = r.choice<PropagatorKind>(
                "propagator", {{"matrix", PropagatorKind::matrix}, {"normal_mode", PropagatorKind::normal_mode}});
        if (r.has("initial_bath"))
            c.initial = r.choice<InitialBath>(
                "initial_bath", {{"product", InitialBath::product}, {"normal_mode", InitialBath::normal_mode}});
        r.finish();
    }

    if (root.has("ensemble")) c.ensemble = parse_bath(root.child("ensemble"), c.units);
    if (c.regime == Regime::coupled && !c.ensemble) throw ConfigError("run.regime: coupled requires an ensemble block");

    if (root.has("crossing")) {
        Section x = root.child("crossing");
        CrossingBlock b;
        b.window_steps = c.n_steps;
        if (x.has("gamma_over_sigma_gs")) b.gamma_over_sigma_gs = x.positive("gamma_over_sigma_gs");
        if (x.has("window_steps") && x.has("window_s"))
            throw ConfigError("crossing: give either window_steps or window_s");
        if (x.has("window_steps")) b.window_steps = x.positive_count("window_steps");
        if (x.has("window_s")) {
            if (c.units != Units::SI) throw ConfigError("crossing.window_s: only valid with SI units");
            b.window_steps = static_cast<std::uint64_t>(std::floor(x.positive("window_s") / c.tau_seconds()));
            if (b.window_steps == 0) throw ConfigError("crossing.window_s: shorter than one measurement interval");
        }
        if (x.has("eta_grid")) b.eta_grid = x.numbers("eta_grid", false);
        for (double e : b.eta_grid)
            if (!(e > 0.0 && e < 1.0)) throw ConfigError("crossing.eta_grid: entries must lie in (0, 1)");
        if (x.has("sigma2_device_over_gs_grid")) b.sigma2_device_grid = x.numbers("sigma2_device_over_gs_grid", true);
        if (x.has("eta_for_device_grid")) b.eta_for_device_grid = x.number("eta_for_device_grid");
        if (!(b.eta_for_device_grid > 0.0 && b.eta_for_device_grid < 1.0))
            throw ConfigError("crossing.eta_for_device_grid: must lie in (0, 1)");
        if (x.has("include_isolated")) b.include_isolated = x.flag("include_isolated");
        x.finish();
        if ((!b.eta_grid.empty() || !b.sigma2_device_grid.empty()) && !(c.ensemble && c.ensemble->ohmic))
            throw ConfigError("crossing: eta and device grids need an ohmic ensemble block as template");
        c.crossing = std::move(b);
    }

    if (root.has("theory")) {
        Section t = root.child("theory");
        TheoryBlock b;
        if (t.has("sigma2_device_over_gs_grid")) b.sigma2_device_grid = t.numbers("sigma2_device_over_gs_grid", true);
        if (t.has("n_max")) b.n_max = t.count("n_max");
        t.finish();
        c.theory = std::move(b);
    }

    if (root.has("discriminate")) {
        Section d = root.child("discriminate");
        DiscriminateBlock b;
        if (!d.has("coupled_hypothesis")) throw ConfigError("discriminate.coupled_hypothesis: required");
        b.coupled_hypothesis = parse_bath(d.child("coupled_hypothesis"), c.units);
        if (d.has("isolated_hypothesis")) {
            Section iso = d.child("isolated_hypothesis");
            iso.finish();  // the isolated hypothesis has no parameters of its own
        }
        if (d.has("n_runs_per_label")) b.n_runs_per_label = d.positive_count("n_runs_per_label");
        if (d.has("n_steps")) b.n_steps = d.positive_count("n_steps");
        d.finish();
        c.discriminate = std::move(b);
    }

    if (root.has("histogram")) {
        Section h = root.child("histogram");
        HistogramBlock b;
        if (h.has("bins")) b.bins = h.positive_count("bins");
        h.finish();
        c.histogram = b;
    }

    if (root.has("output")) {
        Section o = root.child("output");
        if (o.has("dir")) c.out_dir = o.text("dir");
        o.finish();
    }
    if (root.has("provenance")) root.raw("provenance");  // written by manifests, not interpreted
    root.finish();

    try {
        c.run_config().validate();
        if (c.ensemble) {
            const EnsembleSpec e = c.natural_ensemble(*c.ensemble);
            e.validate();
        }
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

json ExperimentConfig::to_json() const {
    json doc;
    if (units == Units::SI)
        doc["oscillator"] = {{"units", "SI"},
                             {"mass_kg", oscillator.mass},
                             {"omega_rad_s", oscillator.omega},
                             {"hbar_J_s", oscillator.hbar}};
    else
        doc["oscillator"] = {{"units", "natural"}};
    doc["measurement"] = {{"delta", delta}};
    doc["run"] = {{"regime", regime == Regime::isolated ? "isolated" : "coupled"},
                  {"n_steps", n_steps},
                  {"tau_natural", tau_natural},
                  {"n_runs", n_runs},
                  {"master_seed", master_seed},
                  {"propagator", propagator == PropagatorKind::matrix ? "matrix" : "normal_mode"},
                  {"initial_bath", initial == InitialBath::product ? "product" : "normal_mode"}};
    if (ensemble) doc["ensemble"] = bath_to_json(*ensemble, units);
    if (crossing)
        doc["crossing"] = {{"gamma_over_sigma_gs", crossing->gamma_over_sigma_gs},
                           {"window_steps", crossing->window_steps},
                           {"eta_grid", crossing->eta_grid},
                           {"sigma2_device_over_gs_grid", crossing->sigma2_device_grid},
                           {"eta_for_device_grid", crossing->eta_for_device_grid},
                           {"include_isolated", crossing->include_isolated}};
    if (theory)
        doc["theory"] = {{"sigma2_device_over_gs_grid", theory->sigma2_device_grid}, {"n_max", theory->n_max}};
    if (discriminate)
        doc["discriminate"] = {{"coupled_hypothesis", bath_to_json(discriminate->coupled_hypothesis, units)},
                               {"isolated_hypothesis", json::object()},
                               {"n_runs_per_label", discriminate->n_runs_per_label},
                               {"n_steps", discriminate->n_steps}};
    if (histogram) doc["histogram"] = {{"bins", histogram->bins}};
    doc["output"] = {{"dir", out_dir}};
    return doc;
}

EnsembleSpec ExperimentConfig::natural_ensemble(const BathBlock& bath) const {
    if (bath.ohmic) {
        const OhmicBlock& o = *bath.ohmic;
        OhmicConfig oc;
        oc.N = o.N;
        oc.bandwidth = o.bandwidth_over_omega;
        oc.eta = o.eta;
        oc.branch = o.branch;
        const OscillatorParams nat = OscillatorParams::natural();
        return build_ohmic_ensemble(nat, oc, std::vector<double>(o.N, o.bath_mass_over_m));
    }
    if (units == Units::SI) return to_natural(*bath.explicit_bath, oscillator);
    return *bath.explicit_bath;
}

RunConfig ExperimentConfig::run_config_with(const std::optional<BathBlock>& bath, double delta_override) const {
    RunConfig rc;
    rc.regime = bath ? Regime::coupled : Regime::isolated;
    rc.n_steps = n_steps;
    rc.tau = tau_natural;
    rc.device.delta = delta_override;
    rc.main = OscillatorParams::natural();
    if (bath) rc.ensemble = natural_ensemble(*bath);
    rc.n_runs = n_runs;
    rc.master_seed = master_seed;
    rc.propagator = propagator;
    rc.initial = initial;
    return rc;
}

RunConfig ExperimentConfig::run_config() const {
    return run_config_with(regime == Regime::coupled ? ensemble : std::nullopt, delta);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return ExperimentConfig::from_json(doc);
}

}  // namespace qtrack::cli
