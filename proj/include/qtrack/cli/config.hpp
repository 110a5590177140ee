#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtrack/ensemble_builder.hpp"
#include "qtrack/montecarlo.hpp"

namespace qtrack::cli {

using nlohmann::json;

// Bath described by the ohmic recipe; bandwidth in units of omega.
struct OhmicBlock {
    std::size_t N = 11;
    double bandwidth_over_omega = 1.0 / 3.0;
    double eta = 0.2;
    ZetaBranch branch = ZetaBranch::small;
    double bath_mass_over_m = 1.0;
};

// Either an ohmic recipe or explicit arrays (SI or natural, following the
// oscillator block).
struct BathBlock {
    std::optional<OhmicBlock> ohmic;
    std::optional<EnsembleSpec> explicit_bath;
};

struct CrossingBlock {
    double gamma_over_sigma_gs = 5.0;
    std::uint64_t window_steps = 0;
    std::vector<double> eta_grid;
    std::vector<double> sigma2_device_grid;  // in units of the ground-state variance
    double eta_for_device_grid = 0.02;
    bool include_isolated = true;
};

struct TheoryBlock {
    std::vector<double> sigma2_device_grid;
    std::uint64_t n_max = 0;  // v_n and energy curves when > 0
};

struct DiscriminateBlock {
    BathBlock coupled_hypothesis;
    std::uint64_t n_runs_per_label = 500;
    std::uint64_t n_steps = 200;
};

struct HistogramBlock {
    std::size_t bins = 40;
};

// Parsed, validated experiment document. Times are stored in natural units
// (1/omega) so the resolved document reproduces results bit for bit.
struct ExperimentConfig {
    Units units = Units::SI;
    OscillatorParams oscillator = OscillatorParams::si(1e-26, 1e10);
    double delta = 1.0;

    Regime regime = Regime::isolated;
    std::uint64_t n_steps = 100;
    double tau_natural = 2.0 * M_PI;
    std::uint64_t n_runs = 1;
    std::uint64_t master_seed = 0;
    PropagatorKind propagator = PropagatorKind::matrix;
    InitialBath initial = InitialBath::product;

    std::optional<BathBlock> ensemble;
    std::optional<CrossingBlock> crossing;
    std::optional<TheoryBlock> theory;
    std::optional<DiscriminateBlock> discriminate;
    std::optional<HistogramBlock> histogram;
    std::string out_dir = "qtrack_out";

    // Throws ConfigError on unknown keys, wrong types or out-of-range values.
    static ExperimentConfig from_json(const json& doc);
    // Fully resolved document; from_json(to_json()) is the identity.
    json to_json() const;

    double tau_seconds() const { return tau_natural / oscillator.omega; }
    double length_scale() const { return oscillator.length_scale(); }

    // Natural-unit RunConfig for the main experiment.
    RunConfig run_config() const;
    // Same oscillator/device/tau with a given bath (coupled) or none.
    RunConfig run_config_with(const std::optional<BathBlock>& bath, double delta_override) const;
    EnsembleSpec natural_ensemble(const BathBlock& bath) const;
};

ExperimentConfig load_config(const std::string& path);

}  // namespace qtrack::cli
