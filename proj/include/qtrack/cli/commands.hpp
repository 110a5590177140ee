#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qtrack/cli/config.hpp"

namespace qtrack::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitIo = 1,
    kExitConfig = 2,
    kExitNumerical = 3,
    kExitStatistical = 4,
};

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int threads = 0;  // 0: QTRACK_THREADS, then the OpenMP default
    std::optional<std::string> out_dir;
    double perturb_tau = 0.0;  // relative
    bool strict = false;
};

// Applies --seed, --perturb-tau and --out to a parsed config.
ExperimentConfig apply_overrides(ExperimentConfig cfg, const Options& opt);

// --threads, else QTRACK_THREADS, else 0 (runtime default).
int resolve_threads(const Options& opt);

std::string version_string();

// "%.17g"
std::string format_double(double v);

// Files written by one command. Everything registered is deleted again if
// the command fails part-way.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir);
    std::filesystem::path path(const std::string& name);
    void write_text(const std::string& name, const std::string& contents);
    void write_json(const std::string& name, const json& doc);
    void discard();
    const std::vector<std::filesystem::path>& files() const { return files_; }
    std::vector<std::string> names() const;

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> files_;
};

// Each returns an ExitCode; errors propagate as exceptions.
int cmd_simulate(const ExperimentConfig& cfg, const Options& opt, OutputSet& out, std::ostream& log);
int cmd_theory(const ExperimentConfig& cfg, const Options& opt, OutputSet& out, std::ostream& log);
int cmd_crossing(const ExperimentConfig& cfg, const Options& opt, OutputSet& out, std::ostream& log);
int cmd_discriminate(const ExperimentConfig& cfg, const Options& opt, OutputSet& out, std::ostream& log);
int cmd_selftest(std::ostream& log);

// Loads the config, dispatches, maps exceptions to exit codes and removes
// partial outputs on failure.
int run_command(const std::string& name, const Options& opt, std::ostream& log, std::ostream& err);

}  // namespace qtrack::cli
