#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qtrack/cli/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Repeated position measurements on a harmonic oscillator, isolated or coupled to a bath"};
    app.set_version_flag("--version", qtrack::cli::version_string());
    app.require_subcommand(1);

    qtrack::cli::Options opt;
    std::uint64_t seed = 0;
    app.add_option("--config", opt.config_path, "JSON experiment document")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "override run.master_seed");
    app.add_option("--threads", opt.threads, "OpenMP threads (falls back to QTRACK_THREADS)")->check(CLI::PositiveNumber);
    auto* out_opt = app.add_option("--out", "output directory (overrides output.dir)");
    app.add_option("--perturb-tau", opt.perturb_tau, "relative change applied to tau");
    app.add_flag("--strict", opt.strict, "exit 4 on statistical warnings");

    for (const char* name : {"simulate", "theory", "crossing", "discriminate", "selftest"}) {
        auto* sub = app.add_subcommand(name);
        sub->fallthrough();
    }
    app.get_subcommand("simulate")->description("write one CSV per track plus a manifest");
    app.get_subcommand("theory")->description("limit variance curve, v_n and mean energy");
    app.get_subcommand("crossing")->description("first-crossing CCDFs and mean crossing epochs");
    app.get_subcommand("discriminate")->description("log-likelihood-ratio scores, isolated vs coupled");
    app.get_subcommand("selftest")->description("quick internal consistency checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : qtrack::cli::kExitConfig;
    }
    if (*seed_opt) opt.seed = seed;
    if (*out_opt) opt.out_dir = out_opt->as<std::string>();

    const std::string name = app.get_subcommands().front()->get_name();
    return qtrack::cli::run_command(name, opt, std::cout, std::cerr);
}
