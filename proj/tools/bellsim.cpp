#include <CLI11.hpp>

#include "bellsim/cli.hpp"

namespace {

void common_flags(CLI::App* sub, bellsim::cli::CommonOptions& o, bool config) {
    if (config) sub->add_option("--config", o.config_path, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--output", o.output, "output path; side-car files share its stem");
    sub->add_option("--seed", o.seed, "noise seed (overrides the config)");
    sub->add_flag("--reference", o.reference, "single-threaded deterministic evaluation");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace bellsim::cli;
    CLI::App app{"bellsim: collinear two-crystal Bell-state source simulator"};
    app.set_version_flag("--version", BELLSIM_VERSION);
    app.require_subcommand(1);

    CommonOptions opts;
    ScanArgs scan_args;
    std::string parameter;
    std::string grid;
    std::string input;
    std::string target;

    auto* scan = app.add_subcommand("scan", "phase-knob fringe scan");
    common_flags(scan, opts, true);
    scan->add_option("--axis", scan_args.axis, "pump_delay | signal_tilt | idler_tilt | both_tilts | analyzer2_angle");
    scan->add_option("--start", scan_args.start, "first axis value (nm or deg)");
    scan->add_option("--stop", scan_args.stop, "last axis value");
    scan->add_option("--steps", scan_args.steps, "number of points");
    scan->add_flag("--noise", opts.noise, "enable the Poisson counting stage");

    auto* sweep = app.add_subcommand("sweep", "visibility versus a source parameter");
    common_flags(sweep, opts, true);
    sweep->add_option("--parameter", parameter, "crystal_length | filter_fwhm | compensation_error_fs | pump_ratio")
        ->required();
    sweep->add_option("--grid", grid, "start:stop:count or a comma list (may include none)")->required();

    auto* fit = app.add_subcommand("fit", "fit a fringe CSV");
    common_flags(fit, opts, false);
    fit->add_option("--input", input, "CSV with header axis_value,rate")->required();

    auto* prep = app.add_subcommand("prepare", "set knobs for a Bell state");
    common_flags(prep, opts, true);
    prep->add_option("--target", target, "phi+ | phi- | psi+ | psi-")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfig;
    }

    if (*scan) return guarded([&] { return cmd_scan(opts, scan_args); });
    if (*sweep) return guarded([&] { return cmd_sweep(opts, parameter, grid); });
    if (*fit) return guarded([&] { return cmd_fit(opts, input); });
    return guarded([&] { return cmd_prepare(opts, target); });
}
