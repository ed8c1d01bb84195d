// Batch front end: scenario validation, echo synthesis, cooperative position
// estimation, bound maps and the Monte Carlo RMSE experiment.

#include <CLI11.hpp>

#include <iostream>

#include "isac_coop/commands.hpp"
#include "isac_coop/threading.hpp"

int main(int argc, char** argv) {
    CLI::App app{"cooperative OTFS-ISAC position estimation toolkit"};
    app.require_subcommand(1);

    std::string scenario;
    isac::CliOptions opts;
    opts.threads = isac::default_thread_count();
    uint64_t seed_value = 0;
    int halfwidth_value = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("scenario", scenario, "scenario file")->required();
        sub->add_option("--out", opts.out_dir, "output directory (default: current)");
        sub->add_option("--threads", opts.threads,
                        "worker threads (default: ISAC_COOP_THREADS or hardware)");
        sub->add_option("--seed", seed_value, "override the [mc] seed")
            ->each([&](const std::string&) { opts.seed = seed_value; });
        sub->add_option("--support-halfwidth", halfwidth_value,
                        "subcarrier-offset truncation radius of the fast operator")
            ->each([&](const std::string&) { opts.support_halfwidth = halfwidth_value; });
        sub->add_option("--scale", opts.scale,
                        "desk-scale factor: divides M, N and trial count, coarsens pixels");
        return sub;
    };

    CLI::App* validate = add_common(app.add_subcommand(
        "validate", "parse a scenario, check invariants, print derived quantities"));
    CLI::App* simulate = add_common(app.add_subcommand(
        "simulate", "synthesize per-BS echoes and write dumps plus a manifest"));
    simulate->add_flag("--noiseless", opts.noiseless, "omit the noise term");
    CLI::App* estimate = add_common(app.add_subcommand(
        "estimate", "two-stage cooperative position estimation from simulate outputs"));
    CLI::App* crlb = add_common(app.add_subcommand(
        "crlb", "position error bound maps and bound summary"));
    CLI::App* rmse = add_common(app.add_subcommand(
        "rmse", "Monte Carlo RMSE experiment over waypoints and BS subsets"));

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(validate))
            return isac::cmd_validate(scenario, opts, std::cout);
        if (app.got_subcommand(simulate))
            return isac::cmd_simulate(scenario, opts, std::cout);
        if (app.got_subcommand(estimate))
            return isac::cmd_estimate(scenario, opts, std::cout);
        if (app.got_subcommand(crlb)) return isac::cmd_crlb(scenario, opts, std::cout);
        if (app.got_subcommand(rmse)) return isac::cmd_rmse(scenario, opts, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 2;
}
