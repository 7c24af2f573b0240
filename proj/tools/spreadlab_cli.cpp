// spreadlab command-line driver.
//
//   spreadlab sweep <config-file>
//   spreadlab mmse --kc 16 --l 2 --snr 0.5 --trials 200 --seed 7
//   spreadlab prooflab --kc 256 --l 16 --rho 0.1 --trials 50 --seed 1
//   spreadlab selftest
//
// Exit codes: 0 success, 1 validation error (bad flags, bad config, missing
// file), 2 runtime failure.

#include "spreadlab/harness.hpp"
#include "spreadlab/posterior.hpp"
#include "spreadlab/selftest.hpp"

#include "CLI11.hpp"

#include <iomanip>
#include <iostream>

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int cmd_sweep(const std::string& path)
{
    const auto config = spreadlab::load_config(path);
    const auto result = spreadlab::run_sweep(config, &std::cout);
    std::cout << "wrote " << result.cells.size() << " cell(s) to " << config.output << " and "
              << spreadlab::sidecar_path(config.output) << '\n';
    if (!result.failures.empty()) {
        std::cerr << result.failures.size() << " cell(s) failed; see the sidecar's errors array\n";
        return kExitRuntime;
    }
    return 0;
}

struct MmseArgs {
    std::size_t kc = 16;
    std::size_t l = 2;
    double snr = 0.0;
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    std::string signal = "iid_binary";
    std::string gain_model = "rademacher";
    std::string posterior = "auto";
    std::size_t samples = 5000;
};

int cmd_mmse(const MmseArgs& a)
{
    const auto kind = spreadlab::signal_kind_from_string(a.signal);
    const auto x = spreadlab::gen_signal(kind, a.kc, {}, spreadlab::derive_seed(a.seed, 0, 1));
    spreadlab::MmseOptions opts;
    opts.l = a.l;
    opts.model = spreadlab::gain_model_from_string(a.gain_model);
    opts.trials = a.trials;
    opts.seed = spreadlab::derive_seed(a.seed, 1);
    opts.mcmc.samples = a.samples;
    if (a.posterior == "exact")
        opts.choice = spreadlab::PosteriorChoice::exact;
    else if (a.posterior == "mcmc")
        opts.choice = spreadlab::PosteriorChoice::mcmc;
    else if (a.posterior != "auto")
        throw spreadlab::ConfigError("--posterior must be auto, exact or mcmc");
    if (a.l < 1 || a.l >= a.kc)
        throw spreadlab::ConfigError("need 1 <= L < K_c");
    if (a.trials < 1)
        throw spreadlab::ConfigError("--trials must be at least 1");

    const auto mode = spreadlab::resolve_mode(a.kc, a.l, opts.model, opts);
    const auto est = spreadlab::mmse_at(x, a.snr, opts);
    std::cout << std::setprecision(8) << "K_c=" << a.kc << " L=" << a.l << " snr=" << a.snr << " trials=" << a.trials
              << " posterior=" << spreadlab::to_string(mode) << '\n'
              << "mmse = " << est.mean << " +/- " << est.std_error << '\n'
              << "mmse / K_c = " << est.mean / static_cast<double>(a.kc) << '\n';
    return 0;
}

int cmd_prooflab(const spreadlab::ProoflabParams& p)
{
    const auto checks = spreadlab::run_prooflab_battery(p);
    return spreadlab::print_checks(std::cout, checks) ? 0 : kExitRuntime;
}

int cmd_selftest()
{
    const auto checks = spreadlab::run_selftest();
    const bool ok = spreadlab::print_checks(std::cout, checks);
    std::cout << (ok ? "selftest passed" : "selftest FAILED") << '\n';
    return ok ? 0 : kExitRuntime;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"spreadlab: sparse-multipath channel uncertainty laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    auto* sweep = app.add_subcommand("sweep", "Run a scaling sweep described by a config file");
    sweep->add_option("config", config_path, "Config file (key = value lines)")->required();

    MmseArgs margs;
    auto* mmse = app.add_subcommand("mmse", "Single-cell mmse estimate");
    mmse->add_option("--kc", margs.kc, "Samples per coherence period")->required();
    mmse->add_option("--l", margs.l, "Number of paths")->required();
    mmse->add_option("--snr", margs.snr, "Signal-to-noise ratio per degree of freedom")->required();
    mmse->add_option("--trials", margs.trials, "Monte Carlo trials");
    mmse->add_option("--seed", margs.seed, "Root seed");
    mmse->add_option("--signal", margs.signal, "iid_binary | iid_gaussian | ppm");
    mmse->add_option("--gain-model", margs.gain_model, "rademacher | bounded_uniform");
    mmse->add_option("--posterior", margs.posterior, "auto | exact | mcmc");
    mmse->add_option("--samples", margs.samples, "MCMC post-burn-in states per chain");

    spreadlab::ProoflabParams pargs;
    auto* prooflab = app.add_subcommand("prooflab", "Run the proof-term diagnostic battery");
    prooflab->add_option("--kc", pargs.kc, "Samples per coherence period");
    prooflab->add_option("--l", pargs.l, "Number of paths");
    prooflab->add_option("--rho", pargs.rho, "snr as a multiple of the threshold snr");
    prooflab->add_option("--trials", pargs.trials, "Random instances");
    prooflab->add_option("--seed", pargs.seed, "Root seed");

    app.add_subcommand("selftest", "Run the closed-form identity checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kExitValidation;
    }

    try {
        if (*sweep)
            return cmd_sweep(config_path);
        if (*mmse)
            return cmd_mmse(margs);
        if (*prooflab)
            return cmd_prooflab(pargs);
        return cmd_selftest();
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << '\n';
        return kExitRuntime;
    }
}
