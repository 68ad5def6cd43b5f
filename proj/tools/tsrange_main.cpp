// tsrange command line: simulate two-way timestamp exchanges, run the
// pairwise/global estimators, evaluate the constrained Cramer-Rao bound and
// drive the Monte Carlo experiment. See README.md for formats and examples.

#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tsrange/ccrb.hpp"
#include "tsrange/errors.hpp"
#include "tsrange/estimators.hpp"
#include "tsrange/exchange.hpp"
#include "tsrange/montecarlo.hpp"
#include "tsrange/scenario.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIdentifiability = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

tsrange::ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open config file: " + path);
    return tsrange::config_from_json(in);
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot open output file: " + path);
    return out;
}

tsrange::Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open scenario file: " + path);
    return tsrange::read_scenario_json(in);
}

struct Options {
    std::string config_path;
    std::string in_path;
    std::string out_path;
    std::string scenario_path;
    std::string scenario_out_path;
    std::string method = "eegls";
    int reference = 1;
    bool reference_set = false;
    double wave_speed = tsrange::kDefaultWaveSpeed;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

void apply_overrides(tsrange::ExperimentConfig& cfg, const Options& opt) {
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.threads) cfg.threads = *opt.threads;
}

int run_simulate(const Options& opt) {
    auto cfg = load_config(opt.config_path);
    apply_overrides(cfg, opt);
    tsrange::RngStream rng(cfg.seed);
    auto scenario = tsrange::sample_scenario(cfg.nodes, rng, cfg.reference, cfg.ranges);
    scenario.wave_speed = cfg.wave_speed;
    const auto schedule = tsrange::default_schedule(cfg.messages, cfg.span_min, cfg.span_max);
    const auto log = tsrange::simulate_network(scenario, schedule,
                                               tsrange::NoiseSpec{cfg.sigma, cfg.seed},
                                               cfg.effective_pairs(), rng);
    auto out = open_output(opt.out_path);
    tsrange::write_exchange_csv(out, log);
    if (!opt.scenario_out_path.empty()) {
        auto sout = open_output(opt.scenario_out_path);
        tsrange::write_scenario_json(sout, scenario);
    }
    return 0;
}

int run_estimate(const Options& opt) {
    std::ifstream in(opt.in_path);
    if (!in) throw std::ios_base::failure("cannot open exchange log: " + opt.in_path);
    const auto log = tsrange::read_exchange_csv(in);
    if (log.entries.empty()) throw std::invalid_argument("exchange log is empty");

    std::optional<tsrange::Scenario> scenario;
    if (!opt.scenario_path.empty()) scenario = load_scenario(opt.scenario_path);

    int nodes = 0;
    for (const auto& entry : log.entries) nodes = std::max(nodes, entry.pair.j);
    if (scenario) nodes = std::max(nodes, scenario->nodes);
    const double wave_speed = scenario ? scenario->wave_speed : opt.wave_speed;
    const int reference =
        opt.reference_set ? opt.reference : (scenario ? scenario->reference : 1);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto out = open_output(opt.out_path);

    if (opt.method == "eegls") {
        const auto system = tsrange::build_global_system(log, nodes);
        const auto constraints = tsrange::build_constraints(system.layout, reference);
        const auto est = tsrange::eegls_solve(system, constraints, wave_speed);
        std::optional<Eigen::VectorXd> truth;
        if (scenario) truth = scenario->eta(system.layout);
        tsrange::write_estimates_csv(out, system.layout, est.eta, truth,
                                     "method: eegls; reference node " +
                                         std::to_string(reference));
        return 0;
    }

    // eepls: independent solves on the links anchored at the reference node
    std::vector<tsrange::PairIndex> pairs;
    for (const auto& entry : log.entries) pairs.push_back(entry.pair);
    const tsrange::ParamLayout layout(nodes, pairs);
    Eigen::VectorXd eta_hat = Eigen::VectorXd::Constant(layout.size(), nan);
    bool any = false;
    for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
        const auto& pair = pairs[static_cast<std::size_t>(p)];
        if (pair.i != reference && pair.j != reference) continue;
        const auto* entry = log.find(pair);
        const auto ps = tsrange::build_pair_system(*entry, pair.i == reference);
        const auto est = tsrange::eepls_solve(ps, wave_speed);
        const int other = pair.i == reference ? pair.j : pair.i;
        eta_hat[layout.alpha_col(other)] = est.eta[0];
        eta_hat[layout.beta_col(other)] = est.eta[1];
        eta_hat[layout.gamma_col(p)] = est.eta[2];
        eta_hat[layout.delta_col(p)] = est.eta[3];
        eta_hat[layout.epsilon_col(p)] = est.eta[4];
        any = true;
    }
    if (!any)
        throw tsrange::identifiability_error(
            "eepls: the log has no link anchored at reference node " +
            std::to_string(reference));
    std::optional<Eigen::VectorXd> truth;
    if (scenario) truth = scenario->eta(layout);
    tsrange::write_estimates_csv(out, layout, eta_hat, truth,
                                 "method: eepls; covers links anchored at reference node " +
                                     std::to_string(reference));
    return 0;
}

int run_crb(const Options& opt) {
    auto cfg = load_config(opt.config_path);
    apply_overrides(cfg, opt);
    tsrange::Scenario scenario;
    if (!opt.scenario_path.empty()) {
        scenario = load_scenario(opt.scenario_path);
    } else {
        tsrange::RngStream rng(cfg.seed);
        scenario = tsrange::sample_scenario(cfg.nodes, rng, cfg.reference, cfg.ranges);
        scenario.wave_speed = cfg.wave_speed;
    }
    const auto schedule = tsrange::default_schedule(cfg.messages, cfg.span_min, cfg.span_max);
    tsrange::RngStream unused(0);
    const auto clean = tsrange::simulate_network(
        scenario, schedule, tsrange::NoiseSpec{0.0, 0},
        scenario.nodes == cfg.nodes ? cfg.effective_pairs() : tsrange::all_pairs(scenario.nodes),
        unused);
    const auto system = tsrange::build_global_system(clean, scenario.nodes);
    const auto constraints = tsrange::build_constraints(system.layout, scenario.reference);
    const auto crb = tsrange::compute_crb(system, constraints, scenario.theta(system.layout),
                                          cfg.sigma, scenario.wave_speed);
    auto out = open_output(opt.out_path);
    tsrange::write_crb_csv(out, crb, system.layout);
    return 0;
}

int run_montecarlo(const Options& opt) {
    auto cfg = load_config(opt.config_path);
    apply_overrides(cfg, opt);
    const auto result = tsrange::montecarlo(cfg);
    auto out = open_output(opt.out_path);
    tsrange::write_rmse_csv(out, result.rows);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tsrange: joint clock synchronization and time-varying ranging "
                 "from two-way timestamp exchanges"};
    app.require_subcommand(1);
    app.fallthrough();

    Options opt;
    app.add_option("--seed", opt.seed, "override the config RNG seed");
    app.add_option("--threads", opt.threads, "override the config worker thread count");

    auto* simulate = app.add_subcommand("simulate", "sample a scenario and write exchange logs");
    simulate->add_option("--config", opt.config_path, "experiment config JSON")->required();
    simulate->add_option("--out", opt.out_path, "output exchange CSV")->required();
    simulate->add_option("--scenario-out", opt.scenario_out_path,
                         "also write the sampled scenario JSON");

    auto* estimate = app.add_subcommand("estimate", "run an estimator on an exchange log");
    estimate->add_option("--in", opt.in_path, "input exchange CSV")->required();
    estimate->add_option("--method", opt.method, "eepls or eegls")
        ->check(CLI::IsMember({"eepls", "eegls"}));
    estimate->add_option("--ref", opt.reference, "reference node id")
        ->each([&](const std::string&) { opt.reference_set = true; });
    estimate->add_option("--scenario", opt.scenario_path,
                         "scenario JSON supplying ground truth and wave speed");
    estimate->add_option("--wave-speed", opt.wave_speed, "wave speed m/s when no scenario given");
    estimate->add_option("--out", opt.out_path, "output estimates CSV")->required();

    auto* crb = app.add_subcommand("crb", "constrained Cramer-Rao bound for a configuration");
    crb->add_option("--config", opt.config_path, "experiment config JSON")->required();
    crb->add_option("--scenario", opt.scenario_path, "evaluate at this scenario instead of sampling");
    crb->add_option("--out", opt.out_path, "output CRB CSV")->required();

    auto* mc = app.add_subcommand("montecarlo", "RMSE-vs-K experiment against the bound");
    mc->add_option("--config", opt.config_path, "experiment config JSON")->required();
    mc->add_option("--out", opt.out_path, "output RMSE CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return run_simulate(opt);
        if (estimate->parsed()) return run_estimate(opt);
        if (crb->parsed()) return run_crb(opt);
        if (mc->parsed()) return run_montecarlo(opt);
    } catch (const tsrange::identifiability_error& err) {
        std::cerr << "identifiability error: " << err.what() << '\n';
        return kExitIdentifiability;
    } catch (const tsrange::numerical_error& err) {
        std::cerr << "numerical error: " << err.what() << '\n';
        return kExitNumerical;
    } catch (const std::ios_base::failure& err) {
        std::cerr << "io error: " << err.what() << '\n';
        return kExitIo;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
