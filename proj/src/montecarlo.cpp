#include "tsrange/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "format.hpp"
#include "tsrange/errors.hpp"

namespace tsrange {

const char* estimator_name(Estimator e) { return e == Estimator::eepls ? "eepls" : "eegls"; }

const char* group_name(ParamGroup g) {
    switch (g) {
    case ParamGroup::omega: return "omega";
    case ParamGroup::phi: return "phi";
    case ParamGroup::rddot: return "rddot";
    case ParamGroup::rdot: return "rdot";
    case ParamGroup::r: return "r";
    }
    return "?";
}

std::vector<PairIndex> ExperimentConfig::effective_pairs() const {
    if (pairs.empty()) return all_pairs(nodes);
    std::vector<PairIndex> out = pairs;
    for (const auto& p : out) pair_index(p.i, p.j, nodes); // validates
    std::sort(out.begin(), out.end(), [](const PairIndex& a, const PairIndex& b) {
        return std::pair(a.i, a.j) < std::pair(b.i, b.j);
    });
    return out;
}

namespace {

void validate(const ExperimentConfig& cfg) {
    if (cfg.nodes < 2) throw std::invalid_argument("config: need at least 2 nodes");
    if (cfg.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (cfg.k_list.empty()) throw std::invalid_argument("config: k_list must not be empty");
    for (int k : cfg.k_list)
        if (k < 5) throw std::invalid_argument("config: k_list entries must be >= 5");
    if (!(cfg.sigma > 0.0)) throw std::invalid_argument("config: sigma_s must be positive");
    if (!(cfg.span_min < cfg.span_max)) throw std::invalid_argument("config: empty span_s");
    if (cfg.reference < 1 || cfg.reference > cfg.nodes)
        throw std::invalid_argument("config: reference node out of range");
    if (cfg.messages < 1) throw std::invalid_argument("config: k must be >= 1");
    if (cfg.threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    if (!cfg.run_eepls && !cfg.run_eegls)
        throw std::invalid_argument("config: no estimators enabled");
    if (!(cfg.wave_speed > 0.0))
        throw std::invalid_argument("config: wave_speed_mps must be positive");
    cfg.effective_pairs();
}

const std::set<std::string> kKnownKeys = {
    "nodes",     "k_list", "k",     "trials",  "sigma_s",        "seed",
    "span_s",    "reference", "pairs", "estimators", "wave_speed_mps", "threads",
    "ranges"};
const std::set<std::string> kKnownRangeKeys = {"skew_halfwidth", "offset_max_s",
                                               "range_accel_max_mps2", "range_rate_max_mps",
                                               "range_max_m"};

} // namespace

ExperimentConfig config_from_json(std::istream& in) {
    nlohmann::json j;
    in >> j;
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!kKnownKeys.count(key))
            throw std::invalid_argument("config: unknown key \"" + key + "\"");
    }
    ExperimentConfig cfg;
    cfg.nodes = j.value("nodes", cfg.nodes);
    if (j.contains("k_list")) cfg.k_list = j.at("k_list").get<std::vector<int>>();
    cfg.messages = j.value("k", cfg.messages);
    cfg.trials = j.value("trials", cfg.trials);
    cfg.sigma = j.value("sigma_s", cfg.sigma);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("span_s")) {
        const auto span = j.at("span_s").get<std::vector<double>>();
        if (span.size() != 2) throw std::invalid_argument("config: span_s must be [min, max]");
        cfg.span_min = span[0];
        cfg.span_max = span[1];
    }
    cfg.reference = j.value("reference", cfg.reference);
    if (j.contains("pairs")) {
        for (const auto& pj : j.at("pairs")) {
            const auto ids = pj.get<std::vector<int>>();
            if (ids.size() != 2) throw std::invalid_argument("config: pairs entries must be [i, j]");
            cfg.pairs.push_back(PairIndex{ids[0], ids[1]});
        }
    }
    if (j.contains("estimators")) {
        cfg.run_eepls = cfg.run_eegls = false;
        for (const auto& name : j.at("estimators").get<std::vector<std::string>>()) {
            if (name == "eepls") cfg.run_eepls = true;
            else if (name == "eegls") cfg.run_eegls = true;
            else throw std::invalid_argument("config: unknown estimator \"" + name + "\"");
        }
    }
    cfg.wave_speed = j.value("wave_speed_mps", cfg.wave_speed);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("ranges")) {
        const auto& rj = j.at("ranges");
        for (const auto& [key, value] : rj.items()) {
            if (!kKnownRangeKeys.count(key))
                throw std::invalid_argument("config: unknown ranges key \"" + key + "\"");
        }
        cfg.ranges.skew_halfwidth = rj.value("skew_halfwidth", cfg.ranges.skew_halfwidth);
        cfg.ranges.offset_max = rj.value("offset_max_s", cfg.ranges.offset_max);
        cfg.ranges.range_accel_max =
            rj.value("range_accel_max_mps2", cfg.ranges.range_accel_max);
        cfg.ranges.range_rate_max = rj.value("range_rate_max_mps", cfg.ranges.range_rate_max);
        cfg.ranges.range_max = rj.value("range_max_m", cfg.ranges.range_max);
    }
    validate(cfg);
    return cfg;
}

TrialOutput run_trial(const ExperimentConfig& config, int messages, int trial_index) {
    RngStream rng(config.seed + static_cast<std::uint64_t>(trial_index));
    Scenario scenario =
        sample_scenario(config.nodes, rng, config.reference, config.ranges);
    scenario.wave_speed = config.wave_speed;
    const Schedule schedule = default_schedule(messages, config.span_min, config.span_max);
    const auto pairs = config.effective_pairs();

    // noise-free log first (consumes no draws), then the observed one
    const ExchangeLog clean = simulate_network(scenario, schedule, NoiseSpec{0.0, 0}, pairs, rng);
    const ExchangeLog observed =
        simulate_network(scenario, schedule, NoiseSpec{config.sigma, 0}, pairs, rng);

    const GlobalSystem clean_system = build_global_system(clean, config.nodes);
    const ParamLayout& layout = clean_system.layout;
    const Eigen::VectorXd eta_true = scenario.eta(layout);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    TrialOutput out;
    out.sq_err_eepls = Eigen::VectorXd::Constant(layout.size(), nan);
    out.sq_err_eegls = Eigen::VectorXd::Constant(layout.size(), nan);
    out.crb_diag = Eigen::VectorXd::Constant(layout.size(), nan);

    const ConstraintSet constraints = build_constraints(layout, config.reference);

    if (config.run_eegls) {
        try {
            const GlobalSystem gs = build_global_system(observed, config.nodes);
            const Estimate est = eegls_solve(gs, constraints, config.wave_speed);
            out.sq_err_eegls = (est.eta - eta_true).array().square();
            out.eegls_ok = true;
        } catch (const identifiability_error&) {
        } catch (const numerical_error&) {
        } catch (const std::domain_error&) {
        }
    }

    if (config.run_eepls) {
        try {
            bool any = false;
            Eigen::VectorXd sq = Eigen::VectorXd::Constant(layout.size(), nan);
            for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
                const PairIndex& pair = pairs[static_cast<std::size_t>(p)];
                if (pair.i != config.reference && pair.j != config.reference) continue;
                const PairLog* entry = observed.find(pair);
                if (entry == nullptr) continue;
                const PairSystem ps = build_pair_system(*entry, pair.i == config.reference);
                const Estimate est = eepls_solve(ps, config.wave_speed);
                const int other = pair.i == config.reference ? pair.j : pair.i;
                sq[layout.alpha_col(other)] =
                    std::pow(est.eta[0] - eta_true[layout.alpha_col(other)], 2);
                sq[layout.beta_col(other)] =
                    std::pow(est.eta[1] - eta_true[layout.beta_col(other)], 2);
                sq[layout.gamma_col(p)] = std::pow(est.eta[2] - eta_true[layout.gamma_col(p)], 2);
                sq[layout.delta_col(p)] = std::pow(est.eta[3] - eta_true[layout.delta_col(p)], 2);
                sq[layout.epsilon_col(p)] =
                    std::pow(est.eta[4] - eta_true[layout.epsilon_col(p)], 2);
                any = true;
            }
            if (any) {
                out.sq_err_eepls = sq;
                out.eepls_ok = true;
            }
        } catch (const identifiability_error&) {
        } catch (const numerical_error&) {
        } catch (const std::domain_error&) {
        }
    }

    try {
        const CrbResult crb = compute_crb(clean_system, constraints, scenario.theta(layout),
                                          config.sigma, config.wave_speed);
        out.crb_diag = crb.sigma_eta.diagonal();
        out.crb_ok = true;
    } catch (const identifiability_error&) {
    } catch (const numerical_error&) {
    } catch (const std::domain_error&) {
    }
    return out;
}

std::vector<int> group_entries(const ParamLayout& layout, ParamGroup group,
                               Estimator estimator, int reference) {
    std::vector<int> cols;
    const auto has_reference_link = [&](int node) {
        const PairIndex pair{std::min(node, reference), std::max(node, reference)};
        return layout.find_pair(pair) >= 0;
    };
    if (group == ParamGroup::omega || group == ParamGroup::phi) {
        for (int n = 1; n <= layout.nodes(); ++n) {
            if (n == reference) continue; // pinned by the constraint
            if (estimator == Estimator::eepls && !has_reference_link(n)) continue;
            cols.push_back(group == ParamGroup::omega ? layout.alpha_col(n)
                                                      : layout.beta_col(n));
        }
        return cols;
    }
    const auto& pairs = layout.pairs();
    for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
        if (estimator == Estimator::eepls && pairs[static_cast<std::size_t>(p)].i != reference &&
            pairs[static_cast<std::size_t>(p)].j != reference)
            continue;
        switch (group) {
        case ParamGroup::rddot: cols.push_back(layout.gamma_col(p)); break;
        case ParamGroup::rdot: cols.push_back(layout.delta_col(p)); break;
        case ParamGroup::r: cols.push_back(layout.epsilon_col(p)); break;
        default: break;
        }
    }
    return cols;
}

std::vector<RmseRow> aggregate_rmse(const ExperimentConfig& config, int messages,
                                    const std::vector<TrialOutput>& outputs) {
    const ParamLayout layout(config.nodes, config.effective_pairs());
    std::vector<RmseRow> rows;
    for (Estimator estimator : {Estimator::eepls, Estimator::eegls}) {
        if (estimator == Estimator::eepls && !config.run_eepls) continue;
        if (estimator == Estimator::eegls && !config.run_eegls) continue;
        std::vector<const TrialOutput*> good;
        for (const auto& t : outputs) {
            const bool ok = (estimator == Estimator::eepls ? t.eepls_ok : t.eegls_ok) && t.crb_ok;
            if (ok) good.push_back(&t);
        }
        if (good.empty())
            throw numerical_error(std::string("aggregate_rmse: no successful trials for ") +
                                  estimator_name(estimator));
        const long failed = static_cast<long>(outputs.size() - good.size());
        for (ParamGroup group : kAllGroups) {
            const auto entries = group_entries(layout, group, estimator, config.reference);
            if (entries.empty()) continue;
            double sum_sq = 0.0;
            double sum_crb = 0.0;
            for (const TrialOutput* t : good) {
                for (int col : entries) {
                    sum_sq += (estimator == Estimator::eepls ? t->sq_err_eepls
                                                             : t->sq_err_eegls)[col];
                    sum_crb += t->crb_diag[col];
                }
            }
            const double denom = static_cast<double>(good.size() * entries.size());
            RmseRow row;
            row.k = messages;
            row.estimator = estimator;
            row.group = group;
            row.rmse = std::sqrt(sum_sq / denom);
            row.rcrb_root = std::sqrt(sum_crb / denom);
            row.trials = static_cast<long>(good.size());
            row.failed_trials = failed;
            if (!std::isfinite(row.rmse) || !std::isfinite(row.rcrb_root))
                throw numerical_error("aggregate_rmse: non-finite result for " +
                                      std::string(group_name(group)));
            rows.push_back(row);
        }
    }
    return rows;
}

MonteCarloResult montecarlo(const ExperimentConfig& config) {
    validate(config);
    MonteCarloResult result;
    for (int k : config.k_list) {
        std::vector<TrialOutput> outputs(static_cast<std::size_t>(config.trials));
        const int workers = std::max(1, std::min(config.threads, config.trials));
        if (workers == 1) {
            for (int t = 0; t < config.trials; ++t)
                outputs[static_cast<std::size_t>(t)] = run_trial(config, k, t);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(workers));
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    for (int t = w; t < config.trials; t += workers)
                        outputs[static_cast<std::size_t>(t)] = run_trial(config, k, t);
                });
            }
            for (auto& th : pool) th.join();
        }
        auto rows = aggregate_rmse(config, k, outputs);
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
        result.trials_by_k.emplace_back(k, std::move(outputs));
    }
    return result;
}

void write_rmse_csv(std::ostream& out, const std::vector<RmseRow>& rows) {
    out << "k,estimator,param_group,rmse,rcrb_root,trials,failed_trials\n";
    for (const auto& row : rows) {
        out << row.k << ',' << estimator_name(row.estimator) << ',' << group_name(row.group)
            << ',' << detail::format_double(row.rmse) << ','
            << detail::format_double(row.rcrb_root) << ',' << row.trials << ','
            << row.failed_trials << '\n';
    }
}

} // namespace tsrange
