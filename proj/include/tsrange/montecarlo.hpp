#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsrange/ccrb.hpp"
#include "tsrange/estimators.hpp"
#include "tsrange/scenario.hpp"

namespace tsrange {

enum class Estimator { eepls, eegls };
const char* estimator_name(Estimator e);

/// Parameter groups reported by the experiment, in eta space.
enum class ParamGroup { omega, phi, rddot, rdot, r };
inline constexpr std::array<ParamGroup, 5> kAllGroups = {
    ParamGroup::omega, ParamGroup::phi, ParamGroup::rddot, ParamGroup::rdot,
    ParamGroup::r};
const char* group_name(ParamGroup g);

/// Experiment configuration (JSON schema in the README).
struct ExperimentConfig {
    int nodes = 4;
    std::vector<int> k_list = {5,  6,  7,  8,  9,  10, 11, 12,
                               13, 14, 15, 16, 17, 18, 19, 20};
    int messages = 20; // single-K commands (simulate, crb)
    int trials = 1000;
    double sigma = 1e-8; // seconds
    std::uint64_t seed = 1;
    double span_min = 0.1; // schedule span, seconds
    double span_max = 10.0;
    int reference = 1;
    std::vector<PairIndex> pairs; // empty = all pairs
    bool run_eepls = true;
    bool run_eegls = true;
    double wave_speed = kDefaultWaveSpeed;
    ScenarioRanges ranges;
    int threads = 1;

    std::vector<PairIndex> effective_pairs() const; // pairs, or all if empty
};

/// Parse a config JSON document; unknown keys are rejected. Throws
/// std::invalid_argument on schema or invariant violations.
ExperimentConfig config_from_json(std::istream& in);

/// One Monte Carlo trial: fresh scenario from stream seed + trial_index,
/// noisy logs, both estimators, squared eta-space errors and the per-trial
/// CCRB diagonal. Estimator failures are flagged, not thrown.
struct TrialOutput {
    bool eepls_ok = false;
    bool eegls_ok = false;
    bool crb_ok = false;
    Eigen::VectorXd sq_err_eepls; // layout-sized, NaN where not estimated
    Eigen::VectorXd sq_err_eegls;
    Eigen::VectorXd crb_diag; // diag of Sigma_eta
};
TrialOutput run_trial(const ExperimentConfig& config, int messages, int trial_index);

/// eta-space entries contributing to a group's RMSE: clock groups exclude
/// the reference node; for the pairwise estimator, range groups and clock
/// groups cover only links anchored at the reference.
std::vector<int> group_entries(const ParamLayout& layout, ParamGroup group,
                               Estimator estimator, int reference);

struct RmseRow {
    int k = 0;
    Estimator estimator = Estimator::eepls;
    ParamGroup group = ParamGroup::omega;
    double rmse = 0.0;
    double rcrb_root = 0.0;
    long trials = 0;        // successful trials aggregated
    long failed_trials = 0; // excluded trials
};

/// Pool squared errors over successful trials and group entries. Throws
/// numerical_error when no trial succeeded for an enabled estimator.
std::vector<RmseRow> aggregate_rmse(const ExperimentConfig& config, int messages,
                                    const std::vector<TrialOutput>& outputs);

struct MonteCarloResult {
    std::vector<RmseRow> rows;
    // raw per-trial outputs per K, kept for downstream statistics
    std::vector<std::pair<int, std::vector<TrialOutput>>> trials_by_k;
};

/// The full experiment: for each K, `trials` independent trials (parallel
/// when config.threads > 1; results are identical either way).
MonteCarloResult montecarlo(const ExperimentConfig& config);

/// RMSE CSV: k,estimator,param_group,rmse,rcrb_root,trials,failed_trials.
void write_rmse_csv(std::ostream& out, const std::vector<RmseRow>& rows);

} // namespace tsrange
