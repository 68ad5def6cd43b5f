#include "tsrange/scenario.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace tsrange {

const RangePoly& Scenario::range_of(const PairIndex& pair) const {
    return ranges.at(static_cast<std::size_t>(pair_index(pair.i, pair.j, nodes)));
}

Eigen::VectorXd Scenario::eta(const ParamLayout& layout) const {
    if (layout.nodes() != nodes)
        throw std::invalid_argument("Scenario::eta: layout node count mismatch");
    Eigen::VectorXd out(layout.size());
    for (int n = 1; n <= nodes; ++n) {
        out[layout.alpha_col(n)] = clocks[static_cast<std::size_t>(n - 1)].skew;
        out[layout.beta_col(n)] = clocks[static_cast<std::size_t>(n - 1)].offset;
    }
    const auto& pairs = layout.pairs();
    for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
        const auto& rp = range_of(pairs[p]);
        out[layout.gamma_col(p)] = rp.range_accel;
        out[layout.delta_col(p)] = rp.range_rate;
        out[layout.epsilon_col(p)] = rp.range;
    }
    return out;
}

Eigen::VectorXd Scenario::theta(const ParamLayout& layout) const {
    return theta_from_eta(eta(layout), layout, wave_speed);
}

Scenario sample_scenario(int nodes, RngStream& rng, int reference,
                         const ScenarioRanges& ranges) {
    if (nodes < 2) throw std::invalid_argument("sample_scenario: need at least 2 nodes");
    if (reference < 1 || reference > nodes)
        throw std::invalid_argument("sample_scenario: reference node out of range");
    Scenario sc;
    sc.nodes = nodes;
    sc.reference = reference;
    sc.clocks.resize(static_cast<std::size_t>(nodes));
    for (auto& clock : sc.clocks) {
        clock.skew = rng.uniform(1.0 - ranges.skew_halfwidth, 1.0 + ranges.skew_halfwidth);
        clock.offset = rng.uniform(-ranges.offset_max, ranges.offset_max);
    }
    // the reference clock defines the global timescale
    sc.clocks[static_cast<std::size_t>(reference - 1)] = ClockParams{1.0, 0.0};
    const int M = pair_count(nodes);
    sc.ranges.resize(static_cast<std::size_t>(M));
    for (auto& rp : sc.ranges) {
        rp.range_accel = rng.uniform(-ranges.range_accel_max, ranges.range_accel_max);
        rp.range_rate = rng.uniform(-ranges.range_rate_max, ranges.range_rate_max);
        rp.range = rng.uniform_open_closed(0.0, ranges.range_max);
    }
    return sc;
}

void write_scenario_json(std::ostream& out, const Scenario& scenario) {
    nlohmann::json j;
    j["nodes"] = scenario.nodes;
    j["reference"] = scenario.reference;
    j["wave_speed_mps"] = scenario.wave_speed;
    j["clocks"] = nlohmann::json::array();
    for (int n = 1; n <= scenario.nodes; ++n) {
        const auto& c = scenario.clocks[static_cast<std::size_t>(n - 1)];
        j["clocks"].push_back({{"node", n}, {"omega", c.skew}, {"phi", c.offset}});
    }
    j["ranges"] = nlohmann::json::array();
    for (const auto& p : all_pairs(scenario.nodes)) {
        const auto& rp = scenario.range_of(p);
        j["ranges"].push_back({{"i", p.i},
                               {"j", p.j},
                               {"r_m", rp.range},
                               {"rdot_mps", rp.range_rate},
                               {"rddot_mps2", rp.range_accel}});
    }
    out << j.dump(2) << '\n';
}

Scenario read_scenario_json(std::istream& in) {
    nlohmann::json j;
    in >> j;
    Scenario sc;
    sc.nodes = j.at("nodes").get<int>();
    if (sc.nodes < 2) throw std::invalid_argument("scenario json: need at least 2 nodes");
    sc.reference = j.value("reference", 1);
    sc.wave_speed = j.value("wave_speed_mps", kDefaultWaveSpeed);
    sc.clocks.resize(static_cast<std::size_t>(sc.nodes));
    for (const auto& cj : j.at("clocks")) {
        const int n = cj.at("node").get<int>();
        if (n < 1 || n > sc.nodes) throw std::invalid_argument("scenario json: bad node id");
        sc.clocks[static_cast<std::size_t>(n - 1)] =
            ClockParams{cj.at("omega").get<double>(), cj.at("phi").get<double>()};
    }
    sc.ranges.resize(static_cast<std::size_t>(pair_count(sc.nodes)));
    for (const auto& rj : j.at("ranges")) {
        const int m = pair_index(rj.at("i").get<int>(), rj.at("j").get<int>(), sc.nodes);
        sc.ranges[static_cast<std::size_t>(m)] =
            RangePoly{rj.at("r_m").get<double>(), rj.at("rdot_mps").get<double>(),
                      rj.at("rddot_mps2").get<double>()};
    }
    return sc;
}

} // namespace tsrange
