#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "tsrange/model.hpp"
#include "tsrange/pairs.hpp"
#include "tsrange/rng.hpp"

namespace tsrange {

/// Sampling intervals for random scenarios.
struct ScenarioRanges {
    double skew_halfwidth = 1e-5;    // omega ~ U[1-h, 1+h]
    double offset_max = 10.0;        // phi ~ U[-m, +m] s
    double range_accel_max = 0.1;    // rddot ~ U[-m, +m] m/s^2
    double range_rate_max = 1.0;     // rdot ~ U[-m, +m] m/s
    double range_max = 10000.0;      // r ~ U(0, m] m
};

/// Ground truth for one network: clocks per node and a quadratic distance
/// model per pair. The reference node's clock is the global timescale.
struct Scenario {
    int nodes = 0;
    std::vector<ClockParams> clocks;  // size nodes
    std::vector<RangePoly> ranges;    // size M, pair_index order
    double wave_speed = kDefaultWaveSpeed;
    int reference = 1;

    const RangePoly& range_of(const PairIndex& pair) const;

    /// Stacked physical parameters for the given layout.
    Eigen::VectorXd eta(const ParamLayout& layout) const;
    /// Derived parameters for the given layout.
    Eigen::VectorXd theta(const ParamLayout& layout) const;
};

/// Draw a scenario with every parameter uniform in its interval. The
/// reference node's clock is pinned to exactly [skew, offset] = [1, 0] so
/// that estimates under the reference constraint are comparable with the
/// sampled truth. Throws std::invalid_argument for nodes < 2 or a bad
/// reference id.
Scenario sample_scenario(int nodes, RngStream& rng, int reference = 1,
                         const ScenarioRanges& ranges = {});

/// JSON round trip (schema documented in the README).
void write_scenario_json(std::ostream& out, const Scenario& scenario);
Scenario read_scenario_json(std::istream& in);

} // namespace tsrange
