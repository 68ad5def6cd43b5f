#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsrange/pairs.hpp"

namespace tsrange {

/// Default electromagnetic wave speed in the medium [m/s].
inline constexpr double kDefaultWaveSpeed = 3.0e8;

/// Affine clock of one node: local time t_i = skew * t + offset,
/// where t is the global timescale. skew must be positive.
struct ClockParams {
    double skew = 1.0;   // omega, dimensionless
    double offset = 0.0; // phi, seconds

    bool ideal() const { return skew == 1.0 && offset == 0.0; }
};

/// Calibration coefficients of one node: t = alpha * t_i + beta.
/// Exactly the inverse of the clock map: alpha = 1/skew, beta = -offset/skew.
struct CalibParams {
    double alpha = 1.0; // dimensionless
    double beta = 0.0;  // seconds
};

CalibParams calib_from_clock(const ClockParams& clock);
ClockParams clock_from_calib(const CalibParams& calib);

/// Second-order pairwise distance model d(t) = range_accel*t^2 + range_rate*t + range,
/// with t in global time.
struct RangePoly {
    double range = 0.0;       // r, meters at t = 0
    double range_rate = 0.0;  // rdot, m/s
    double range_accel = 0.0; // rddot, m/s^2
};

/// Propagation-delay coefficients in the anchor node's local time t_i:
/// tau(t_i) = gamma*t_i^2 + delta*t_i + epsilon. The anchor is always the
/// pair's lower-id node.
struct DerivedRange {
    double gamma = 0.0;   // 1/s
    double delta = 0.0;   // dimensionless
    double epsilon = 0.0; // s
};

/// Propagation delay at global time t [s].
double delay_global(const RangePoly& rp, double t, double wave_speed);

/// Propagation delay at the anchor node's local time t_i [s].
double delay_local(const DerivedRange& dr, double t_local);

/// Derived coefficients for a pair whose anchor node has calibration `anchor`.
/// Convention: gamma = a^2*rddot/c, delta = (2*a*b*rddot + a*rdot)/c,
/// epsilon = (b^2*rddot + b*rdot + range)/c with a = alpha, b = beta.
/// This is the expansion of d(a*t_i + b)/c in powers of t_i, and makes
/// range_from_derived an exact inverse.
DerivedRange derived_from_range(const RangePoly& rp, const CalibParams& anchor,
                                double wave_speed);

/// Inverse of derived_from_range:
/// rddot = c*gamma/a^2, rdot = c*(delta - 2*b*gamma/a)/a,
/// range = c*(epsilon - b*delta/a + (b/a)^2*gamma).
RangePoly range_from_derived(const DerivedRange& dr, const CalibParams& anchor,
                             double wave_speed);

/// Column layout of the stacked parameter vectors. Holds for both spaces:
///   theta = [alpha(N); beta(N); gamma(P); delta(P); epsilon(P)]
///   eta   = [omega(N); phi(N);  rddot(P); rdot(P);  r(P)]
/// where P = pairs().size(). Pairs are kept in lexicographic (pair_index)
/// order; networks with missing links simply list fewer pairs.
class ParamLayout {
public:
    ParamLayout(int nodes, std::vector<PairIndex> pairs);

    /// Layout with every pair present (P = M).
    static ParamLayout full(int nodes);

    int nodes() const { return nodes_; }
    const std::vector<PairIndex>& pairs() const { return pairs_; }
    int size() const { return 2 * nodes_ + 3 * static_cast<int>(pairs_.size()); }

    // column of each block entry; node is 1-based, p indexes pairs()
    int alpha_col(int node) const { return node - 1; }
    int beta_col(int node) const { return nodes_ + node - 1; }
    int gamma_col(int p) const { return 2 * nodes_ + p; }
    int delta_col(int p) const { return 2 * nodes_ + static_cast<int>(pairs_.size()) + p; }
    int epsilon_col(int p) const { return 2 * nodes_ + 2 * static_cast<int>(pairs_.size()) + p; }

    /// Position of a pair in pairs(), or -1 if the link is absent.
    int find_pair(const PairIndex& pair) const;

    /// Human-readable name of a column, e.g. "alpha(2)" or "gamma(1,3)".
    std::string theta_name(int col) const;
    /// Same column in eta space, e.g. "omega(2)" or "rddot(1,3)".
    std::string eta_name(int col) const;
    /// Block name alone: "alpha".."epsilon" resp. "omega".."r".
    std::string theta_base_name(int col) const;
    std::string eta_base_name(int col) const;
    /// Node id or pair label for CSV output, e.g. "2" or "1-3".
    std::string node_or_pair(int col) const;

private:
    int nodes_ = 0;
    std::vector<PairIndex> pairs_;
};

/// Map physical parameters eta = [omega; phi; rddot; rdot; r] to the derived
/// vector theta = [alpha; beta; gamma; delta; epsilon]. Throws
/// std::domain_error on nonpositive skew.
Eigen::VectorXd theta_from_eta(const Eigen::VectorXd& eta, const ParamLayout& layout,
                               double wave_speed);

/// Inverse map. Throws std::domain_error on nonpositive alpha.
Eigen::VectorXd eta_from_theta(const Eigen::VectorXd& theta, const ParamLayout& layout,
                               double wave_speed);

} // namespace tsrange
