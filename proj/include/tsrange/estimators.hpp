#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tsrange/exchange.hpp"
#include "tsrange/model.hpp"

namespace tsrange {

/// Linear system for one pair with the reference clock fixed. With the
/// lower-id node i as reference the unknowns are
/// [alpha_j, beta_j, gamma, delta, epsilon] and
///   design = [-t_ji, -1, e.*t_ij^2, e.*t_ij, e],  rhs = -t_ij.
/// With node j as reference the unknowns are [alpha_i, beta_i, gamma, delta,
/// epsilon] and design = [t_ij, 1, e.*t_ij^2, e.*t_ij, e], rhs = t_ji.
/// Either way the delay columns stay on node i's timeline.
struct PairSystem {
    Eigen::MatrixXd design; // K x 5
    Eigen::VectorXd rhs;    // K
    PairIndex pair;
    bool reference_is_lower = true;
};

/// Build the pairwise system. Throws identifiability_error when the log has
/// fewer than 5 messages or only one transmission direction.
PairSystem build_pair_system(const PairLog& log, bool reference_is_lower);

/// Result of a least-squares solve. For the pairwise estimator theta/eta are
/// 5-vectors ([alpha, beta, gamma, delta, epsilon] of the non-reference node
/// and pair; eta = [omega, phi, rddot, rdot, r]). For the global estimator
/// they follow the system's ParamLayout.
struct Estimate {
    Eigen::VectorXd theta;
    Eigen::VectorXd eta;
    double residual_norm = 0.0; // ||design*theta - rhs||
    double condition = 0.0;     // diag-ratio estimate for the column-scaled system
    Eigen::VectorXd lambda;     // Lagrange multipliers (global solve only)
    double kkt_residual = 0.0;  // relative KKT residual (global solve only)
};

/// Closed-form pairwise least squares on the column-scaled system.
/// Throws numerical_error (with a condition diagnostic) on rank collapse.
Estimate eepls_solve(const PairSystem& system, double wave_speed = kDefaultWaveSpeed);

/// Stacked homogeneous system design*theta ~ 0 over all logged pairs.
/// Row blocks are in pair_index order; absent pairs contribute neither rows
/// nor gamma/delta/epsilon columns.
struct GlobalSystem {
    Eigen::MatrixXd design; // (K*P) x layout.size()
    ParamLayout layout;
};

/// Assemble the global system from a log. Every pair must satisfy the
/// pairwise identifiability guards, and every node must appear in at least
/// one logged pair; violations throw identifiability_error.
GlobalSystem build_global_system(const ExchangeLog& log, int nodes);

/// Equality constraints C*theta = d.
struct ConstraintSet {
    Eigen::MatrixXd matrix; // M2 x L
    Eigen::VectorXd values; // M2
};

/// Two unit-selector rows pinning the reference node: alpha_ref = 1,
/// beta_ref = 0.
ConstraintSet build_constraints(const ParamLayout& layout, int reference);

/// Constrained global least squares: minimize ||design*theta|| subject to
/// C*theta = d, solved by eliminating the constraints onto the nullspace of
/// C and QR-solving the reduced column-scaled problem. The returned estimate
/// satisfies the KKT stationarity system; kkt_residual records how well.
/// Throws identifiability_error naming the deficient columns when the
/// constrained system is rank deficient.
Estimate eegls_solve(const GlobalSystem& system, const ConstraintSet& constraints,
                     double wave_speed = kDefaultWaveSpeed);

/// Estimates CSV: param_name,node_or_pair,true_value,estimate,error with one
/// row per finite eta entry (NaN marks entries the method did not estimate).
/// Rows lacking ground truth leave true_value/error empty. A non-empty
/// metadata string is emitted first as a "# ..." comment line.
void write_estimates_csv(std::ostream& out, const ParamLayout& layout,
                         const Eigen::VectorXd& eta_hat,
                         const std::optional<Eigen::VectorXd>& eta_true,
                         const std::string& metadata = "");

} // namespace tsrange
