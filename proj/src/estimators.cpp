#include "tsrange/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "format.hpp"
#include "linalg.hpp"
#include "tsrange/errors.hpp"

namespace tsrange {

using detail::column_scales;
using detail::diag_condition_estimate;
using detail::nullspace_of;

namespace {

std::string pair_label(const PairIndex& p) {
    return "(" + std::to_string(p.i) + "," + std::to_string(p.j) + ")";
}

/// Guards shared by the pairwise and global builders.
void check_pair_identifiable(const PairLog& log) {
    const int K = log.messages();
    if (static_cast<int>(log.stamps_j.size()) != K ||
        static_cast<int>(log.directions.size()) != K) {
        throw std::invalid_argument("pair log " + pair_label(log.pair) +
                                    ": timestamp/direction vectors differ in length");
    }
    if (K < 5) {
        throw identifiability_error("pair " + pair_label(log.pair) +
                                    ": under-determined, need at least 5 messages, got " +
                                    std::to_string(K));
    }
    const bool has_fwd = std::any_of(log.directions.begin(), log.directions.end(),
                                     [](int e) { return e == +1; });
    const bool has_rev = std::any_of(log.directions.begin(), log.directions.end(),
                                     [](int e) { return e == -1; });
    if (!has_fwd || !has_rev) {
        throw identifiability_error("pair " + pair_label(log.pair) +
                                    ": all messages in one direction, both needed");
    }
    for (int e : log.directions)
        if (e != 1 && e != -1)
            throw std::invalid_argument("pair log " + pair_label(log.pair) +
                                        ": direction entries must be +/-1");
}

} // namespace

PairSystem build_pair_system(const PairLog& log, bool reference_is_lower) {
    check_pair_identifiable(log);
    const int K = log.messages();
    PairSystem ps;
    ps.pair = log.pair;
    ps.reference_is_lower = reference_is_lower;
    ps.design.resize(K, 5);
    ps.rhs.resize(K);
    for (int k = 0; k < K; ++k) {
        const double t_ij = log.stamps_i[static_cast<std::size_t>(k)];
        const double t_ji = log.stamps_j[static_cast<std::size_t>(k)];
        const double e = log.directions[static_cast<std::size_t>(k)];
        // the delay columns always live on the lower-id node's timeline
        ps.design(k, 2) = e * t_ij * t_ij;
        ps.design(k, 3) = e * t_ij;
        ps.design(k, 4) = e;
        if (reference_is_lower) {
            ps.design(k, 0) = -t_ji;
            ps.design(k, 1) = -1.0;
            ps.rhs[k] = -t_ij;
        } else {
            ps.design(k, 0) = t_ij;
            ps.design(k, 1) = 1.0;
            ps.rhs[k] = t_ji;
        }
    }
    return ps;
}

Estimate eepls_solve(const PairSystem& system, double wave_speed) {
    const Eigen::VectorXd scales = column_scales(system.design);
    const Eigen::MatrixXd scaled = system.design * scales.asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    const double condition = diag_condition_estimate(qr);
    if (qr.rank() < 5) {
        throw numerical_error("pairwise solve " + pair_label(system.pair) +
                              ": rank " + std::to_string(qr.rank()) +
                              " < 5 after column scaling (condition estimate " +
                              detail::format_double(condition) + ")");
    }
    Estimate est;
    est.theta = (scales.array() * qr.solve(system.rhs).array()).matrix();
    est.residual_norm = (system.design * est.theta - system.rhs).norm();
    est.condition = condition;
    if (!(est.theta[0] > 0.0)) {
        throw numerical_error("pairwise solve " + pair_label(system.pair) +
                              ": estimated alpha is not positive (" +
                              detail::format_double(est.theta[0]) + ")");
    }
    const CalibParams other{est.theta[0], est.theta[1]};
    const CalibParams anchor = system.reference_is_lower ? CalibParams{1.0, 0.0} : other;
    const ClockParams clock = clock_from_calib(other);
    const RangePoly rp = range_from_derived(
        DerivedRange{est.theta[2], est.theta[3], est.theta[4]}, anchor, wave_speed);
    est.eta.resize(5);
    est.eta << clock.skew, clock.offset, rp.range_accel, rp.range_rate, rp.range;
    return est;
}

GlobalSystem build_global_system(const ExchangeLog& log, int nodes) {
    if (log.entries.empty())
        throw std::invalid_argument("build_global_system: empty exchange log");

    std::vector<const PairLog*> entries;
    entries.reserve(log.entries.size());
    for (const auto& entry : log.entries) entries.push_back(&entry);
    std::sort(entries.begin(), entries.end(), [&](const PairLog* a, const PairLog* b) {
        return pair_index(a->pair.i, a->pair.j, nodes) < pair_index(b->pair.i, b->pair.j, nodes);
    });

    std::vector<PairIndex> pairs;
    std::vector<bool> linked(static_cast<std::size_t>(nodes), false);
    int rows = 0;
    for (const auto* entry : entries) {
        check_pair_identifiable(*entry);
        pairs.push_back(entry->pair);
        linked[static_cast<std::size_t>(entry->pair.i - 1)] = true;
        linked[static_cast<std::size_t>(entry->pair.j - 1)] = true;
        rows += entry->messages();
    }
    for (int n = 1; n <= nodes; ++n) {
        if (!linked[static_cast<std::size_t>(n - 1)])
            throw identifiability_error("node " + std::to_string(n) +
                                        " has no link in the exchange log");
    }

    GlobalSystem gs{Eigen::MatrixXd::Zero(rows, 0), ParamLayout(nodes, pairs)};
    gs.design = Eigen::MatrixXd::Zero(rows, gs.layout.size());
    int row = 0;
    for (int p = 0; p < static_cast<int>(entries.size()); ++p) {
        const PairLog& entry = *entries[static_cast<std::size_t>(p)];
        for (int k = 0; k < entry.messages(); ++k, ++row) {
            const double t_ij = entry.stamps_i[static_cast<std::size_t>(k)];
            const double t_ji = entry.stamps_j[static_cast<std::size_t>(k)];
            const double e = entry.directions[static_cast<std::size_t>(k)];
            gs.design(row, gs.layout.alpha_col(entry.pair.i)) = t_ij;
            gs.design(row, gs.layout.alpha_col(entry.pair.j)) = -t_ji;
            gs.design(row, gs.layout.beta_col(entry.pair.i)) = 1.0;
            gs.design(row, gs.layout.beta_col(entry.pair.j)) = -1.0;
            gs.design(row, gs.layout.gamma_col(p)) = e * t_ij * t_ij;
            gs.design(row, gs.layout.delta_col(p)) = e * t_ij;
            gs.design(row, gs.layout.epsilon_col(p)) = e;
        }
    }
    return gs;
}

ConstraintSet build_constraints(const ParamLayout& layout, int reference) {
    if (reference < 1 || reference > layout.nodes())
        throw std::invalid_argument("build_constraints: reference node out of range");
    ConstraintSet cs;
    cs.matrix = Eigen::MatrixXd::Zero(2, layout.size());
    cs.matrix(0, layout.alpha_col(reference)) = 1.0;
    cs.matrix(1, layout.beta_col(reference)) = 1.0;
    cs.values.resize(2);
    cs.values << 1.0, 0.0;
    return cs;
}

Estimate eegls_solve(const GlobalSystem& system, const ConstraintSet& constraints,
                     double wave_speed) {
    const Eigen::Index L = system.design.cols();
    const Eigen::Index M2 = constraints.matrix.rows();
    if (constraints.matrix.cols() != L)
        throw std::invalid_argument("eegls_solve: constraint width does not match system");

    const Eigen::VectorXd scales = column_scales(system.design);
    const Eigen::MatrixXd a_scaled = system.design * scales.asDiagonal();
    const Eigen::MatrixXd c_scaled = constraints.matrix * scales.asDiagonal();

    // minimum-norm particular solution of the scaled constraints
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> c_qr(c_scaled.transpose());
    if (c_qr.rank() < M2)
        throw std::invalid_argument("eegls_solve: constraint matrix is rank deficient");
    const Eigen::VectorXd theta_p =
        c_scaled.transpose() *
        (c_scaled * c_scaled.transpose()).ldlt().solve(constraints.values);

    const Eigen::MatrixXd basis = nullspace_of(c_scaled);
    const Eigen::MatrixXd reduced = a_scaled * basis;
    const Eigen::VectorXd reduced_scales = column_scales(reduced);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(reduced * reduced_scales.asDiagonal());
    const double condition = diag_condition_estimate(qr);
    if (qr.rank() < basis.cols()) {
        // name the dominant parameter of each deficient direction
        const auto perm = qr.colsPermutation().indices();
        std::string names;
        for (Eigen::Index k = qr.rank(); k < basis.cols(); ++k) {
            Eigen::Index worst = 0;
            basis.col(perm[k]).cwiseAbs().maxCoeff(&worst);
            if (!names.empty()) names += ", ";
            names += system.layout.theta_name(static_cast<int>(worst));
        }
        throw identifiability_error("global system rank deficient (rank " +
                                    std::to_string(qr.rank()) + " of " +
                                    std::to_string(basis.cols()) +
                                    "); deficient columns: " + names);
    }

    const Eigen::VectorXd z =
        (reduced_scales.array() * qr.solve(-(a_scaled * theta_p)).array()).matrix();
    const Eigen::VectorXd theta_scaled = theta_p + basis * z;

    Estimate est;
    est.theta = (scales.array() * theta_scaled.array()).matrix();
    est.residual_norm = (system.design * est.theta).norm();
    est.condition = condition;

    // Lagrange multipliers from the scaled stationarity equations; the
    // column scaling leaves them unchanged.
    const Eigen::VectorXd gradient = 2.0 * (a_scaled.transpose() * (a_scaled * theta_scaled));
    est.lambda = c_qr.solve(-gradient);
    const double stationarity = (gradient + c_scaled.transpose() * est.lambda).norm();
    const double grad_scale =
        2.0 * static_cast<double>(L) * theta_scaled.norm() +
        (c_scaled.transpose() * est.lambda).norm() + 1e-300;
    const double feasibility = (c_scaled * theta_scaled - constraints.values).norm() /
                               std::max(1.0, constraints.values.norm());
    est.kkt_residual = std::max(stationarity / grad_scale, feasibility);

    for (int n = 1; n <= system.layout.nodes(); ++n) {
        if (!(est.theta[system.layout.alpha_col(n)] > 0.0))
            throw numerical_error("global solve: estimated alpha(" + std::to_string(n) +
                                  ") is not positive");
    }
    est.eta = eta_from_theta(est.theta, system.layout, wave_speed);
    return est;
}

void write_estimates_csv(std::ostream& out, const ParamLayout& layout,
                         const Eigen::VectorXd& eta_hat,
                         const std::optional<Eigen::VectorXd>& eta_true,
                         const std::string& metadata) {
    if (!metadata.empty()) out << "# " << metadata << '\n';
    out << "param_name,node_or_pair,true_value,estimate,error\n";
    for (int col = 0; col < layout.size(); ++col) {
        if (!std::isfinite(eta_hat[col])) continue; // entry not estimated
        out << layout.eta_base_name(col) << ',' << layout.node_or_pair(col) << ',';
        if (eta_true) {
            out << detail::format_double((*eta_true)[col]) << ','
                << detail::format_double(eta_hat[col]) << ','
                << detail::format_double(eta_hat[col] - (*eta_true)[col]) << '\n';
        } else {
            out << ',' << detail::format_double(eta_hat[col]) << ",\n";
        }
    }
}

} // namespace tsrange
