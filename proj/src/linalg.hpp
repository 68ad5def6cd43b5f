#pragma once

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tsrange::detail {

/// Per-column scale s with unit-norm scaled = A * diag(s). Zero columns keep
/// scale 1 and are left for the rank checks.
inline Eigen::VectorXd column_scales(const Eigen::MatrixXd& a) {
    Eigen::VectorXd s(a.cols());
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
        const double norm = a.col(k).norm();
        s[k] = norm > 0.0 ? 1.0 / norm : 1.0;
    }
    return s;
}

/// Cheap condition estimate from the pivoted R diagonal.
inline double diag_condition_estimate(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr) {
    const auto& r = qr.matrixR();
    const Eigen::Index n = std::min(r.rows(), r.cols());
    if (n == 0) return 0.0;
    const double largest = std::abs(r(0, 0));
    const double smallest = std::abs(r(n - 1, n - 1));
    return smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();
}

/// Columns with a single nonzero per constraint row, all distinct. Returns
/// the selected columns, or empty if the matrix is not of that shape.
inline std::vector<int> unit_selector_columns(const Eigen::MatrixXd& c) {
    std::vector<int> cols;
    for (Eigen::Index row = 0; row < c.rows(); ++row) {
        int found = -1;
        for (Eigen::Index col = 0; col < c.cols(); ++col) {
            if (c(row, col) != 0.0) {
                if (found >= 0) return {};
                found = static_cast<int>(col);
            }
        }
        if (found < 0) return {};
        if (std::find(cols.begin(), cols.end(), found) != cols.end()) return {};
        cols.push_back(found);
    }
    return cols;
}

/// Orthonormal basis of the nullspace of c. Unit-selector constraints get
/// the exact coordinate basis (identity with the constrained columns
/// removed); anything else goes through a Householder QR of c^T. Throws
/// std::invalid_argument when c is rank deficient.
inline Eigen::MatrixXd nullspace_of(const Eigen::MatrixXd& c) {
    const Eigen::Index L = c.cols();
    const Eigen::Index M2 = c.rows();
    if (M2 >= L) throw std::invalid_argument("nullspace: too many constraints");
    if (const auto sel = unit_selector_columns(c); !sel.empty()) {
        Eigen::MatrixXd u = Eigen::MatrixXd::Zero(L, L - M2);
        Eigen::Index out = 0;
        for (Eigen::Index col = 0; col < L; ++col) {
            if (std::find(sel.begin(), sel.end(), static_cast<int>(col)) != sel.end()) continue;
            u(col, out++) = 1.0;
        }
        return u;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c.transpose());
    if (qr.rank() < M2)
        throw std::invalid_argument("constraint matrix is rank deficient (rank " +
                                    std::to_string(qr.rank()) + " of " + std::to_string(M2) +
                                    ")");
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(L, L);
    return q.rightCols(L - M2);
}

} // namespace tsrange::detail
