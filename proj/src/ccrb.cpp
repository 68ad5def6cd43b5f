#include "tsrange/ccrb.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "format.hpp"
#include "linalg.hpp"
#include "tsrange/errors.hpp"

namespace tsrange {

Eigen::MatrixXd nullspace_basis(const ConstraintSet& constraints) {
    return detail::nullspace_of(constraints.matrix);
}

Eigen::MatrixXd ccrb_theta(const GlobalSystem& noise_free, const ConstraintSet& constraints,
                           double sigma) {
    if (constraints.matrix.cols() != noise_free.design.cols())
        throw std::invalid_argument("ccrb_theta: constraint width does not match system");
    const Eigen::MatrixXd basis = detail::nullspace_of(constraints.matrix);
    const Eigen::MatrixXd reduced = noise_free.design * basis;
    const Eigen::VectorXd scales = detail::column_scales(reduced);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(reduced * scales.asDiagonal());
    const Eigen::Index n = basis.cols();
    if (qr.rank() < n) {
        throw identifiability_error(
            "ccrb_theta: projected information matrix singular (rank " +
            std::to_string(qr.rank()) + " of " + std::to_string(n) +
            "); the network is not identifiable under these constraints");
    }
    // Sigma = sigma^2 * U D P R^-1 R^-T P^T D U^T = sigma^2 * X^T X with
    // X = R^-T P^T D U^T, which keeps the result symmetric PSD and exactly
    // zero on constrained rows/columns.
    const Eigen::MatrixXd r =
        qr.matrixR().topLeftCorner(n, n).template triangularView<Eigen::Upper>();
    Eigen::MatrixXd x = qr.colsPermutation().transpose() *
                        (scales.asDiagonal() * basis.transpose());
    r.transpose().triangularView<Eigen::Lower>().solveInPlace(x);
    const Eigen::Index L = noise_free.design.cols();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(L, L);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    const Eigen::MatrixXd full = gram.selfadjointView<Eigen::Lower>();
    return (sigma * sigma) * full;
}

Eigen::MatrixXd jacobian_theta_to_eta(const Eigen::VectorXd& theta, const ParamLayout& layout,
                                      double wave_speed) {
    if (theta.size() != layout.size())
        throw std::invalid_argument("jacobian: vector does not match layout");
    const int N = layout.nodes();
    const double c = wave_speed;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(layout.size(), layout.size());
    for (int n = 1; n <= N; ++n) {
        const double a = theta[layout.alpha_col(n)];
        const double b = theta[layout.beta_col(n)];
        if (!(a > 0.0))
            throw std::domain_error("jacobian: alpha(" + std::to_string(n) +
                                    ") must be positive");
        // omega = 1/a, phi = -b/a
        jac(layout.alpha_col(n), layout.alpha_col(n)) = -1.0 / (a * a);
        jac(layout.beta_col(n), layout.alpha_col(n)) = b / (a * a);
        jac(layout.beta_col(n), layout.beta_col(n)) = -1.0 / a;
    }
    const auto& pairs = layout.pairs();
    for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
        const int anchor = pairs[p].i;
        const double a = theta[layout.alpha_col(anchor)];
        const double b = theta[layout.beta_col(anchor)];
        const double g = theta[layout.gamma_col(p)];
        const double d = theta[layout.delta_col(p)];
        const int row_dd = layout.gamma_col(p);   // rddot
        const int row_d = layout.delta_col(p);    // rdot
        const int row_0 = layout.epsilon_col(p);  // r
        // rddot = c*g/a^2
        jac(row_dd, layout.alpha_col(anchor)) = -2.0 * c * g / (a * a * a);
        jac(row_dd, layout.gamma_col(p)) = c / (a * a);
        // rdot = c*(d - 2*b*g/a)/a
        jac(row_d, layout.alpha_col(anchor)) = -c * d / (a * a) + 4.0 * c * b * g / (a * a * a);
        jac(row_d, layout.beta_col(anchor)) = -2.0 * c * g / (a * a);
        jac(row_d, layout.gamma_col(p)) = -2.0 * c * b / (a * a);
        jac(row_d, layout.delta_col(p)) = c / a;
        // r = c*(eps - b*d/a + (b/a)^2*g)
        jac(row_0, layout.alpha_col(anchor)) =
            c * (b * d / (a * a) - 2.0 * b * b * g / (a * a * a));
        jac(row_0, layout.beta_col(anchor)) = c * (-d / a + 2.0 * b * g / (a * a));
        jac(row_0, layout.gamma_col(p)) = c * (b / a) * (b / a);
        jac(row_0, layout.delta_col(p)) = -c * b / a;
        jac(row_0, layout.epsilon_col(p)) = c;
    }
    return jac;
}

Eigen::MatrixXd ccrb_eta(const Eigen::MatrixXd& sigma_theta, const Eigen::MatrixXd& jacobian) {
    if (sigma_theta.rows() != sigma_theta.cols() || jacobian.rows() != jacobian.cols() ||
        sigma_theta.rows() != jacobian.rows())
        throw std::invalid_argument("ccrb_eta: shape mismatch");
    const Eigen::MatrixXd propagated = jacobian * sigma_theta * jacobian.transpose();
    return 0.5 * (propagated + propagated.transpose());
}

CrbResult compute_crb(const GlobalSystem& noise_free, const ConstraintSet& constraints,
                      const Eigen::VectorXd& theta_true, double sigma, double wave_speed) {
    CrbResult crb;
    crb.nullspace = nullspace_basis(constraints);
    crb.sigma_theta = ccrb_theta(noise_free, constraints, sigma);
    crb.sigma_eta =
        ccrb_eta(crb.sigma_theta, jacobian_theta_to_eta(theta_true, noise_free.layout, wave_speed));
    return crb;
}

void write_crb_csv(std::ostream& out, const CrbResult& crb, const ParamLayout& layout) {
    out << "param_name,node_or_pair,crb_variance,rcrb_root\n";
    const auto emit = [&](const std::string& name, int col, const Eigen::MatrixXd& sigma) {
        const double var = sigma(col, col);
        out << name << ',' << layout.node_or_pair(col) << ',' << detail::format_double(var)
            << ',' << detail::format_double(std::sqrt(std::max(var, 0.0))) << '\n';
    };
    for (int col = 0; col < layout.size(); ++col)
        emit(layout.theta_base_name(col), col, crb.sigma_theta);
    for (int col = 0; col < layout.size(); ++col)
        emit(layout.eta_base_name(col), col, crb.sigma_eta);
}

} // namespace tsrange
