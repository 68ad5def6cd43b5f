#pragma once

#include <iosfwd>

#include <Eigen/Dense>

#include "tsrange/estimators.hpp"
#include "tsrange/model.hpp"

namespace tsrange {

/// Orthonormal basis U of the nullspace of the constraint matrix:
/// C*U = 0, U^T*U = I, U is L x (L - M2). Throws std::invalid_argument when
/// C is rank deficient.
Eigen::MatrixXd nullspace_basis(const ConstraintSet& constraints);

/// Constrained Cramer-Rao bound on theta for the linear model with iid
/// N(0, sigma^2) residual noise: Sigma_theta = sigma^2 * U((AU)^T AU)^{-1} U^T
/// evaluated on a noise-free system. Symmetric PSD by construction; rows and
/// columns of constrained directions are exactly zero. Throws
/// identifiability_error when the projected information matrix is singular.
Eigen::MatrixXd ccrb_theta(const GlobalSystem& noise_free,
                           const ConstraintSet& constraints, double sigma);

/// Analytic Jacobian d(eta)/d(theta) of eta_from_theta, both vectors in the
/// given layout. Throws std::domain_error on nonpositive alpha.
Eigen::MatrixXd jacobian_theta_to_eta(const Eigen::VectorXd& theta,
                                      const ParamLayout& layout, double wave_speed);

/// Propagate the bound to eta space: Sigma_eta = J * Sigma_theta * J^T
/// (symmetrized).
Eigen::MatrixXd ccrb_eta(const Eigen::MatrixXd& sigma_theta, const Eigen::MatrixXd& jacobian);

struct CrbResult {
    Eigen::MatrixXd sigma_theta;
    Eigen::MatrixXd sigma_eta;
    Eigen::MatrixXd nullspace; // the U used
};

/// Bound in both spaces for one scenario/schedule, evaluated at theta_true.
CrbResult compute_crb(const GlobalSystem& noise_free, const ConstraintSet& constraints,
                      const Eigen::VectorXd& theta_true, double sigma, double wave_speed);

/// CRB CSV: param_name,node_or_pair,crb_variance,rcrb_root with one row per
/// theta entry followed by one row per eta entry.
void write_crb_csv(std::ostream& out, const CrbResult& crb, const ParamLayout& layout);

} // namespace tsrange
