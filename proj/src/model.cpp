#include "tsrange/model.hpp"

#include <stdexcept>

namespace tsrange {

namespace {

void require_positive(double value, const char* what) {
    if (!(value > 0.0)) {
        throw std::domain_error(std::string(what) + " must be positive, got " +
                                std::to_string(value));
    }
}

} // namespace

CalibParams calib_from_clock(const ClockParams& clock) {
    require_positive(clock.skew, "clock skew");
    return CalibParams{1.0 / clock.skew, -clock.offset / clock.skew};
}

ClockParams clock_from_calib(const CalibParams& calib) {
    require_positive(calib.alpha, "calibration alpha");
    return ClockParams{1.0 / calib.alpha, -calib.beta / calib.alpha};
}

double delay_global(const RangePoly& rp, double t, double wave_speed) {
    return (rp.range_accel * t * t + rp.range_rate * t + rp.range) / wave_speed;
}

double delay_local(const DerivedRange& dr, double t_local) {
    return dr.gamma * t_local * t_local + dr.delta * t_local + dr.epsilon;
}

DerivedRange derived_from_range(const RangePoly& rp, const CalibParams& anchor,
                                double wave_speed) {
    require_positive(anchor.alpha, "calibration alpha");
    const double a = anchor.alpha;
    const double b = anchor.beta;
    DerivedRange dr;
    dr.gamma = a * a * rp.range_accel / wave_speed;
    dr.delta = (2.0 * a * b * rp.range_accel + a * rp.range_rate) / wave_speed;
    dr.epsilon = (b * b * rp.range_accel + b * rp.range_rate + rp.range) / wave_speed;
    return dr;
}

RangePoly range_from_derived(const DerivedRange& dr, const CalibParams& anchor,
                             double wave_speed) {
    require_positive(anchor.alpha, "calibration alpha");
    const double a = anchor.alpha;
    const double shift = anchor.beta / a; // beta/alpha
    RangePoly rp;
    rp.range_accel = wave_speed * dr.gamma / (a * a);
    rp.range_rate = wave_speed * (dr.delta - 2.0 * shift * dr.gamma) / a;
    rp.range = wave_speed * (dr.epsilon - shift * dr.delta + shift * shift * dr.gamma);
    return rp;
}

ParamLayout::ParamLayout(int nodes, std::vector<PairIndex> pairs)
    : nodes_(nodes), pairs_(std::move(pairs)) {
    if (nodes_ < 2) throw std::invalid_argument("ParamLayout: need at least 2 nodes");
    int prev = -1;
    for (const auto& p : pairs_) {
        const int m = pair_index(p.i, p.j, nodes_); // validates the pair
        if (m <= prev)
            throw std::invalid_argument("ParamLayout: pairs must be unique and in pair_index order");
        prev = m;
    }
}

ParamLayout ParamLayout::full(int nodes) { return ParamLayout(nodes, all_pairs(nodes)); }

int ParamLayout::find_pair(const PairIndex& pair) const {
    for (std::size_t p = 0; p < pairs_.size(); ++p)
        if (pairs_[p] == pair) return static_cast<int>(p);
    return -1;
}

namespace {

std::string pair_label(const PairIndex& p) {
    return std::to_string(p.i) + "," + std::to_string(p.j);
}

} // namespace

std::string ParamLayout::theta_name(int col) const {
    const int P = static_cast<int>(pairs_.size());
    if (col < nodes_) return "alpha(" + std::to_string(col + 1) + ")";
    if (col < 2 * nodes_) return "beta(" + std::to_string(col - nodes_ + 1) + ")";
    const int rel = col - 2 * nodes_;
    if (rel < P) return "gamma(" + pair_label(pairs_[rel]) + ")";
    if (rel < 2 * P) return "delta(" + pair_label(pairs_[rel - P]) + ")";
    return "epsilon(" + pair_label(pairs_[rel - 2 * P]) + ")";
}

std::string ParamLayout::eta_name(int col) const {
    const int P = static_cast<int>(pairs_.size());
    if (col < nodes_) return "omega(" + std::to_string(col + 1) + ")";
    if (col < 2 * nodes_) return "phi(" + std::to_string(col - nodes_ + 1) + ")";
    const int rel = col - 2 * nodes_;
    if (rel < P) return "rddot(" + pair_label(pairs_[rel]) + ")";
    if (rel < 2 * P) return "rdot(" + pair_label(pairs_[rel - P]) + ")";
    return "r(" + pair_label(pairs_[rel - 2 * P]) + ")";
}

std::string ParamLayout::theta_base_name(int col) const {
    const int P = static_cast<int>(pairs_.size());
    if (col < nodes_) return "alpha";
    if (col < 2 * nodes_) return "beta";
    const int rel = col - 2 * nodes_;
    if (rel < P) return "gamma";
    if (rel < 2 * P) return "delta";
    return "epsilon";
}

std::string ParamLayout::eta_base_name(int col) const {
    const int P = static_cast<int>(pairs_.size());
    if (col < nodes_) return "omega";
    if (col < 2 * nodes_) return "phi";
    const int rel = col - 2 * nodes_;
    if (rel < P) return "rddot";
    if (rel < 2 * P) return "rdot";
    return "r";
}

std::string ParamLayout::node_or_pair(int col) const {
    const int P = static_cast<int>(pairs_.size());
    if (col < 2 * nodes_) return std::to_string(col % nodes_ + 1);
    const int rel = (col - 2 * nodes_) % P;
    return std::to_string(pairs_[rel].i) + "-" + std::to_string(pairs_[rel].j);
}

Eigen::VectorXd theta_from_eta(const Eigen::VectorXd& eta, const ParamLayout& layout,
                               double wave_speed) {
    if (eta.size() != layout.size())
        throw std::invalid_argument("theta_from_eta: vector does not match layout");
    const int N = layout.nodes();
    Eigen::VectorXd theta(layout.size());
    std::vector<CalibParams> calib(static_cast<std::size_t>(N));
    for (int n = 1; n <= N; ++n) {
        const ClockParams clock{eta[layout.alpha_col(n)], eta[layout.beta_col(n)]};
        calib[static_cast<std::size_t>(n - 1)] = calib_from_clock(clock);
        theta[layout.alpha_col(n)] = calib[static_cast<std::size_t>(n - 1)].alpha;
        theta[layout.beta_col(n)] = calib[static_cast<std::size_t>(n - 1)].beta;
    }
    const auto& pairs = layout.pairs();
    for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
        const RangePoly rp{eta[layout.epsilon_col(p)], eta[layout.delta_col(p)],
                           eta[layout.gamma_col(p)]};
        const auto dr =
            derived_from_range(rp, calib[static_cast<std::size_t>(pairs[p].i - 1)], wave_speed);
        theta[layout.gamma_col(p)] = dr.gamma;
        theta[layout.delta_col(p)] = dr.delta;
        theta[layout.epsilon_col(p)] = dr.epsilon;
    }
    return theta;
}

Eigen::VectorXd eta_from_theta(const Eigen::VectorXd& theta, const ParamLayout& layout,
                               double wave_speed) {
    if (theta.size() != layout.size())
        throw std::invalid_argument("eta_from_theta: vector does not match layout");
    const int N = layout.nodes();
    Eigen::VectorXd eta(layout.size());
    std::vector<CalibParams> calib(static_cast<std::size_t>(N));
    for (int n = 1; n <= N; ++n) {
        calib[static_cast<std::size_t>(n - 1)] =
            CalibParams{theta[layout.alpha_col(n)], theta[layout.beta_col(n)]};
        const auto clock = clock_from_calib(calib[static_cast<std::size_t>(n - 1)]);
        eta[layout.alpha_col(n)] = clock.skew;
        eta[layout.beta_col(n)] = clock.offset;
    }
    const auto& pairs = layout.pairs();
    for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
        const DerivedRange dr{theta[layout.gamma_col(p)], theta[layout.delta_col(p)],
                              theta[layout.epsilon_col(p)]};
        const auto rp =
            range_from_derived(dr, calib[static_cast<std::size_t>(pairs[p].i - 1)], wave_speed);
        eta[layout.gamma_col(p)] = rp.range_accel;
        eta[layout.delta_col(p)] = rp.range_rate;
        eta[layout.epsilon_col(p)] = rp.range;
    }
    return eta;
}

} // namespace tsrange
