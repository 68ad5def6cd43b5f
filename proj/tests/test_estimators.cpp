#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tsrange/ccrb.hpp"
#include "tsrange/errors.hpp"
#include "tsrange/estimators.hpp"
#include "tsrange/exchange.hpp"

using namespace tsrange;

namespace {

Eigen::VectorXd pair_theta_truth(const Scenario& sc, const PairIndex& pair,
                                 bool reference_is_lower) {
    const auto calib_i = calib_from_clock(sc.clocks[static_cast<std::size_t>(pair.i - 1)]);
    const auto calib_j = calib_from_clock(sc.clocks[static_cast<std::size_t>(pair.j - 1)]);
    const auto dr = derived_from_range(sc.range_of(pair), calib_i, sc.wave_speed);
    const auto& unknown = reference_is_lower ? calib_j : calib_i;
    Eigen::VectorXd theta(5);
    theta << unknown.alpha, unknown.beta, dr.gamma, dr.delta, dr.epsilon;
    return theta;
}

double vec_rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& expect) {
    return (got - expect).norm() / expect.norm();
}

Schedule degenerate_schedule(int messages, double at) {
    Schedule sch;
    for (int k = 0; k < messages; ++k) {
        sch.transmit_times.push_back(at);
        sch.directions.push_back(k % 2 == 0 ? 1 : -1);
    }
    return sch;
}

} // namespace

TEST_CASE("build_pair_system shape, guards and ground-truth consistency") {
    RngStream rng(41);
    const auto sc = sample_scenario(4, rng);
    const auto sch = default_schedule(5, 0.1, 10.0);
    const auto log = generate_pair_log(sc, PairIndex{1, 2}, sch, NoiseSpec{0.0, 0}, rng);

    const auto ps = build_pair_system(log, true);
    CHECK(ps.design.rows() == 5);
    CHECK(ps.design.cols() == 5);

    // noise-free: design * theta_true == rhs
    const auto theta_true = pair_theta_truth(sc, PairIndex{1, 2}, true);
    CHECK((ps.design * theta_true - ps.rhs).lpNorm<Eigen::Infinity>() < 1e-12);

    PairLog short_log = log;
    short_log.stamps_i.resize(4);
    short_log.stamps_j.resize(4);
    short_log.directions.resize(4);
    CHECK_THROWS_AS(build_pair_system(short_log, true), identifiability_error);

    PairLog one_way = log;
    for (auto& e : one_way.directions) e = 1;
    CHECK_THROWS_AS(build_pair_system(one_way, true), identifiability_error);
    for (auto& e : one_way.directions) e = -1;
    CHECK_THROWS_AS(build_pair_system(one_way, true), identifiability_error);
}

TEST_CASE("eepls recovers the truth exactly without noise") {
    RngStream rng(43);
    double worst = 0.0;
    for (int rep = 0; rep < 25; ++rep) {
        const auto sc = sample_scenario(4, rng);
        const auto sch = default_schedule(6, 0.1, 10.0);
        for (int j = 2; j <= 4; ++j) {
            const PairIndex pair{1, j};
            const auto log = generate_pair_log(sc, pair, sch, NoiseSpec{0.0, 0}, rng);
            const auto est = eepls_solve(build_pair_system(log, true), sc.wave_speed);
            worst = std::max(worst, vec_rel_err(est.theta, pair_theta_truth(sc, pair, true)));
            CHECK(est.condition > 0.0);
        }
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("eepls on an ideal static pair leaves the quadratic terms at zero") {
    Scenario sc;
    sc.nodes = 2;
    sc.clocks = {ClockParams{1.0, 0.0}, ClockParams{1.0, 0.0}};
    sc.ranges = {RangePoly{300.0, 0.0, 0.0}};
    RngStream rng(47);
    const auto sch = default_schedule(8, 0.1, 10.0);
    const auto log = generate_pair_log(sc, PairIndex{1, 2}, sch, NoiseSpec{0.0, 0}, rng);
    const auto est = eepls_solve(build_pair_system(log, true), sc.wave_speed);
    CHECK(est.theta[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(est.theta[1]) < 1e-12);
    CHECK(std::abs(est.theta[2]) < 1e-15);
    CHECK(std::abs(est.theta[3]) < 1e-15);
    CHECK(est.theta[4] == doctest::Approx(1e-6).epsilon(1e-7));
    CHECK(est.eta[4] == doctest::Approx(300.0).epsilon(1e-7));
}

TEST_CASE("eepls flags numerically singular systems with a condition diagnostic") {
    RngStream rng(53);
    const auto sc = sample_scenario(2, rng);
    const auto log =
        generate_pair_log(sc, PairIndex{1, 2}, degenerate_schedule(6, 5.0), NoiseSpec{0.0, 0}, rng);
    CHECK_THROWS_AS(eepls_solve(build_pair_system(log, true), sc.wave_speed), numerical_error);
    try {
        eepls_solve(build_pair_system(log, true), sc.wave_speed);
    } catch (const numerical_error& err) {
        CHECK(std::string(err.what()).find("condition") != std::string::npos);
    }
}

TEST_CASE("eepls residual is orthogonal to the columns") {
    // normal-equation backward error of the column-scaled system; the raw
    // residual norm is sigma-sized, so it cannot be the reference scale
    RngStream rng(59);
    for (int rep = 0; rep < 50; ++rep) {
        const auto sc = sample_scenario(4, rng);
        const auto sch = default_schedule(12, 0.1, 10.0);
        const auto log = generate_pair_log(sc, PairIndex{1, 3}, sch, NoiseSpec{1e-8, 0}, rng);
        const auto ps = build_pair_system(log, true);
        const auto est = eepls_solve(ps, sc.wave_speed);
        const Eigen::VectorXd residual = ps.design * est.theta - ps.rhs;
        Eigen::MatrixXd scaled = ps.design;
        Eigen::VectorXd z = est.theta;
        for (int k = 0; k < 5; ++k) {
            const double norm = ps.design.col(k).norm();
            scaled.col(k) /= norm;
            z[k] *= norm;
        }
        const double defect = (scaled.transpose() * residual).norm() /
                              (scaled.norm() * (scaled.norm() * z.norm() + ps.rhs.norm()));
        CHECK(defect < 1e-8);
    }
}

TEST_CASE("eepls RMSE sits on the pairwise bound") {
    // fixed scenario, 1000 noise draws; the N=2 network bound is the oracle
    RngStream rng(61);
    auto sc = sample_scenario(2, rng);
    const auto sch = default_schedule(20, 0.1, 10.0);
    const double sigma = 1e-8;

    RngStream quiet(0);
    const auto clean = simulate_network(sc, sch, NoiseSpec{0.0, 0}, all_pairs(2), quiet);
    const auto system = build_global_system(clean, 2);
    const auto constraints = build_constraints(system.layout, 1);
    const auto sigma_theta = ccrb_theta(system, constraints, sigma);
    const int cols[5] = {system.layout.alpha_col(2), system.layout.beta_col(2),
                         system.layout.gamma_col(0), system.layout.delta_col(0),
                         system.layout.epsilon_col(0)};

    const auto theta_true = pair_theta_truth(sc, PairIndex{1, 2}, true);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(5);
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const auto log = generate_pair_log(sc, PairIndex{1, 2}, sch, NoiseSpec{sigma, 0}, rng);
        const auto est = eepls_solve(build_pair_system(log, true), sc.wave_speed);
        sum_sq += (est.theta - theta_true).array().square().matrix();
    }
    for (int k = 0; k < 5; ++k) {
        const double rmse = std::sqrt(sum_sq[k] / trials);
        const double bound = std::sqrt(sigma_theta(cols[k], cols[k]));
        CHECK(rmse / bound == doctest::Approx(1.0).epsilon(0.15));
    }
}

TEST_CASE("global system shape, sign pattern and ground truth") {
    RngStream rng(67);
    const auto sc = sample_scenario(4, rng);
    const auto sch = default_schedule(5, 0.1, 10.0);
    const auto log = simulate_network(sc, sch, NoiseSpec{0.0, 0}, all_pairs(4), rng);
    const auto gs = build_global_system(log, 4);

    CHECK(gs.design.rows() == 30);
    CHECK(gs.design.cols() == 26);

    // first row block belongs to pair (1,2): +t_12 in column alpha_1,
    // -t_21 in column alpha_2, +/-1 in the offset columns
    const auto& entry = log.entries[0];
    for (int k = 0; k < 5; ++k) {
        CHECK(gs.design(k, gs.layout.alpha_col(1)) == entry.stamps_i[static_cast<std::size_t>(k)]);
        CHECK(gs.design(k, gs.layout.alpha_col(2)) ==
              -entry.stamps_j[static_cast<std::size_t>(k)]);
        CHECK(gs.design(k, gs.layout.beta_col(1)) == 1.0);
        CHECK(gs.design(k, gs.layout.beta_col(2)) == -1.0);
        CHECK(gs.design(k, gs.layout.alpha_col(3)) == 0.0);
    }

    const auto theta_true = sc.theta(gs.layout);
    CHECK((gs.design * theta_true).norm() < 1e-10);

    // isolated node rejected
    ExchangeLog partial;
    partial.entries = {log.entries[0], log.entries[1]}; // (1,2), (1,3): node 4 unlinked
    CHECK_THROWS_AS(build_global_system(partial, 4), identifiability_error);
    CHECK_THROWS_AS(build_global_system(ExchangeLog{}, 4), std::invalid_argument);
}

TEST_CASE("constraints pin the reference clock") {
    const auto layout = ParamLayout::full(4);
    const auto cs = build_constraints(layout, 1);
    CHECK(cs.matrix.rows() == 2);
    CHECK(cs.matrix.cols() == 26);
    CHECK(cs.matrix(0, layout.alpha_col(1)) == 1.0);
    CHECK(cs.matrix(1, layout.beta_col(1)) == 1.0);
    CHECK(cs.matrix.cwiseAbs().sum() == 2.0); // nothing else set
    CHECK(cs.values[0] == 1.0);
    CHECK(cs.values[1] == 0.0);
    // rows orthonormal
    const Eigen::MatrixXd gram = cs.matrix * cs.matrix.transpose();
    CHECK(gram.isApprox(Eigen::MatrixXd::Identity(2, 2), 1e-15));

    RngStream rng(71);
    const auto sc = sample_scenario(4, rng); // reference clock is ideal
    const auto theta_true = sc.theta(layout);
    CHECK((cs.matrix * theta_true - cs.values).norm() == 0.0);

    CHECK_THROWS_AS(build_constraints(layout, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_constraints(layout, 5), std::invalid_argument);
}

TEST_CASE("eegls recovers the truth exactly without noise") {
    RngStream rng(73);
    double worst = 0.0;
    for (int rep = 0; rep < 25; ++rep) {
        const auto sc = sample_scenario(4, rng);
        const auto sch = default_schedule(5 + rep % 16, 0.1, 10.0);
        const auto log = simulate_network(sc, sch, NoiseSpec{0.0, 0}, all_pairs(4), rng);
        const auto gs = build_global_system(log, 4);
        const auto est = eegls_solve(gs, build_constraints(gs.layout, 1), sc.wave_speed);
        worst = std::max(worst, vec_rel_err(est.theta, sc.theta(gs.layout)));
        CHECK(est.kkt_residual < 1e-8);
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("eegls with all clocks ideal returns unit calibrations") {
    RngStream rng(79);
    auto sc = sample_scenario(4, rng);
    for (auto& clock : sc.clocks) clock = ClockParams{1.0, 0.0};
    const auto sch = default_schedule(10, 0.1, 10.0);
    const auto log = simulate_network(sc, sch, NoiseSpec{0.0, 0}, all_pairs(4), rng);
    const auto gs = build_global_system(log, 4);
    const auto est = eegls_solve(gs, build_constraints(gs.layout, 1), sc.wave_speed);
    for (int n = 1; n <= 4; ++n) {
        CHECK(std::abs(est.theta[gs.layout.alpha_col(n)] - 1.0) < 1e-12);
        CHECK(std::abs(est.theta[gs.layout.beta_col(n)]) < 1e-12);
    }
}

TEST_CASE("eegls satisfies the constraints and the KKT system under noise") {
    RngStream rng(83);
    for (int rep = 0; rep < 20; ++rep) {
        const auto sc = sample_scenario(4, rng);
        const auto sch = default_schedule(12, 0.1, 10.0);
        const auto log = simulate_network(sc, sch, NoiseSpec{1e-8, 0}, all_pairs(4), rng);
        const auto gs = build_global_system(log, 4);
        const auto cs = build_constraints(gs.layout, 1);
        const auto est = eegls_solve(gs, cs, sc.wave_speed);
        CHECK((cs.matrix * est.theta - cs.values).norm() < 1e-12);
        CHECK(est.kkt_residual < 1e-8);
        CHECK(est.lambda.size() == 2);
        // direct check of the stationarity equations
        const Eigen::VectorXd grad =
            2.0 * (gs.design.transpose() * (gs.design * est.theta)) +
            cs.matrix.transpose() * est.lambda;
        const double scale =
            2.0 * gs.design.squaredNorm() * est.theta.norm() + est.lambda.norm() + 1e-300;
        CHECK(grad.norm() / scale < 1e-8);
    }
}

TEST_CASE("physical pair parameters do not depend on which ideal node anchors the gauge") {
    RngStream rng(89);
    auto sc = sample_scenario(4, rng);
    sc.clocks[1] = ClockParams{1.0, 0.0}; // nodes 1 and 2 both ideal
    const auto sch = default_schedule(10, 0.1, 10.0);
    const auto log = simulate_network(sc, sch, NoiseSpec{0.0, 0}, all_pairs(4), rng);
    const auto gs = build_global_system(log, 4);
    const auto est_ref1 = eegls_solve(gs, build_constraints(gs.layout, 1), sc.wave_speed);
    const auto est_ref2 = eegls_solve(gs, build_constraints(gs.layout, 2), sc.wave_speed);
    // floors follow from the double-precision timestamps: sensitivity of each
    // group to per-stamp rounding (~1e-15 s) puts rddot/rdot/r diffs at about
    // 1e-8, 1e-7 and 1e-6 absolute even for exact solvers
    for (int p = 0; p < 6; ++p) {
        const struct {
            int col;
            double floor;
        } checks[] = {{gs.layout.gamma_col(p), 2e-7},
                      {gs.layout.delta_col(p), 2e-6},
                      {gs.layout.epsilon_col(p), 1e-5}};
        for (const auto& chk : checks) {
            const double a = est_ref1.eta[chk.col];
            const double b = est_ref2.eta[chk.col];
            CHECK(std::abs(a - b) <= std::max(1e-8 * std::max(std::abs(a), std::abs(b)),
                                              chk.floor));
        }
    }
}

TEST_CASE("dropping one link keeps the remaining network estimable") {
    RngStream rng(97);
    const auto sc = sample_scenario(4, rng);
    const auto sch = default_schedule(8, 0.1, 10.0);
    std::vector<PairIndex> missing;
    for (const auto& p : all_pairs(4))
        if (!(p == PairIndex{2, 3})) missing.push_back(p);
    const auto log = simulate_network(sc, sch, NoiseSpec{0.0, 0}, missing, rng);
    const auto gs = build_global_system(log, 4);
    CHECK(gs.design.rows() == 40);
    CHECK(gs.design.cols() == 23); // 2*4 + 3*5
    const auto est = eegls_solve(gs, build_constraints(gs.layout, 1), sc.wave_speed);
    const auto layout = gs.layout;
    const auto eta_true = sc.eta(layout);
    for (int n = 1; n <= 4; ++n) {
        CHECK(std::abs(est.eta[layout.alpha_col(n)] - eta_true[layout.alpha_col(n)]) < 1e-8);
        CHECK(std::abs(est.eta[layout.beta_col(n)] - eta_true[layout.beta_col(n)]) < 1e-6);
    }
}

TEST_CASE("eegls names the deficient columns of a singular system") {
    RngStream rng(101);
    const auto sc = sample_scenario(4, rng);
    const auto log =
        simulate_network(sc, degenerate_schedule(6, 5.0), NoiseSpec{0.0, 0}, all_pairs(4), rng);
    const auto gs = build_global_system(log, 4);
    try {
        eegls_solve(gs, build_constraints(gs.layout, 1), sc.wave_speed);
        FAIL("expected identifiability_error");
    } catch (const identifiability_error& err) {
        const std::string what = err.what();
        CHECK(what.find("rank") != std::string::npos);
        CHECK(what.find("(") != std::string::npos); // names at least one column
    }
}

TEST_CASE("estimator errors shrink linearly with the noise level") {
    RngStream rng(103);
    const auto sc = sample_scenario(4, rng);
    const auto sch = default_schedule(20, 0.1, 10.0);
    const auto layout = ParamLayout::full(4);
    const auto theta_true = sc.theta(layout);

    std::vector<double> log_sigma, log_rmse;
    for (const double sigma : {1e-7, 1e-8, 1e-9, 1e-10, 1e-11}) {
        double sum_sq = 0.0;
        const int trials = 60;
        RngStream noise_rng(5150); // identical unit draws across decades
        for (int t = 0; t < trials; ++t) {
            const auto log = simulate_network(sc, sch, NoiseSpec{sigma, 0}, all_pairs(4), noise_rng);
            const auto gs = build_global_system(log, 4);
            const auto est = eegls_solve(gs, build_constraints(gs.layout, 1), sc.wave_speed);
            sum_sq += (est.theta - theta_true).squaredNorm() / theta_true.squaredNorm();
        }
        log_sigma.push_back(std::log10(sigma));
        log_rmse.push_back(0.5 * std::log10(sum_sq / trials));
    }
    // least-squares slope of log rmse vs log sigma
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < log_sigma.size(); ++k) {
        mx += log_sigma[k];
        my += log_rmse[k];
    }
    mx /= static_cast<double>(log_sigma.size());
    my /= static_cast<double>(log_sigma.size());
    double num = 0, den = 0;
    for (std::size_t k = 0; k < log_sigma.size(); ++k) {
        num += (log_sigma[k] - mx) * (log_rmse[k] - my);
        den += (log_sigma[k] - mx) * (log_sigma[k] - mx);
    }
    CHECK(num / den == doctest::Approx(1.0).epsilon(0.1));
}
