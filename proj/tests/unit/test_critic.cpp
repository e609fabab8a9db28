#include "bcpo/critic.hpp"
#include "bcpo/errors.hpp"
#include "bcpo/verification.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bcpo;

namespace {

/// Single self-looping state with the given reward estimate and radii.
struct ScalarInstance {
    CountStatistics counts;
    PosteriorModel model;

    ScalarInstance(double r_hat, double b_r, double b_p) {
        counts.n_states = 1;
        counts.n_actions = 1;
        counts.total = 10;
        counts.n_sa = {10};
        counts.n_sas = {10};
        counts.reward_sum = Eigen::MatrixXd::Constant(1, 1, 10 * r_hat);
        counts.reward_mean = Eigen::MatrixXd::Constant(1, 1, r_hat);
        counts.terminal_mask = {false};
        model.posterior_mean = TransitionTensor(1, 1, 1.0);
        model.empirical = TransitionTensor(1, 1, 1.0);
        model.b_r = Eigen::MatrixXd::Constant(1, 1, b_r);
        model.b_p = Eigen::MatrixXd::Constant(1, 1, b_p);
    }
};

/// Counts and posterior fitted to a random dataset on a random MDP.
struct RandomInstance {
    TabularMDP mdp;
    CountStatistics counts;
    PosteriorModel model;

    RandomInstance(Rng& rng, int ns, int na, int n_records, double gamma) {
        mdp = random_mdp(rng, ns, na, gamma);
        counts = count_statistics(sample_iid_dataset(mdp, random_policy(rng, ns, na), n_records, rng));
        model = fit_posterior(counts, DirichletPrior::symmetric(ns, na), 0.1);
    }
};

QTable random_q(Rng& rng, int ns, int na, double scale) {
    QTable q = QTable::zeros(ns, na);
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) q.values(s, a) = scale * (2.0 * rng.uniform() - 1.0);
    return q;
}

} // namespace

TEST(PessimisticBackup, ZeroBonusesReduceToPosteriorMeanBackup) {
    Rng rng(1);
    RandomInstance inst(rng, 5, 3, 300, 0.9);
    inst.model.b_r.setZero();
    inst.model.b_p.setZero();
    const TabularPolicy pi = random_policy(rng, 5, 3);
    const QTable q = random_q(rng, 5, 3, 3.0);
    const QTable out = pessimistic_backup(q, pi, inst.model, inst.counts, 0.9);
    for (int s = 0; s < 5; ++s)
        for (int a = 0; a < 3; ++a) {
            double acc = inst.counts.reward_mean(s, a);
            for (int t = 0; t < 5; ++t)
                for (int b = 0; b < 3; ++b)
                    acc += 0.9 * inst.model.posterior_mean(s, a, t) * pi.probs(t, b) * q.values(t, b);
            EXPECT_NEAR(out.values(s, a), acc, 1e-12);
        }
}

TEST(PessimisticBackup, ZeroQGivesRewardLowerBound) {
    Rng rng(2);
    const RandomInstance inst(rng, 4, 2, 100, 0.9);
    const QTable out = pessimistic_backup(QTable::zeros(4, 2), random_policy(rng, 4, 2), inst.model, inst.counts, 0.9);
    EXPECT_LT((out.values - (inst.counts.reward_mean - inst.model.b_r)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PessimisticBackup, TransitionPenaltyUsesSupNormOfValues) {
    Rng rng(3);
    const RandomInstance inst(rng, 4, 2, 100, 0.8);
    const TabularPolicy pi = random_policy(rng, 4, 2);
    const QTable q = random_q(rng, 4, 2, 2.0);
    Eigen::VectorXd v(4);
    for (int s = 0; s < 4; ++s) v(s) = pi.probs(s, 0) * q.values(s, 0) + pi.probs(s, 1) * q.values(s, 1);
    const double v_norm = v.cwiseAbs().maxCoeff();
    const QTable full = pessimistic_backup(q, pi, inst.model, inst.counts, 0.8, 1.0);
    const QTable half = pessimistic_backup(q, pi, inst.model, inst.counts, 0.8, 0.5);
    for (int s = 0; s < 4; ++s)
        for (int a = 0; a < 2; ++a)
            EXPECT_NEAR(half.values(s, a) - full.values(s, a), 0.5 * 0.8 * inst.model.b_p(s, a) * v_norm, 1e-12);
}

TEST(PessimisticBackup, TerminalStatesAreAbsorbingZero) {
    const TransitionDataset d(3, 1, {{0, 0, 0.5, 1, false}, {1, 0, 1.0, 2, true}, {2, 0, 7.0, 2, false}});
    const CountStatistics c = count_statistics(d);
    const PosteriorModel m = fit_posterior(c, DirichletPrior::symmetric(3, 1), 0.1);
    const QTable q{Eigen::MatrixXd::Constant(3, 1, 5.0)};
    const QTable out = pessimistic_backup(q, TabularPolicy::uniform(3, 1), m, c, 0.9);
    EXPECT_EQ(out.values(2, 0), 0.0);
    const double expected_1 = (1.0 - m.b_r(1, 0)) + 0.9 * (m.posterior_mean(1, 0, 0) * 5.0 + m.posterior_mean(1, 0, 1) * 5.0) -
                              0.9 * m.b_p(1, 0) * 5.0;
    EXPECT_NEAR(out.values(1, 0), expected_1, 1e-12);
}

TEST(PessimisticBackup, LipschitzBoundOnRandomPairs) {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const int ns = 2 + rng.uniform_int(6), na = 2 + rng.uniform_int(3);
        const RandomInstance inst(rng, ns, na, 20 + rng.uniform_int(200), 0.9);
        const double gamma = 0.3 + 0.6 * rng.uniform();
        const PessimisticOperator op(inst.model, inst.counts, gamma);
        const TabularPolicy pi = random_policy(rng, ns, na);
        const QTable q1 = random_q(rng, ns, na, 5.0), q2 = random_q(rng, ns, na, 5.0);
        const double bound = gamma * (1.0 + inst.model.b_p.maxCoeff()) * sup_norm(q1.values - q2.values);
        EXPECT_LE(sup_norm(op.apply(q1, pi).values - op.apply(q2, pi).values), bound + 1e-12);
    }
}

TEST(FixedPoint, ScalarInstanceConverges) {
    const ScalarInstance inst(1.0, 0.1, 0.0);
    const PessimisticOperator op(inst.model, inst.counts, 0.9);
    CriticOptions options;
    options.tol = 1e-8;
    const PessimisticCritic critic = solve_pessimistic_fixed_point(op, TabularPolicy::uniform(1, 1), options);
    EXPECT_NEAR(critic.q_lcb.values(0, 0), 9.0, 1e-7);
    EXPECT_LE(critic.iterations_used, 200);
    EXPECT_LE(critic.final_residual, 1e-8);
}

TEST(FixedPoint, ZeroBonusesMatchExactEvaluation) {
    Rng rng(5);
    const double gamma = 0.9, tol = 1e-8;
    RandomInstance inst(rng, 5, 2, 100, gamma);
    inst.model.b_r.setZero();
    inst.model.b_p.setZero();
    inst.model.posterior_mean = inst.mdp.transition;
    inst.counts.reward_mean = inst.mdp.mean_reward;
    const TabularPolicy pi = random_policy(rng, 5, 2);
    const PessimisticOperator op(inst.model, inst.counts, gamma);
    const PessimisticCritic critic = solve_pessimistic_fixed_point(op, pi, {tol});
    const QTable exact = exact_policy_evaluation(inst.mdp, pi, 1e-13);
    EXPECT_LE(sup_norm(critic.q_lcb.values - exact.values), 2 * tol / (1 - gamma));
    EXPECT_NEAR(pessimistic_return(critic, pi, inst.mdp.initial_dist), policy_return(inst.mdp, pi),
                2 * tol / (1 - gamma));
}

TEST(FixedPoint, BonusesOnlyLowerTheFixedPoint) {
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        RandomInstance inst(rng, 5, 2, 2000, 0.6);
        const TabularPolicy pi = random_policy(rng, 5, 2);
        const PessimisticCritic lcb =
            solve_pessimistic_fixed_point(PessimisticOperator(inst.model, inst.counts, 0.6), pi);
        PosteriorModel mean_only = inst.model;
        mean_only.b_r.setZero();
        mean_only.b_p.setZero();
        const PessimisticCritic mean =
            solve_pessimistic_fixed_point(PessimisticOperator(mean_only, inst.counts, 0.6), pi);
        EXPECT_TRUE((lcb.q_lcb.values.array() <= mean.q_lcb.values.array() + 1e-8).all());
    }
}

TEST(FixedPoint, ResidualsDecayGeometrically) {
    Rng rng(7);
    const RandomInstance inst(rng, 6, 3, 500, 0.9);
    const double gamma = 0.95 / (1.0 + inst.model.b_p.maxCoeff());
    const PessimisticOperator op(inst.model, inst.counts, gamma);
    CriticOptions options;
    options.keep_residuals = true;
    options.max_iters = 2000;
    const PessimisticCritic critic = solve_pessimistic_fixed_point(op, random_policy(rng, 6, 3), options);
    const double lipschitz = op.lipschitz_bound();
    ASSERT_GE(critic.residuals.size(), 3u);
    for (std::size_t k = 1; k + 1 < critic.residuals.size(); ++k)
        EXPECT_LE(critic.residuals[k + 1], lipschitz * critic.residuals[k] + 1e-14);
}

TEST(FixedPoint, ValueVectorMatchesPolicyAverage) {
    Rng rng(8);
    const RandomInstance inst(rng, 5, 3, 300, 0.5);
    const TabularPolicy pi = random_policy(rng, 5, 3);
    const PessimisticCritic critic =
        solve_pessimistic_fixed_point(PessimisticOperator(inst.model, inst.counts, 0.5), pi);
    for (int s = 0; s < 5; ++s) {
        double v = 0.0;
        for (int a = 0; a < 3; ++a) v += pi.probs(s, a) * critic.q_lcb.values(s, a);
        EXPECT_NEAR(critic.v_lcb(s), v, 1e-10);
    }
}

TEST(FixedPoint, MaxItersExhaustionCarriesResidual) {
    const ScalarInstance inst(1.0, 0.1, 0.0);
    const PessimisticOperator op(inst.model, inst.counts, 0.9);
    CriticOptions options;
    options.max_iters = 5;
    try {
        solve_pessimistic_fixed_point(op, TabularPolicy::uniform(1, 1), options);
        FAIL() << "expected NonConvergenceError";
    } catch (const NonConvergenceError& e) {
        EXPECT_GT(e.residual(), 1e-8);
        EXPECT_EQ(e.iterations(), 5);
    }
}

TEST(FixedPoint, NonContractingOperatorIsDetected) {
    // gamma * (1 + scale * b_P) = 0.9 * 1.5 > 1 with a negative reward: V diverges to -inf
    const ScalarInstance inst(-1.0, 0.0, 1.0);
    const PessimisticOperator op(inst.model, inst.counts, 0.9, 0.5);
    EXPECT_GE(op.lipschitz_bound(), 1.0);
    EXPECT_THROW(solve_pessimistic_fixed_point(op, TabularPolicy::uniform(1, 1)), NumericalError);
}

TEST(PessimisticReturn, PointMassReadsStateValue) {
    Rng rng(9);
    const RandomInstance inst(rng, 4, 2, 200, 0.7);
    const TabularPolicy pi = random_policy(rng, 4, 2);
    const PessimisticCritic critic =
        solve_pessimistic_fixed_point(PessimisticOperator(inst.model, inst.counts, 0.7, 0.1), pi);
    EXPECT_DOUBLE_EQ(pessimistic_return(critic, pi, Eigen::Vector4d(0, 0, 1, 0)), critic.v_lcb(2));
    EXPECT_THROW(pessimistic_return(critic, random_policy(rng, 4, 2), Eigen::Vector4d(0, 0, 1, 0)),
                 ValidationError);
}

TEST(PessimisticAdvantage, CenteringExamples) {
    PessimisticCritic critic;
    critic.q_lcb = QTable{Eigen::MatrixXd(1, 2)};
    critic.q_lcb.values << 1.0, 3.0;
    const TabularPolicy uniform = TabularPolicy::uniform(1, 2);
    critic.v_lcb = state_values(critic.q_lcb, uniform);
    critic.policy_fingerprint = uniform.fingerprint();
    const Eigen::MatrixXd adv = pessimistic_advantage(critic, uniform);
    EXPECT_DOUBLE_EQ(adv(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(adv(0, 1), 1.0);

    const TabularPolicy det = TabularPolicy::deterministic({1}, 2);
    critic.v_lcb = state_values(critic.q_lcb, det);
    critic.policy_fingerprint = det.fingerprint();
    EXPECT_EQ(pessimistic_advantage(critic, det)(0, 1), 0.0);
}

TEST(PessimisticAdvantage, RowsCenteredUnderPolicy) {
    Rng rng(10);
    const RandomInstance inst(rng, 6, 4, 300, 0.8);
    const TabularPolicy pi = random_policy(rng, 6, 4);
    const PessimisticCritic critic =
        solve_pessimistic_fixed_point(PessimisticOperator(inst.model, inst.counts, 0.5), pi);
    const Eigen::MatrixXd adv = pessimistic_advantage(critic, pi);
    for (int s = 0; s < 6; ++s) {
        double centered = 0.0;
        for (int a = 0; a < 4; ++a) centered += pi.probs(s, a) * adv(s, a);
        EXPECT_NEAR(centered, 0.0, 1e-10);
    }
}

TEST(Calibration, OneStepEventIsRareAndFixedPointIsPessimistic) {
    const CalibrationSettings settings;
    const CalibrationReport report = run_calibration(settings);
    EXPECT_EQ(report.datasets, 500);
    EXPECT_LE(report.event_failure_rate(), settings.delta + 0.05);
    EXPECT_EQ(report.fixed_point_violations, 0);
    EXPECT_EQ(report.return_bound_violations, 0);
    EXPECT_EQ(report.improvement_violations, 0);
}

TEST(PessimisticBackup, SupNormPenaltyBreaksOrderPreservation) {
    // two absorbing states; raising V at state 1 raises ||V||_inf and so lowers the backup at state 0
    CountStatistics counts;
    counts.n_states = 2;
    counts.n_actions = 1;
    counts.total = 20;
    counts.n_sa = {10, 10};
    counts.n_sas = {10, 0, 0, 10};
    counts.reward_sum = Eigen::MatrixXd::Zero(2, 1);
    counts.reward_mean = Eigen::MatrixXd::Zero(2, 1);
    counts.terminal_mask = {false, false};
    PosteriorModel model;
    model.posterior_mean = TransitionTensor(2, 1);
    model.posterior_mean(0, 0, 0) = 1.0;
    model.posterior_mean(1, 0, 1) = 1.0;
    model.empirical = model.posterior_mean;
    model.b_r = Eigen::MatrixXd::Zero(2, 1);
    model.b_p = Eigen::MatrixXd(2, 1);
    model.b_p << 0.5, 0.0;
    const PessimisticOperator op(model, counts, 0.5);
    const TabularPolicy pi = TabularPolicy::uniform(2, 1);
    QTable low = QTable::zeros(2, 1), high = QTable::zeros(2, 1);
    high.values(1, 0) = 1.0;
    EXPECT_DOUBLE_EQ(op.apply(low, pi).values(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(op.apply(high, pi).values(0, 0), -0.25);
}

TEST(Calibration, PicardFromTrueValuesDescendsMonotonically) {
    const CalibrationReport report = run_calibration();
    EXPECT_EQ(report.descent_violations, 0)
        << "on " << report.datasets - report.event_failures << " datasets where one-step pessimism held";
}
