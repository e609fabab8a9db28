#include "bcpo/dataset.hpp"
#include "bcpo/errors.hpp"
#include "bcpo/gridworld.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

using namespace bcpo;

TEST(CountStatistics, EmptyDatasetHasZeroCounts) {
    const CountStatistics c = count_statistics(TransitionDataset(3, 2));
    EXPECT_EQ(c.total, 0);
    for (auto n : c.n_sa) EXPECT_EQ(n, 0);
    EXPECT_EQ(c.reward_mean.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(state_marginal(c), EmptyDatasetError);
}

TEST(CountStatistics, IdenticalRecordsAccumulate) {
    const TransitionDataset d(3, 2, {{1, 0, 0.5, 2, false}, {1, 0, 0.5, 2, false}, {1, 0, 0.5, 2, false}});
    const CountStatistics c = count_statistics(d);
    EXPECT_EQ(c.count(1, 0), 3);
    EXPECT_EQ(c.count(1, 0, 2), 3);
    EXPECT_DOUBLE_EQ(c.reward_mean(1, 0), 0.5);
}

TEST(CountStatistics, MatchesNaiveRecount) {
    Rng rng(42);
    const int ns = 5, na = 3;
    const TransitionDataset d = bcpo::testing::random_dataset(rng, ns, na, 1000);
    const CountStatistics c = count_statistics(d);

    std::map<std::pair<int, int>, long> pair_counts;
    std::map<std::tuple<int, int, int>, long> triple_counts;
    std::map<std::pair<int, int>, double> reward_sums;
    for (const Transition& t : d.records()) {
        ++pair_counts[{t.state, t.action}];
        ++triple_counts[{t.state, t.action, t.next_state}];
        reward_sums[{t.state, t.action}] += t.reward;
    }
    EXPECT_EQ(c.total, 1000);
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) {
            EXPECT_EQ(c.count(s, a), (pair_counts[{s, a}]));
            long row_total = 0;
            for (int t = 0; t < ns; ++t) {
                EXPECT_EQ(c.count(s, a, t), (triple_counts[{s, a, t}]));
                row_total += c.count(s, a, t);
            }
            EXPECT_EQ(row_total, c.count(s, a));
            if (pair_counts[{s, a}] > 0)
                EXPECT_NEAR(c.reward_mean(s, a), (reward_sums[{s, a}] / pair_counts[{s, a}]), 1e-12);
        }
}

TEST(CountStatistics, InvariantToRecordOrder) {
    Rng rng(1);
    const TransitionDataset d = bcpo::testing::random_dataset(rng, 4, 2, 300);
    auto records = d.records();
    std::reverse(records.begin(), records.end());
    std::rotate(records.begin(), records.begin() + 97, records.end());
    const CountStatistics a = count_statistics(d);
    const CountStatistics b = count_statistics(TransitionDataset(4, 2, records));
    EXPECT_EQ(a.n_sa, b.n_sa);
    EXPECT_EQ(a.n_sas, b.n_sas);
    EXPECT_LT((a.reward_mean - b.reward_mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CountStatistics, TerminalMaskFollowsTerminalSuccessors) {
    const TransitionDataset d(3, 1, {{0, 0, 0.0, 1, false}, {1, 0, 1.0, 2, true}});
    const CountStatistics c = count_statistics(d);
    EXPECT_FALSE(c.terminal_mask[0]);
    EXPECT_FALSE(c.terminal_mask[1]);
    EXPECT_TRUE(c.terminal_mask[2]);
}

TEST(Dataset, RejectsOutOfRangeRecords) {
    EXPECT_THROW(TransitionDataset(2, 2, {{2, 0, 0.0, 0, false}}), ValidationError);
    EXPECT_THROW(TransitionDataset(2, 2, {{0, 2, 0.0, 0, false}}), ValidationError);
    EXPECT_THROW(TransitionDataset(2, 2, {{0, 0, std::nan(""), 0, false}}), ValidationError);
}

TEST(Dataset, CsvRoundTripIsExact) {
    Rng rng(5);
    const TransitionDataset d = bcpo::testing::random_dataset(rng, 6, 4, 200);
    const std::string text = d.to_csv();
    EXPECT_EQ(text.substr(0, text.find('\n')), "s,a,r,s_next,terminal");
    const TransitionDataset back = TransitionDataset::from_csv(text, 6, 4);
    EXPECT_EQ(back.to_csv(), text);
}

TEST(Dataset, MalformedCsvIsValidationError) {
    EXPECT_THROW(TransitionDataset::from_csv("x,y\n", 2, 2), ValidationError);
    EXPECT_THROW(TransitionDataset::from_csv("s,a,r,s_next,terminal\n0,0,1\n", 2, 2), ValidationError);
    EXPECT_THROW(TransitionDataset::from_csv("s,a,r,s_next,terminal\n0,5,1,0,0\n", 2, 2), ValidationError);
    EXPECT_THROW(TransitionDataset::load_csv("/nonexistent/data.csv", 2, 2), IoError);
}

TEST(BehaviorCloning, FrequencyRatios) {
    const TransitionDataset d(2, 2, {{0, 0, 0, 0, false}, {0, 0, 0, 0, false}, {0, 0, 0, 0, false},
                                     {0, 1, 0, 0, false}});
    const TabularPolicy pi = behavior_cloning(count_statistics(d));
    EXPECT_DOUBLE_EQ(pi.probs(0, 0), 0.75);
    EXPECT_DOUBLE_EQ(pi.probs(0, 1), 0.25);
    EXPECT_DOUBLE_EQ(pi.probs(1, 0), 0.5);
}

TEST(BehaviorCloning, UnvisitedStateIsUniform) {
    const TabularPolicy pi = behavior_cloning(count_statistics(TransitionDataset(3, 4, {{0, 1, 0, 0, false}})));
    for (int a = 0; a < 4; ++a) EXPECT_DOUBLE_EQ(pi.probs(2, a), 0.25);
}

TEST(BehaviorCloning, MaximizesLikelihoodOverSimplexGrid) {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Transition> records;
        const int n0 = 1 + rng.uniform_int(20), n1 = rng.uniform_int(20);
        for (int i = 0; i < n0; ++i) records.push_back({0, 0, 0, 0, false});
        for (int i = 0; i < n1; ++i) records.push_back({0, 1, 0, 0, false});
        const TabularPolicy pi = behavior_cloning(count_statistics(TransitionDataset(1, 2, records)));
        auto loglik = [&](double p) {
            return n0 * std::log(p) + (n1 > 0 ? n1 * std::log(1.0 - p) : 0.0);
        };
        const double fitted = loglik(pi.probs(0, 0));
        for (int j = 1; j < 1000; ++j) EXPECT_LE(loglik(j / 1000.0), fitted + 1e-12);
    }
}

TEST(BehaviorCloning, RecoversGridworldBehaviorOnWellVisitedStates) {
    const GridSpec spec;
    const TabularMDP mdp = build_mdp(spec);
    const TabularPolicy behavior = make_behavior_policy(mdp, spec, 0.5);
    const TransitionDataset d = generate_dataset(mdp, spec, behavior, 15'000, 200, 0);
    const CountStatistics c = count_statistics(d);
    const TabularPolicy cloned = behavior_cloning(c);
    int checked = 0;
    for (int s = 0; s < mdp.n_states; ++s) {
        if (c.state_count(s) < 100) continue;
        ++checked;
        EXPECT_LE((cloned.probs.row(s) - behavior.probs.row(s)).cwiseAbs().sum(), 0.15) << "state " << s;
    }
    EXPECT_GT(checked, 10);
}

TEST(StateMarginal, PointMassAndRatios) {
    const Eigen::VectorXd point = state_marginal(
        count_statistics(TransitionDataset(3, 1, {{1, 0, 0, 0, false}, {1, 0, 0, 2, false}})));
    EXPECT_DOUBLE_EQ(point(1), 1.0);

    std::vector<Transition> records;
    for (int i = 0; i < 30; ++i) records.push_back({0, 0, 0, 0, false});
    for (int i = 0; i < 70; ++i) records.push_back({1, 0, 0, 0, false});
    const Eigen::VectorXd nu = state_marginal(count_statistics(TransitionDataset(2, 1, records)));
    EXPECT_DOUBLE_EQ(nu(0), 0.3);
    EXPECT_DOUBLE_EQ(nu(1), 0.7);
}

TEST(StateMarginal, MatchesRecount) {
    Rng rng(8);
    const TransitionDataset d = bcpo::testing::random_dataset(rng, 7, 2, 500);
    const Eigen::VectorXd nu = state_marginal(count_statistics(d));
    std::vector<double> recount(7, 0.0);
    for (const auto& t : d.records()) recount[t.state] += 1.0 / 500.0;
    for (int s = 0; s < 7; ++s) EXPECT_NEAR(nu(s), recount[s], 1e-12);
}
