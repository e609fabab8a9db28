#pragma once

#include "bcpo/mdp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bcpo {

struct Transition {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;
    bool terminal = false; ///< next_state is a terminal (absorbing) state

    friend bool operator==(const Transition&, const Transition&) = default;
};

/// Logged transitions over a finite state/action space. Immutable once built.
class TransitionDataset {
public:
    TransitionDataset(int n_states, int n_actions, std::vector<Transition> records = {});

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::vector<Transition>& records() const { return records_; }

    /// CSV with header `s,a,r,s_next,terminal`.
    std::string to_csv() const;
    static TransitionDataset from_csv(std::string_view text, int n_states, int n_actions);
    static TransitionDataset load_csv(const std::filesystem::path& path, int n_states,
                                      int n_actions);

private:
    int n_states_;
    int n_actions_;
    std::vector<Transition> records_;
};

/// Sufficient statistics of a dataset. Counts are exact integers.
struct CountStatistics {
    int n_states = 0;
    int n_actions = 0;
    std::int64_t total = 0;          ///< N
    std::vector<std::int64_t> n_sa;  ///< n(s,a), index s*A + a
    std::vector<std::int64_t> n_sas; ///< n(s,a,s'), index (s*A + a)*S + s'
    Eigen::MatrixXd reward_sum;
    Eigen::MatrixXd reward_mean;     ///< r-hat, 0 where n(s,a) = 0
    std::vector<bool> terminal_mask; ///< states observed as terminal successors

    std::int64_t count(int s, int a) const {
        return n_sa[static_cast<std::size_t>(s) * n_actions + a];
    }
    std::int64_t count(int s, int a, int next) const {
        return n_sas[(static_cast<std::size_t>(s) * n_actions + a) * n_states + next];
    }
    /// sum_a n(s,a)
    std::int64_t state_count(int s) const;
};

/// Aggregates counts, reward sums and means. Throws ValidationError on bad indices.
CountStatistics count_statistics(const TransitionDataset& dataset);

/// Maximum-likelihood behavior policy; unvisited states get the uniform row.
TabularPolicy behavior_cloning(const CountStatistics& counts);

/// Empirical state marginal nu-hat(s) = sum_a n(s,a) / N. Throws EmptyDatasetError if N = 0.
Eigen::VectorXd state_marginal(const CountStatistics& counts);

} // namespace bcpo
