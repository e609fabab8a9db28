#pragma once

#include "bcpo/dataset.hpp"
#include "bcpo/mdp.hpp"

#include <cstdint>

namespace bcpo {

struct Cell {
    int row = 0;
    int col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Actions in index order.
enum class GridAction : int { Up = 0, Right = 1, Down = 2, Left = 3 };
inline constexpr int kGridActions = 4;

enum class SlipModel {
    Perpendicular, ///< slip to each perpendicular direction with slip/2
    UniformAction, ///< with probability slip, a uniformly random action is executed
};

struct GridSpec {
    int width = 6;
    int height = 6;
    Cell goal{5, 5};
    Cell trap{2, 3};
    Cell start{0, 0};
    double slip_prob = 0.10;
    SlipModel slip_model = SlipModel::Perpendicular;
    double step_penalty = -0.01;
    double goal_reward = 1.0;
    double trap_reward = -1.0;
    /// Whether the step penalty is also charged on the step entering goal/trap.
    bool penalty_on_terminal = true;
    double gamma = 0.97;
    int max_episode_steps = 200;

    void validate() const;

    int n_states() const { return width * height; }
    int state_of(Cell c) const { return c.row * width + c.col; }
    Cell cell_of(int s) const { return {s / width, s % width}; }

    /// Reward for a step that lands in `next` (depends only on the landing cell).
    double step_reward(int next) const;
    /// Smallest and largest per-step reward.
    double min_reward() const;
    double max_reward() const;
};

/// Ground-truth MDP of the grid. Goal and trap are absorbing zero-reward states.
TabularMDP build_mdp(const GridSpec& spec);

/// (1 - epsilon) * shortest-Manhattan-path-to-goal policy + epsilon * uniform.
TabularPolicy make_behavior_policy(const TabularMDP& mdp, const GridSpec& spec, double epsilon);

/**
 * Episodes from the start distribution under `policy`, each ending on a
 * terminal entry or after max_episode_steps, concatenated until exactly
 * n_transitions records exist (the last episode is cut short).
 */
TransitionDataset generate_dataset(const TabularMDP& mdp, const GridSpec& spec,
                                   const TabularPolicy& policy, long n_transitions,
                                   int max_episode_steps, std::uint64_t seed);

enum class ReturnMode { Undiscounted, Discounted };

struct RolloutStats {
    double mean_return = 0.0;
    double std_return = 0.0; ///< population standard deviation
    double mean_length = 0.0;
};

RolloutStats rollout_evaluate(const TabularMDP& mdp, const GridSpec& spec,
                              const TabularPolicy& policy, int n_episodes, int max_episode_steps,
                              std::uint64_t seed, ReturnMode mode = ReturnMode::Undiscounted);

} // namespace bcpo
