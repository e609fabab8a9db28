#include "bcpo/gridworld.hpp"

#include "bcpo/errors.hpp"
#include "bcpo/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace bcpo {

namespace {

constexpr int kRowDelta[kGridActions] = {-1, 0, 1, 0};
constexpr int kColDelta[kGridActions] = {0, 1, 0, -1};

Cell move(const GridSpec& spec, Cell from, int action) {
    const Cell to{from.row + kRowDelta[action], from.col + kColDelta[action]};
    if (to.row < 0 || to.row >= spec.height || to.col < 0 || to.col >= spec.width) return from;
    return to;
}

bool in_grid(const GridSpec& spec, Cell c) {
    return c.row >= 0 && c.row < spec.height && c.col >= 0 && c.col < spec.width;
}

int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

bool is_terminal(const GridSpec& spec, Cell c) { return c == spec.goal || c == spec.trap; }

} // namespace

void GridSpec::validate() const {
    if (width <= 0 || height <= 0) throw ValidationError("grid: dimensions must be positive");
    if (!in_grid(*this, goal) || !in_grid(*this, trap) || !in_grid(*this, start))
        throw ValidationError("grid: goal, trap and start must lie inside the grid");
    if (goal == trap || goal == start || trap == start)
        throw ValidationError("grid: goal, trap and start must be distinct cells");
    if (!(slip_prob >= 0.0 && slip_prob < 1.0)) throw ValidationError("grid: slip_prob must lie in [0,1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("grid: gamma must lie in (0,1)");
    if (max_episode_steps < 1) throw ValidationError("grid: max_episode_steps must be >= 1");
    if (!std::isfinite(step_penalty) || !std::isfinite(goal_reward) || !std::isfinite(trap_reward))
        throw ValidationError("grid: rewards must be finite");
}

double GridSpec::step_reward(int next) const {
    const Cell c = cell_of(next);
    const double terminal_penalty = penalty_on_terminal ? step_penalty : 0.0;
    if (c == goal) return goal_reward + terminal_penalty;
    if (c == trap) return trap_reward + terminal_penalty;
    return step_penalty;
}

double GridSpec::min_reward() const {
    return std::min({step_reward(state_of(goal)), step_reward(state_of(trap)), step_penalty});
}

double GridSpec::max_reward() const {
    return std::max({step_reward(state_of(goal)), step_reward(state_of(trap)), step_penalty});
}

TabularMDP build_mdp(const GridSpec& spec) {
    spec.validate();
    TabularMDP mdp;
    mdp.n_states = spec.n_states();
    mdp.n_actions = kGridActions;
    mdp.discount = spec.gamma;
    mdp.transition = TransitionTensor(mdp.n_states, mdp.n_actions);
    mdp.mean_reward = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_actions);
    mdp.terminal_mask.assign(static_cast<std::size_t>(mdp.n_states), false);
    mdp.terminal_mask[spec.state_of(spec.goal)] = true;
    mdp.terminal_mask[spec.state_of(spec.trap)] = true;
    mdp.initial_dist = Eigen::VectorXd::Zero(mdp.n_states);
    mdp.initial_dist(spec.state_of(spec.start)) = 1.0;

    for (int s = 0; s < mdp.n_states; ++s) {
        const Cell here = spec.cell_of(s);
        for (int a = 0; a < kGridActions; ++a) {
            if (is_terminal(spec, here)) {
                mdp.transition(s, a, s) = 1.0;
                continue;
            }
            // executed action -> probability
            double executed[kGridActions] = {0.0, 0.0, 0.0, 0.0};
            executed[a] += 1.0 - spec.slip_prob;
            if (spec.slip_model == SlipModel::Perpendicular) {
                executed[(a + 1) % kGridActions] += spec.slip_prob / 2.0;
                executed[(a + 3) % kGridActions] += spec.slip_prob / 2.0;
            } else {
                for (double& p : executed) p += spec.slip_prob / kGridActions;
            }
            for (int b = 0; b < kGridActions; ++b) {
                if (executed[b] == 0.0) continue;
                const int next = spec.state_of(move(spec, here, b));
                mdp.transition(s, a, next) += executed[b];
                mdp.mean_reward(s, a) += executed[b] * spec.step_reward(next);
            }
        }
    }
    mdp.validate();
    return mdp;
}

TabularPolicy make_behavior_policy(const TabularMDP& mdp, const GridSpec& spec, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("behavior epsilon must lie in [0,1]");
    if (mdp.n_states != spec.n_states() || mdp.n_actions != kGridActions)
        throw ValidationError("behavior policy: MDP does not match grid spec");
    TabularPolicy policy{Eigen::MatrixXd::Constant(mdp.n_states, kGridActions, epsilon / kGridActions)};
    for (int s = 0; s < mdp.n_states; ++s) {
        const Cell here = spec.cell_of(s);
        const int distance = manhattan(here, spec.goal);
        int chosen = 0;
        for (int a = 0; a < kGridActions; ++a) {
            if (manhattan(move(spec, here, a), spec.goal) < distance) {
                chosen = a;
                break;
            }
        }
        policy.probs(s, chosen) += 1.0 - epsilon;
    }
    return policy;
}

TransitionDataset generate_dataset(const TabularMDP& mdp, const GridSpec& spec,
                                   const TabularPolicy& policy, long n_transitions,
                                   int max_episode_steps, std::uint64_t seed) {
    if (n_transitions < 1) throw ValidationError("generate_dataset: n_transitions must be >= 1");
    if (max_episode_steps < 1) throw ValidationError("generate_dataset: max_episode_steps must be >= 1");
    policy.validate();
    Rng rng(seed);
    std::vector<Transition> records;
    records.reserve(static_cast<std::size_t>(n_transitions));
    const std::span<const double> initial(mdp.initial_dist.data(),
                                          static_cast<std::size_t>(mdp.n_states));
    std::vector<double> action_probs(kGridActions);

    while (static_cast<long>(records.size()) < n_transitions) {
        int s = rng.categorical(initial);
        for (int t = 0; t < max_episode_steps; ++t) {
            for (int a = 0; a < kGridActions; ++a) action_probs[a] = policy.probs(s, a);
            const int a = rng.categorical(action_probs);
            const int next = rng.categorical(mdp.transition.row(s, a));
            const bool terminal = mdp.terminal_mask[next];
            records.push_back({s, a, spec.step_reward(next), next, terminal});
            if (static_cast<long>(records.size()) >= n_transitions || terminal) break;
            s = next;
        }
    }
    return TransitionDataset(mdp.n_states, mdp.n_actions, std::move(records));
}

RolloutStats rollout_evaluate(const TabularMDP& mdp, const GridSpec& spec,
                              const TabularPolicy& policy, int n_episodes, int max_episode_steps,
                              std::uint64_t seed, ReturnMode mode) {
    if (n_episodes < 1) throw ValidationError("rollout_evaluate: n_episodes must be >= 1");
    if (max_episode_steps < 1) throw ValidationError("rollout_evaluate: max_episode_steps must be >= 1");
    policy.validate();
    Rng rng(seed);
    const std::span<const double> initial(mdp.initial_dist.data(),
                                          static_cast<std::size_t>(mdp.n_states));
    std::vector<double> action_probs(kGridActions);

    double sum = 0.0, sum_sq = 0.0, length_sum = 0.0;
    for (int episode = 0; episode < n_episodes; ++episode) {
        int s = rng.categorical(initial);
        double ret = 0.0, discount = 1.0;
        int t = 0;
        while (t < max_episode_steps && !mdp.terminal_mask[s]) {
            for (int a = 0; a < kGridActions; ++a) action_probs[a] = policy.probs(s, a);
            const int a = rng.categorical(action_probs);
            const int next = rng.categorical(mdp.transition.row(s, a));
            ret += discount * spec.step_reward(next);
            if (mode == ReturnMode::Discounted) discount *= mdp.discount;
            s = next;
            ++t;
        }
        sum += ret;
        sum_sq += ret * ret;
        length_sum += t;
    }
    RolloutStats stats;
    stats.mean_return = sum / n_episodes;
    stats.std_return = std::sqrt(std::max(0.0, sum_sq / n_episodes - stats.mean_return * stats.mean_return));
    stats.mean_length = length_sum / n_episodes;
    return stats;
}

} // namespace bcpo
