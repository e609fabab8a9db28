#include "bcpo/mdp.hpp"

#include "bcpo/errors.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace bcpo {

TransitionTensor::TransitionTensor(int n_states, int n_actions, double fill)
    : n_states_(n_states), n_actions_(n_actions),
      data_(static_cast<std::size_t>(n_states) * n_actions * n_states, fill) {
    if (n_states <= 0 || n_actions <= 0)
        throw ValidationError("transition tensor needs positive dimensions");
}

void TransitionTensor::validate_stochastic(double tol, const char* what) const {
    for (int s = 0; s < n_states_; ++s) {
        for (int a = 0; a < n_actions_; ++a) {
            double total = 0.0;
            for (double p : row(s, a)) {
                if (!(p >= 0.0) || !std::isfinite(p))
                    throw ValidationError(std::string(what) + ": negative or non-finite entry at (" +
                                          std::to_string(s) + "," + std::to_string(a) + ")");
                total += p;
            }
            if (std::abs(total - 1.0) > tol)
                throw ValidationError(std::string(what) + ": row (" + std::to_string(s) + "," +
                                      std::to_string(a) + ") sums to " + std::to_string(total));
        }
    }
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
    return {Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions)};
}

TabularPolicy TabularPolicy::deterministic(const std::vector<int>& actions, int n_actions) {
    TabularPolicy policy{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()), n_actions)};
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] < 0 || actions[s] >= n_actions)
            throw ValidationError("deterministic policy: action out of range");
        policy.probs(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
    }
    return policy;
}

void TabularPolicy::validate(double tol) const {
    if (probs.rows() == 0 || probs.cols() == 0) throw ValidationError("policy: empty table");
    for (Eigen::Index s = 0; s < probs.rows(); ++s) {
        double total = 0.0;
        for (Eigen::Index a = 0; a < probs.cols(); ++a) {
            const double p = probs(s, a);
            if (!(p >= 0.0) || !std::isfinite(p))
                throw ValidationError("policy: negative or non-finite entry in state " +
                                      std::to_string(s));
            total += p;
        }
        if (std::abs(total - 1.0) > tol)
            throw ValidationError("policy: row " + std::to_string(s) + " sums to " +
                                  std::to_string(total));
    }
}

std::uint64_t TabularPolicy::fingerprint() const {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    auto mix = [&hash](const void* bytes, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < n; ++i) {
            hash ^= p[i];
            hash *= 0x100000001b3ULL;
        }
    };
    const auto rows = probs.rows(), cols = probs.cols();
    mix(&rows, sizeof(rows));
    mix(&cols, sizeof(cols));
    for (Eigen::Index s = 0; s < rows; ++s)
        for (Eigen::Index a = 0; a < cols; ++a) {
            const double x = probs(s, a);
            mix(&x, sizeof(x));
        }
    return hash;
}

Eigen::VectorXd state_values(const QTable& q, const TabularPolicy& policy) {
    if (q.values.rows() != policy.probs.rows() || q.values.cols() != policy.probs.cols())
        throw ValidationError("state_values: shape mismatch between Q and policy");
    return q.values.cwiseProduct(policy.probs).rowwise().sum();
}

void TabularMDP::validate() const {
    if (n_states <= 0 || n_actions <= 0) throw ValidationError("mdp: dimensions must be positive");
    if (transition.n_states() != n_states || transition.n_actions() != n_actions)
        throw ValidationError("mdp: transition tensor shape mismatch");
    if (mean_reward.rows() != n_states || mean_reward.cols() != n_actions)
        throw ValidationError("mdp: reward table shape mismatch");
    if (initial_dist.size() != n_states) throw ValidationError("mdp: initial_dist size mismatch");
    if (static_cast<int>(terminal_mask.size()) != n_states)
        throw ValidationError("mdp: terminal_mask size mismatch");
    if (!(discount >= 0.0 && discount < 1.0)) throw ValidationError("mdp: discount must lie in [0,1)");
    if (!mean_reward.allFinite()) throw ValidationError("mdp: non-finite reward");

    transition.validate_stochastic(1e-12, "mdp transition");

    double total = 0.0;
    for (int s = 0; s < n_states; ++s) {
        if (initial_dist(s) < 0.0) throw ValidationError("mdp: negative initial probability");
        if (terminal_mask[s] && initial_dist(s) != 0.0)
            throw ValidationError("mdp: initial_dist assigns mass to terminal state " +
                                  std::to_string(s));
        total += initial_dist(s);
    }
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("mdp: initial_dist does not sum to 1");

    for (int s = 0; s < n_states; ++s) {
        if (!terminal_mask[s]) continue;
        for (int a = 0; a < n_actions; ++a) {
            if (transition(s, a, s) != 1.0 || mean_reward(s, a) != 0.0)
                throw ValidationError("mdp: terminal state " + std::to_string(s) +
                                      " must be absorbing with zero reward");
        }
    }
}

namespace {

void check_shapes(const TabularMDP& mdp, const TabularPolicy& policy) {
    if (policy.n_states() != mdp.n_states || policy.n_actions() != mdp.n_actions)
        throw ValidationError("policy shape does not match the MDP");
}

/// State-to-state kernel P^pi(s, s') = sum_a pi(a|s) P(s'|s,a).
Eigen::MatrixXd policy_kernel(const TabularMDP& mdp, const TabularPolicy& policy) {
    Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double w = policy.probs(s, a);
            if (w == 0.0) continue;
            const auto row = mdp.transition.row(s, a);
            for (int next = 0; next < mdp.n_states; ++next) kernel(s, next) += w * row[next];
        }
    return kernel;
}

Eigen::VectorXd policy_reward(const TabularMDP& mdp, const TabularPolicy& policy) {
    return mdp.mean_reward.cwiseProduct(policy.probs).rowwise().sum();
}

QTable q_from_v(const TabularMDP& mdp, const Eigen::VectorXd& v) {
    QTable q{mdp.mean_reward};
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a) {
            const auto row = mdp.transition.row(s, a);
            double expected = 0.0;
            for (int next = 0; next < mdp.n_states; ++next) expected += row[next] * v(next);
            q.values(s, a) += mdp.discount * expected;
        }
    return q;
}

} // namespace

QTable true_bellman_backup(const TabularMDP& mdp, const TabularPolicy& policy, const QTable& q) {
    check_shapes(mdp, policy);
    if (!q.all_finite()) throw NumericalError("true_bellman_backup: non-finite Q");
    return q_from_v(mdp, state_values(q, policy));
}

QTable exact_policy_evaluation(const TabularMDP& mdp, const TabularPolicy& policy, double tol) {
    check_shapes(mdp, policy);
    if (!(tol > 0.0)) throw ValidationError("exact_policy_evaluation: tol must be positive");

    QTable q;
    if (static_cast<long>(mdp.n_states) * mdp.n_actions <= 10'000) {
        const Eigen::MatrixXd system =
            Eigen::MatrixXd::Identity(mdp.n_states, mdp.n_states) -
            mdp.discount * policy_kernel(mdp, policy);
        const Eigen::VectorXd v = system.partialPivLu().solve(policy_reward(mdp, policy));
        if (!v.allFinite()) throw NumericalError("exact_policy_evaluation: singular system");
        q = q_from_v(mdp, v);
    } else {
        q = QTable::zeros(mdp.n_states, mdp.n_actions);
    }

    // Polish (or, above the size threshold, run plain value iteration) until the
    // Bellman residual certifies the tolerance.
    const long max_sweeps = 1'000'000;
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        QTable next = true_bellman_backup(mdp, policy, q);
        if (!next.all_finite()) throw NumericalError("exact_policy_evaluation: non-finite value");
        const double residual = sup_norm(next.values - q.values);
        if (residual <= tol) return q;
        q = std::move(next);
    }
    throw NumericalError("exact_policy_evaluation: residual did not reach tolerance");
}

Occupancy discounted_occupancy(const TabularMDP& mdp, const TabularPolicy& policy) {
    check_shapes(mdp, policy);
    const Eigen::MatrixXd system =
        Eigen::MatrixXd::Identity(mdp.n_states, mdp.n_states) -
        mdp.discount * policy_kernel(mdp, policy).transpose();
    Occupancy occ;
    occ.state = system.partialPivLu().solve((1.0 - mdp.discount) * mdp.initial_dist);
    if (!occ.state.allFinite()) throw NumericalError("discounted_occupancy: singular system");
    occ.state_action = policy.probs.array().colwise() * occ.state.array();
    return occ;
}

double policy_return(const TabularMDP& mdp, const TabularPolicy& policy) {
    const QTable q = exact_policy_evaluation(mdp, policy, 1e-12);
    return mdp.initial_dist.dot(state_values(q, policy));
}

PerformanceDifference performance_difference(const TabularMDP& mdp,
                                             const TabularPolicy& pi_prime,
                                             const TabularPolicy& pi) {
    const double lhs = policy_return(mdp, pi_prime) - policy_return(mdp, pi);

    const QTable q = exact_policy_evaluation(mdp, pi, 1e-12);
    const Eigen::VectorXd v = state_values(q, pi);
    const Eigen::MatrixXd advantage = q.values.colwise() - v;
    const Occupancy occ = discounted_occupancy(mdp, pi_prime);
    const double rhs = occ.state_action.cwiseProduct(advantage).sum() / (1.0 - mdp.discount);
    return {lhs, rhs};
}

} // namespace bcpo
