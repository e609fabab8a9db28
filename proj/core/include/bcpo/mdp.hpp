#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace bcpo {

/// Default tolerance for probability normalization checks.
inline constexpr double kProbabilityTol = 1e-10;
/// Default tolerance for value identities.
inline constexpr double kValueTol = 1e-8;

/// Dense (state, action, next state) tensor, stored row-major so that each
/// distribution over next states is contiguous.
class TransitionTensor {
public:
    TransitionTensor() = default;
    TransitionTensor(int n_states, int n_actions, double fill = 0.0);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }

    double& operator()(int s, int a, int next) { return data_[offset(s, a) + next]; }
    double operator()(int s, int a, int next) const { return data_[offset(s, a) + next]; }

    std::span<double> row(int s, int a) {
        return {data_.data() + offset(s, a), static_cast<std::size_t>(n_states_)};
    }
    std::span<const double> row(int s, int a) const {
        return {data_.data() + offset(s, a), static_cast<std::size_t>(n_states_)};
    }

    const std::vector<double>& data() const { return data_; }

    /// Throws ValidationError unless every row is nonnegative and sums to 1 within `tol`.
    void validate_stochastic(double tol, const char* what) const;

    friend bool operator==(const TransitionTensor&, const TransitionTensor&) = default;

private:
    std::size_t offset(int s, int a) const {
        return (static_cast<std::size_t>(s) * n_actions_ + a) * n_states_;
    }

    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<double> data_;
};

/// Stationary stochastic policy; rows are states, columns actions.
struct TabularPolicy {
    Eigen::MatrixXd probs;

    int n_states() const { return static_cast<int>(probs.rows()); }
    int n_actions() const { return static_cast<int>(probs.cols()); }

    static TabularPolicy uniform(int n_states, int n_actions);
    static TabularPolicy deterministic(const std::vector<int>& actions, int n_actions);

    /// Throws ValidationError unless rows are distributions within `tol`.
    void validate(double tol = kProbabilityTol) const;

    /// Stable 64-bit fingerprint of the probabilities (identity tag for critics).
    std::uint64_t fingerprint() const;
};

/// State-action values.
struct QTable {
    Eigen::MatrixXd values;

    int n_states() const { return static_cast<int>(values.rows()); }
    int n_actions() const { return static_cast<int>(values.cols()); }

    static QTable zeros(int n_states, int n_actions) {
        return {Eigen::MatrixXd::Zero(n_states, n_actions)};
    }
    bool all_finite() const { return values.allFinite(); }
};

/// V(s) = sum_a pi(a|s) Q(s,a).
Eigen::VectorXd state_values(const QTable& q, const TabularPolicy& policy);

/**
 * Ground-truth finite MDP. Terminal states are absorbing with zero reward:
 * every action maps a terminal state to itself with reward 0.
 */
struct TabularMDP {
    int n_states = 0;
    int n_actions = 0;
    TransitionTensor transition;
    Eigen::MatrixXd mean_reward;
    double discount = 0.9;
    Eigen::VectorXd initial_dist;
    std::vector<bool> terminal_mask;

    /// Throws ValidationError if any invariant is violated.
    void validate() const;
};

/// sup-norm of a table.
inline double sup_norm(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

/// One application of the true Bellman operator for `policy`.
QTable true_bellman_backup(const TabularMDP& mdp, const TabularPolicy& policy, const QTable& q);

/**
 * Q^pi as the fixed point of the true Bellman operator, with
 * ||Q - T Q||_inf <= tol on return. Solves (I - gamma P^pi) V = r^pi directly
 * when |S||A| <= 10,000, otherwise runs value iteration.
 */
QTable exact_policy_evaluation(const TabularMDP& mdp, const TabularPolicy& policy,
                               double tol = kValueTol);

struct Occupancy {
    Eigen::VectorXd state;        ///< d^pi(s)
    Eigen::MatrixXd state_action; ///< d^pi(s,a) = d^pi(s) pi(a|s)
};

/// Normalized discounted visitation d^pi = (1-gamma)(I - gamma P^pi^T)^{-1} rho0.
Occupancy discounted_occupancy(const TabularMDP& mdp, const TabularPolicy& policy);

/// J(pi) = E_{s0~rho0, a~pi}[Q^pi(s0, a)].
double policy_return(const TabularMDP& mdp, const TabularPolicy& policy);

struct PerformanceDifference {
    double lhs; ///< J(pi') - J(pi)
    double rhs; ///< E_{d^{pi'}}[A^pi] / (1 - gamma)
};

/// Both sides of the performance difference identity, computed independently.
PerformanceDifference performance_difference(const TabularMDP& mdp,
                                             const TabularPolicy& pi_prime,
                                             const TabularPolicy& pi);

} // namespace bcpo
