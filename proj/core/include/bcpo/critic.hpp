#pragma once

#include "bcpo/dataset.hpp"
#include "bcpo/mdp.hpp"
#include "bcpo/posterior.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace bcpo {

/**
 * Pessimistic Bellman operator for a fitted posterior:
 *
 *     (T Q)(s,a) = (r-hat(s,a) - b_r(s,a))
 *                + gamma * sum_s' P-bar(s'|s,a) V(s')
 *                - gamma * scale * b_P(s,a) * ||V||_inf,
 *
 * with V(s) = sum_a pi(a|s) Q(s,a). States in the counts' terminal mask are
 * absorbing with zero value: their V is pinned to 0 and their row of T Q is 0.
 *
 * `transition_penalty_scale` multiplies the b_P term; 1 gives the operator
 * above exactly, smaller values weaken the transition penalty so that the
 * operator contracts when gamma * (1 + max b_P) >= 1.
 *
 * The operator keeps references to the model and counts; both must outlive it.
 */
class PessimisticOperator {
public:
    PessimisticOperator(const PosteriorModel& model, const CountStatistics& counts, double gamma,
                        double transition_penalty_scale = 1.0);

    QTable apply(const QTable& q, const TabularPolicy& policy) const;

    /// V with terminal states pinned to 0.
    Eigen::VectorXd values(const QTable& q, const TabularPolicy& policy) const;

    /// gamma * (1 + scale * max b_P) over non-terminal pairs.
    double lipschitz_bound() const;

    double gamma() const { return gamma_; }
    double transition_penalty_scale() const { return scale_; }
    const PosteriorModel& model() const { return model_; }
    const CountStatistics& counts() const { return counts_; }

private:
    const PosteriorModel& model_;
    const CountStatistics& counts_;
    double gamma_;
    double scale_;
};

/// Free-function form of one pessimistic backup.
QTable pessimistic_backup(const QTable& q, const TabularPolicy& policy,
                          const PosteriorModel& model, const CountStatistics& counts,
                          double gamma, double transition_penalty_scale = 1.0);

struct CriticOptions {
    double tol = 1e-8;
    long max_iters = 20'000;
    /// Give up after this many consecutive non-decreasing residuals when the
    /// contraction bound is not below 1.
    long stall_limit = 50;
    bool keep_residuals = false;
};

struct PessimisticCritic {
    QTable q_lcb;
    Eigen::VectorXd v_lcb;
    std::uint64_t policy_fingerprint = 0;
    long iterations_used = 0;
    double final_residual = 0.0;
    std::vector<double> residuals; ///< ||Q_{k+1} - Q_k||, only when keep_residuals
};

/**
 * Picard iteration Q_{k+1} = T Q_k from `start` (zeros by default) until
 * ||Q_k - T Q_k||_inf <= tol; returns that Q_k.
 *
 * Throws NonConvergenceError when max_iters is exhausted or, if the operator's
 * Lipschitz bound is >= 1, when residuals stop decreasing for stall_limit
 * consecutive iterations. Throws NumericalError on non-finite iterates.
 */
PessimisticCritic solve_pessimistic_fixed_point(const PessimisticOperator& op,
                                                const TabularPolicy& policy,
                                                const CriticOptions& options = {},
                                                const std::optional<QTable>& start = std::nullopt);

/// J_LCB = sum_s rho0(s) sum_a pi(a|s) Q_LCB(s,a). The critic must belong to `policy`.
double pessimistic_return(const PessimisticCritic& critic, const TabularPolicy& policy,
                          const Eigen::VectorXd& initial_dist);

/// A_LCB(s,a) = Q_LCB(s,a) - V_LCB(s). The critic must belong to `policy`.
Eigen::MatrixXd pessimistic_advantage(const PessimisticCritic& critic,
                                      const TabularPolicy& policy);

} // namespace bcpo
