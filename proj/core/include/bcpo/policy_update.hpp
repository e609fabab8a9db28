#pragma once

#include "bcpo/critic.hpp"
#include "bcpo/dataset.hpp"
#include "bcpo/mdp.hpp"
#include "bcpo/posterior.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bcpo {

struct EtaBisection {
    double lo = 0.0;
    double hi = 1e4;
    double tol = 1e-6;
};

/// How Q_max in the shift certificate is obtained.
enum class QMaxMode {
    RewardRangeBound, ///< (reward_range + max b_r) / (1 - gamma)
    ObservedMax,      ///< max |Q_LCB| of the critic used for the update
};

struct BcpoConfig {
    double alpha = 0.5;              ///< weight of the behavior KL
    double trust_region_delta = 0.5; ///< bound on E_nu KL(pi_new || pi_old)
    double confidence_delta = 0.1;   ///< confidence level of the bonus radii
    double gamma = 0.97;
    int n_outer_iters = 30;
    double critic_tol = 1e-8;
    long critic_max_iters = 20'000;
    EtaBisection eta_bisection;
    QMaxMode q_max_mode = QMaxMode::RewardRangeBound;
    std::uint64_t seed = 0;
    /// Multiplier of the b_P term in the critic (1 = unscaled operator).
    double transition_penalty_scale = 1.0;
    /// Total Dirichlet prior mass per pair, spread evenly over next states.
    double prior_concentration = 1.0;
    /// Stop early once E_nu KL(pi_{k+1} || pi_k) falls below this.
    double early_stop_kl = 1e-8;
    /// Weight of the uniform mixture applied to every KL reference policy.
    double policy_floor = 1e-12;

    void validate() const;
};

/// KL(p || q) with 0 log 0 = 0; std::nullopt when p is not absolutely continuous w.r.t. q.
std::optional<double> kl_divergence(std::span<const double> p, std::span<const double> q);

/// sum_s weights(s) KL(p(.|s) || q(.|s)) over states with positive weight.
/// Throws NumericalError if any weighted row has infinite divergence.
double expected_kl(const TabularPolicy& p, const TabularPolicy& q, const Eigen::VectorXd& weights);

/// (1 - floor) * pi + floor * uniform.
TabularPolicy floor_policy(const TabularPolicy& policy, double floor);

/// Per-state Lagrangian  sum_a pi(a) q(a) - alpha KL(pi || b) - eta KL(pi || old).
double mirror_descent_objective(std::span<const double> pi, std::span<const double> q,
                                std::span<const double> behavior, std::span<const double> old,
                                double alpha, double eta);

/**
 * Closed-form maximizer of the per-state Lagrangian:
 *
 *     pi_new(a|s) ∝ b(a|s)^(alpha/(alpha+eta)) old(a|s)^(eta/(alpha+eta))
 *                   exp(Q(s,a) / (alpha+eta)),
 *
 * evaluated in the log domain with max-subtraction.
 */
TabularPolicy mirror_descent_step(const QTable& q_lcb, const TabularPolicy& behavior,
                                  const TabularPolicy& old, double alpha, double eta);

struct TrustRegionResult {
    TabularPolicy policy;
    double eta = 0.0;
    double expected_kl = 0.0; ///< E_nu KL(policy || old)
    /// (eta, E_nu KL) pairs evaluated during the search, in evaluation order.
    std::vector<std::pair<double, double>> trace;
};

/**
 * Smallest eta in [lo, hi] (to bisection tolerance) whose mirror step keeps
 * E_nu KL(pi_new || old) <= delta_tr. `hi` is expanded tenfold at a time when
 * infeasible; InfeasibleTrustRegionError once it passes 1e15.
 */
TrustRegionResult enforce_trust_region(const QTable& q_lcb, const TabularPolicy& behavior,
                                       const TabularPolicy& old, const Eigen::VectorXd& nu_hat,
                                       double alpha, double delta_tr,
                                       const EtaBisection& bisect = {});

/// (2 q_max / (1 - gamma)) (sqrt(kl_behavior / 2) + sqrt(delta_tr / 2)).
double shift_certificate(double kl_behavior, double delta_tr, double q_max, double gamma);

struct IterationLog {
    int iteration = 0;
    double eta = 0.0;
    double surrogate_gain = 0.0; ///< E_nu[ E_{pi_k} Q_{k-1} - E_{pi_{k-1}} Q_{k-1} ]
    double kl_to_behavior = 0.0; ///< E_nu KL(pi_k || behavior)
    double kl_to_previous = 0.0; ///< E_nu KL(pi_k || pi_{k-1})
    double j_lcb = 0.0;          ///< pessimistic return of pi_k
    double j_true = std::numeric_limits<double>::quiet_NaN(); ///< oracle J(pi_k), NaN without oracle
    double shift_bound = 0.0;    ///< certificate for the step pi_{k-1} -> pi_k
    double q_max = 0.0;
};

/// CSV with header `iter,eta,surrogate_gain,kl_behavior,kl_prev,j_lcb,j_true,shift_bound`.
std::string iteration_logs_to_csv(const std::vector<IterationLog>& logs);

/// Called after every outer iteration (including iteration 0, the cloned behavior policy).
using BcpoObserver =
    std::function<void(const IterationLog&, const TabularPolicy&, const PessimisticCritic&)>;

struct BcpoResult {
    TabularPolicy policy;
    PessimisticCritic critic; ///< critic of the returned policy
    TabularPolicy behavior;   ///< floored behavior-cloned reference
    std::vector<IterationLog> logs;
};

/**
 * Outer loop starting from the behavior-cloned policy. Iteration k solves the
 * pessimistic critic of pi_{k-1}, takes the trust-region mirror step, and logs
 * the diagnostics of pi_k. Row 0 describes pi_0.
 *
 * `oracle`, when given, supplies J(pi_k) for the logs. Critic failures
 * propagate after the observer has seen every completed iteration.
 */
BcpoResult bcpo_optimize(const CountStatistics& counts, const PosteriorModel& model,
                         const Eigen::VectorXd& initial_dist, const BcpoConfig& config,
                         const TabularMDP* oracle = nullptr, const BcpoObserver& observer = {});

} // namespace bcpo
