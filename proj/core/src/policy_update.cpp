#include "bcpo/policy_update.hpp"

#include "bcpo/csv.hpp"
#include "bcpo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bcpo {

void BcpoConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ValidationError(std::string("bcpo config: ") + what);
    };
    require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
    require(trust_region_delta > 0.0, "trust_region_delta must be positive");
    require(confidence_delta > 0.0 && confidence_delta < 1.0, "confidence_delta must lie in (0,1)");
    require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0,1)");
    require(n_outer_iters >= 0, "n_outer_iters must be nonnegative");
    require(critic_tol > 0.0, "critic_tol must be positive");
    require(critic_max_iters >= 1, "critic_max_iters must be positive");
    require(eta_bisection.lo >= 0.0, "eta lower bracket must be nonnegative");
    require(eta_bisection.hi > eta_bisection.lo, "eta bracket must be nonempty");
    require(eta_bisection.tol > 0.0, "eta tolerance must be positive");
    require(transition_penalty_scale >= 0.0, "transition_penalty_scale must be nonnegative");
    require(prior_concentration > 0.0, "prior_concentration must be positive");
    require(early_stop_kl >= 0.0, "early_stop_kl must be nonnegative");
    require(policy_floor >= 0.0 && policy_floor < 1.0, "policy_floor must lie in [0,1)");
}

std::optional<double> kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw ValidationError("kl_divergence: size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return std::nullopt;
        total += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(0.0, total);
}

namespace {

std::span<const double> row_of(const Eigen::MatrixXd& m, Eigen::Index s, std::vector<double>& buf) {
    buf.resize(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index a = 0; a < m.cols(); ++a) buf[static_cast<std::size_t>(a)] = m(s, a);
    return buf;
}

} // namespace

double expected_kl(const TabularPolicy& p, const TabularPolicy& q, const Eigen::VectorXd& weights) {
    if (p.n_states() != q.n_states() || p.n_actions() != q.n_actions() ||
        weights.size() != p.n_states())
        throw ValidationError("expected_kl: shape mismatch");
    std::vector<double> pb, qb;
    double total = 0.0;
    for (int s = 0; s < p.n_states(); ++s) {
        if (weights(s) <= 0.0) continue;
        const auto kl = kl_divergence(row_of(p.probs, s, pb), row_of(q.probs, s, qb));
        if (!kl) throw NumericalError("expected_kl: infinite divergence in state " + std::to_string(s));
        total += weights(s) * *kl;
    }
    return total;
}

TabularPolicy floor_policy(const TabularPolicy& policy, double floor) {
    return {(1.0 - floor) * policy.probs.array() + floor / policy.n_actions()};
}

double mirror_descent_objective(std::span<const double> pi, std::span<const double> q,
                                std::span<const double> behavior, std::span<const double> old,
                                double alpha, double eta) {
    double linear = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) linear += pi[a] * q[a];
    const auto kl_b = kl_divergence(pi, behavior);
    const auto kl_old = kl_divergence(pi, old);
    const double inf = std::numeric_limits<double>::infinity();
    double value = linear;
    if (alpha > 0.0) value -= alpha * kl_b.value_or(inf);
    if (eta > 0.0) value -= eta * kl_old.value_or(inf);
    return value;
}

TabularPolicy mirror_descent_step(const QTable& q_lcb, const TabularPolicy& behavior,
                                  const TabularPolicy& old, double alpha, double eta) {
    if (alpha < 0.0 || eta < 0.0) throw ValidationError("mirror step: alpha and eta must be >= 0");
    if (!(alpha + eta > 0.0)) throw ValidationError("mirror step: alpha + eta must be positive");
    const int ns = q_lcb.n_states(), na = q_lcb.n_actions();
    if (behavior.n_states() != ns || behavior.n_actions() != na || old.n_states() != ns ||
        old.n_actions() != na)
        throw ValidationError("mirror step: shape mismatch");
    if (!q_lcb.all_finite()) throw NumericalError("mirror step: non-finite Q");

    const double w_b = alpha / (alpha + eta);
    const double w_old = eta / (alpha + eta);
    const double inv_temp = 1.0 / (alpha + eta);

    TabularPolicy out{Eigen::MatrixXd(ns, na)};
    std::vector<double> logits(static_cast<std::size_t>(na));
    for (int s = 0; s < ns; ++s) {
        double max_logit = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < na; ++a) {
            double logit = q_lcb.values(s, a) * inv_temp;
            if (w_b > 0.0) {
                if (!(behavior.probs(s, a) > 0.0))
                    throw ValidationError("mirror step: behavior policy has a zero entry in state " +
                                          std::to_string(s));
                logit += w_b * std::log(behavior.probs(s, a));
            }
            if (w_old > 0.0) {
                if (!(old.probs(s, a) > 0.0))
                    throw ValidationError("mirror step: previous policy has a zero entry in state " +
                                          std::to_string(s));
                logit += w_old * std::log(old.probs(s, a));
            }
            logits[a] = logit;
            max_logit = std::max(max_logit, logit);
        }
        double total = 0.0;
        for (int a = 0; a < na; ++a) {
            logits[a] = std::exp(logits[a] - max_logit);
            total += logits[a];
        }
        for (int a = 0; a < na; ++a) out.probs(s, a) = logits[a] / total;
    }
    return out;
}

TrustRegionResult enforce_trust_region(const QTable& q_lcb, const TabularPolicy& behavior,
                                       const TabularPolicy& old, const Eigen::VectorXd& nu_hat,
                                       double alpha, double delta_tr, const EtaBisection& bisect) {
    if (!(delta_tr >= 0.0)) throw ValidationError("trust region radius must be nonnegative");
    if (bisect.lo < 0.0 || !(bisect.hi > bisect.lo) || !(bisect.tol > 0.0))
        throw ValidationError("invalid eta bisection bracket");

    TrustRegionResult result;
    auto evaluate = [&](double eta) {
        TabularPolicy candidate = mirror_descent_step(q_lcb, behavior, old, alpha, eta);
        const double kl = expected_kl(candidate, old, nu_hat);
        result.trace.emplace_back(eta, kl);
        return std::pair{std::move(candidate), kl};
    };

    auto [at_lo, kl_lo] = evaluate(bisect.lo);
    if (kl_lo <= delta_tr) {
        result.policy = std::move(at_lo);
        result.eta = bisect.lo;
        result.expected_kl = kl_lo;
        return result;
    }

    constexpr double kEtaCap = 1e15;
    double lo = bisect.lo, hi = bisect.hi;
    auto [at_hi, kl_hi] = evaluate(hi);
    while (kl_hi > delta_tr) {
        lo = hi;
        hi *= 10.0;
        if (hi > kEtaCap)
            throw InfeasibleTrustRegionError("trust region infeasible: E KL stays above " +
                                             std::to_string(delta_tr) + " up to eta = 1e15");
        std::tie(at_hi, kl_hi) = evaluate(hi);
    }

    while (hi - lo > bisect.tol) {
        const double mid = 0.5 * (lo + hi);
        auto [at_mid, kl_mid] = evaluate(mid);
        if (kl_mid <= delta_tr) {
            hi = mid;
            at_hi = std::move(at_mid);
            kl_hi = kl_mid;
        } else {
            lo = mid;
        }
    }
    result.policy = std::move(at_hi);
    result.eta = hi;
    result.expected_kl = kl_hi;
    return result;
}

double shift_certificate(double kl_behavior, double delta_tr, double q_max, double gamma) {
    if (kl_behavior < 0.0 || delta_tr < 0.0 || q_max < 0.0)
        throw ValidationError("shift_certificate: inputs must be nonnegative");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("shift_certificate: gamma must lie in (0,1)");
    return 2.0 * q_max / (1.0 - gamma) * (std::sqrt(kl_behavior / 2.0) + std::sqrt(delta_tr / 2.0));
}

std::string iteration_logs_to_csv(const std::vector<IterationLog>& logs) {
    csv::Writer out("iter,eta,surrogate_gain,kl_behavior,kl_prev,j_lcb,j_true,shift_bound");
    for (const auto& log : logs) {
        out.field(log.iteration).field(log.eta).field(log.surrogate_gain)
            .field(log.kl_to_behavior).field(log.kl_to_previous).field(log.j_lcb)
            .field(log.j_true).field(log.shift_bound);
        out.end_row();
    }
    return out.str();
}

namespace {

double nu_weighted_value(const TabularPolicy& policy, const QTable& q, const Eigen::VectorXd& nu) {
    return nu.dot(state_values(q, policy));
}

double compute_q_max(const BcpoConfig& config, const PosteriorModel& model,
                     const PessimisticCritic& critic) {
    if (config.q_max_mode == QMaxMode::ObservedMax) return sup_norm(critic.q_lcb.values);
    return (model.reward_range + model.b_r.maxCoeff()) / (1.0 - config.gamma);
}

} // namespace

BcpoResult bcpo_optimize(const CountStatistics& counts, const PosteriorModel& model,
                         const Eigen::VectorXd& initial_dist, const BcpoConfig& config,
                         const TabularMDP* oracle, const BcpoObserver& observer) {
    config.validate();
    if (initial_dist.size() != counts.n_states)
        throw ValidationError("bcpo: initial distribution size mismatch");
    if (oracle && (oracle->n_states != counts.n_states || oracle->n_actions != counts.n_actions))
        throw ValidationError("bcpo: oracle MDP shape mismatch");

    const Eigen::VectorXd nu = state_marginal(counts);
    const PessimisticOperator op(model, counts, config.gamma, config.transition_penalty_scale);
    const CriticOptions critic_options{config.critic_tol, config.critic_max_iters};

    BcpoResult result;
    result.behavior = floor_policy(behavior_cloning(counts), config.policy_floor);

    TabularPolicy policy = result.behavior;
    PessimisticCritic critic = solve_pessimistic_fixed_point(op, policy, critic_options);

    auto oracle_return = [&](const TabularPolicy& p) {
        return oracle ? policy_return(*oracle, p) : std::numeric_limits<double>::quiet_NaN();
    };

    IterationLog first;
    first.iteration = 0;
    first.kl_to_behavior = expected_kl(policy, result.behavior, nu);
    first.j_lcb = pessimistic_return(critic, policy, initial_dist);
    first.j_true = oracle_return(policy);
    first.q_max = compute_q_max(config, model, critic);
    result.logs.push_back(first);
    if (observer) observer(first, policy, critic);

    for (int k = 1; k <= config.n_outer_iters; ++k) {
        const TrustRegionResult step =
            enforce_trust_region(critic.q_lcb, result.behavior, policy, nu, config.alpha,
                                 config.trust_region_delta, config.eta_bisection);
        TabularPolicy next = floor_policy(step.policy, config.policy_floor);

        IterationLog log;
        log.iteration = k;
        log.eta = step.eta;
        log.surrogate_gain = nu_weighted_value(next, critic.q_lcb, nu) -
                             nu_weighted_value(policy, critic.q_lcb, nu);
        log.kl_to_behavior = expected_kl(next, result.behavior, nu);
        log.kl_to_previous = expected_kl(next, policy, nu);

        // The mirror step maximizes the per-state Lagrangian and pi_{k-1} is
        // feasible for it, so the regularized objective cannot decrease.
        const double objective_change =
            log.surrogate_gain - config.alpha * (log.kl_to_behavior - result.logs.back().kl_to_behavior);
        if (objective_change < -1e-9)
            throw NumericalError("bcpo: regularized objective decreased by " +
                                 std::to_string(-objective_change) + " at iteration " +
                                 std::to_string(k));

        log.q_max = compute_q_max(config, model, critic);
        log.shift_bound = shift_certificate(log.kl_to_behavior, config.trust_region_delta,
                                            log.q_max, config.gamma);

        PessimisticCritic next_critic = solve_pessimistic_fixed_point(op, next, critic_options);
        log.j_lcb = pessimistic_return(next_critic, next, initial_dist);
        log.j_true = oracle_return(next);

        policy = std::move(next);
        critic = std::move(next_critic);
        result.logs.push_back(log);
        if (observer) observer(log, policy, critic);

        if (log.kl_to_previous < config.early_stop_kl) break;
    }

    result.policy = std::move(policy);
    result.critic = std::move(critic);
    return result;
}

} // namespace bcpo
