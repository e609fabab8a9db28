#include "bcpo/critic.hpp"

#include "bcpo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bcpo {

PessimisticOperator::PessimisticOperator(const PosteriorModel& model,
                                         const CountStatistics& counts, double gamma,
                                         double transition_penalty_scale)
    : model_(model), counts_(counts), gamma_(gamma), scale_(transition_penalty_scale) {
    if (model.n_states() != counts.n_states || model.n_actions() != counts.n_actions)
        throw ValidationError("pessimistic operator: model and counts shapes differ");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0,1)");
    if (!(transition_penalty_scale >= 0.0) || !std::isfinite(transition_penalty_scale))
        throw ValidationError("transition penalty scale must be finite and nonnegative");
}

Eigen::VectorXd PessimisticOperator::values(const QTable& q, const TabularPolicy& policy) const {
    Eigen::VectorXd v = state_values(q, policy);
    for (int s = 0; s < counts_.n_states; ++s)
        if (counts_.terminal_mask[s]) v(s) = 0.0;
    return v;
}

QTable PessimisticOperator::apply(const QTable& q, const TabularPolicy& policy) const {
    const int ns = counts_.n_states, na = counts_.n_actions;
    if (q.n_states() != ns || q.n_actions() != na || policy.n_states() != ns ||
        policy.n_actions() != na)
        throw ValidationError("pessimistic backup: shape mismatch");
    if (!q.all_finite()) throw NumericalError("pessimistic backup: non-finite Q");

    const Eigen::VectorXd v = values(q, policy);
    const double v_norm = v.cwiseAbs().maxCoeff();

    QTable out = QTable::zeros(ns, na);
    for (int s = 0; s < ns; ++s) {
        if (counts_.terminal_mask[s]) continue;
        for (int a = 0; a < na; ++a) {
            const auto row = model_.posterior_mean.row(s, a);
            double expected = 0.0;
            for (int next = 0; next < ns; ++next) expected += row[next] * v(next);
            out.values(s, a) = (counts_.reward_mean(s, a) - model_.b_r(s, a)) +
                               gamma_ * expected - gamma_ * scale_ * model_.b_p(s, a) * v_norm;
        }
    }
    return out;
}

double PessimisticOperator::lipschitz_bound() const {
    double max_bp = 0.0;
    for (int s = 0; s < counts_.n_states; ++s) {
        if (counts_.terminal_mask[s]) continue;
        for (int a = 0; a < counts_.n_actions; ++a) max_bp = std::max(max_bp, model_.b_p(s, a));
    }
    return gamma_ * (1.0 + scale_ * max_bp);
}

QTable pessimistic_backup(const QTable& q, const TabularPolicy& policy,
                          const PosteriorModel& model, const CountStatistics& counts,
                          double gamma, double transition_penalty_scale) {
    return PessimisticOperator(model, counts, gamma, transition_penalty_scale).apply(q, policy);
}

PessimisticCritic solve_pessimistic_fixed_point(const PessimisticOperator& op,
                                                const TabularPolicy& policy,
                                                const CriticOptions& options,
                                                const std::optional<QTable>& start) {
    if (!(options.tol > 0.0)) throw ValidationError("critic tolerance must be positive");
    if (options.max_iters < 1) throw ValidationError("critic max_iters must be positive");

    const int ns = op.counts().n_states, na = op.counts().n_actions;
    QTable q = start ? *start : QTable::zeros(ns, na);
    const bool contracting = op.lipschitz_bound() < 1.0;

    PessimisticCritic critic;
    double previous = std::numeric_limits<double>::infinity();
    long stalled = 0;
    for (long k = 0; k < options.max_iters; ++k) {
        QTable next = op.apply(q, policy);
        if (!next.all_finite())
            throw NumericalError("pessimistic fixed point: non-finite iterate at iteration " +
                                 std::to_string(k + 1));
        const double residual = sup_norm(next.values - q.values);
        if (options.keep_residuals) critic.residuals.push_back(residual);
        if (residual <= options.tol) {
            critic.v_lcb = state_values(q, policy);
            critic.q_lcb = std::move(q);
            critic.policy_fingerprint = policy.fingerprint();
            critic.iterations_used = k;
            critic.final_residual = residual;
            return critic;
        }
        if (!contracting) {
            stalled = residual >= previous ? stalled + 1 : 0;
            if (stalled >= options.stall_limit)
                throw NonConvergenceError(
                    "pessimistic fixed point: residual failed to decrease for " +
                        std::to_string(options.stall_limit) + " iterations (residual " +
                        std::to_string(residual) + ")",
                    residual, k + 1);
        }
        previous = residual;
        q = std::move(next);
    }
    throw NonConvergenceError("pessimistic fixed point: no convergence after " +
                                  std::to_string(options.max_iters) + " iterations (residual " +
                                  std::to_string(previous) + ")",
                              previous, options.max_iters);
}

namespace {

void check_critic(const PessimisticCritic& critic, const TabularPolicy& policy) {
    if (critic.policy_fingerprint != policy.fingerprint())
        throw ValidationError("critic was solved for a different policy");
}

} // namespace

double pessimistic_return(const PessimisticCritic& critic, const TabularPolicy& policy,
                          const Eigen::VectorXd& initial_dist) {
    check_critic(critic, policy);
    if (initial_dist.size() != critic.v_lcb.size())
        throw ValidationError("pessimistic_return: initial distribution size mismatch");
    return initial_dist.dot(critic.v_lcb);
}

Eigen::MatrixXd pessimistic_advantage(const PessimisticCritic& critic,
                                      const TabularPolicy& policy) {
    check_critic(critic, policy);
    return critic.q_lcb.values.colwise() - critic.v_lcb;
}

} // namespace bcpo
