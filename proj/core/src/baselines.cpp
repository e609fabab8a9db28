#include "bcpo/baselines.hpp"

#include "bcpo/errors.hpp"

#include <string>

namespace bcpo {

FqiResult naive_fqi(const CountStatistics& counts, const TransitionTensor& empirical, double gamma,
                    int iters, const FqiObserver& observer) {
    const int ns = counts.n_states, na = counts.n_actions;
    if (empirical.n_states() != ns || empirical.n_actions() != na)
        throw ValidationError("naive_fqi: empirical model shape mismatch");
    if (iters < 1) throw ValidationError("naive_fqi: iters must be >= 1");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("naive_fqi: gamma must lie in [0,1)");
    empirical.validate_stochastic(1e-10, "naive_fqi empirical model");

    FqiResult result;
    result.q = QTable::zeros(ns, na);
    result.residual_history.reserve(static_cast<std::size_t>(iters));
    Eigen::VectorXd v(ns);
    for (int k = 1; k <= iters; ++k) {
        for (int s = 0; s < ns; ++s)
            v(s) = counts.terminal_mask[s] ? 0.0 : result.q.values.row(s).maxCoeff();

        QTable next = QTable::zeros(ns, na);
        for (int s = 0; s < ns; ++s) {
            if (counts.terminal_mask[s]) continue;
            for (int a = 0; a < na; ++a) {
                const auto row = empirical.row(s, a);
                double expected = 0.0;
                for (int n = 0; n < ns; ++n) expected += row[n] * v(n);
                next.values(s, a) = counts.reward_mean(s, a) + gamma * expected;
            }
        }
        if (!next.all_finite())
            throw NumericalError("naive_fqi: non-finite values at iteration " + std::to_string(k));
        result.residual_history.push_back(sup_norm(next.values - result.q.values));
        result.q = std::move(next);
        result.iterations = k;
        if (observer) observer(k, result.q);
    }
    return result;
}

std::vector<int> greedy_actions(const Eigen::MatrixXd& table) {
    std::vector<int> actions(static_cast<std::size_t>(table.rows()), 0);
    for (Eigen::Index s = 0; s < table.rows(); ++s) {
        int best = 0;
        for (Eigen::Index a = 1; a < table.cols(); ++a)
            if (table(s, a) > table(s, best)) best = static_cast<int>(a);
        actions[static_cast<std::size_t>(s)] = best;
    }
    return actions;
}

TabularPolicy greedy_policy(const QTable& q) {
    if (!q.all_finite()) throw NumericalError("greedy_policy: non-finite Q");
    return TabularPolicy::deterministic(greedy_actions(q.values), q.n_actions());
}

} // namespace bcpo
