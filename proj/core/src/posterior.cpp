#include "bcpo/posterior.hpp"

#include "bcpo/errors.hpp"
#include "bcpo/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bcpo {

DirichletPrior DirichletPrior::symmetric(int n_states, int n_actions, double concentration) {
    if (!(concentration > 0.0) || !std::isfinite(concentration))
        throw ValidationError("prior concentration must be positive");
    return from_tensor(TransitionTensor(n_states, n_actions, concentration / n_states));
}

DirichletPrior DirichletPrior::from_tensor(TransitionTensor alpha0) {
    DirichletPrior prior;
    prior.alpha0_sum = Eigen::MatrixXd::Zero(alpha0.n_states(), alpha0.n_actions());
    for (int s = 0; s < alpha0.n_states(); ++s)
        for (int a = 0; a < alpha0.n_actions(); ++a)
            for (double x : alpha0.row(s, a)) prior.alpha0_sum(s, a) += x;
    prior.alpha0 = std::move(alpha0);
    prior.validate();
    return prior;
}

void DirichletPrior::validate() const {
    for (double x : alpha0.data())
        if (!(x >= 0.0) || !std::isfinite(x))
            throw ValidationError("dirichlet prior: entries must be finite and nonnegative");
    for (int s = 0; s < alpha0.n_states(); ++s)
        for (int a = 0; a < alpha0.n_actions(); ++a)
            if (!(alpha0_sum(s, a) > 0.0))
                throw ValidationError("dirichlet prior is improper at (" + std::to_string(s) +
                                      "," + std::to_string(a) + ")");
}

namespace {

double log_term(int n_states, int n_actions, double delta) {
    return std::log(2.0 * n_states * n_actions / delta);
}

void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("confidence delta must lie in (0,1)");
}

} // namespace

double reward_bonus(std::int64_t n, int n_states, int n_actions, double delta,
                    double reward_range) {
    check_delta(delta);
    const double visits = static_cast<double>(std::max<std::int64_t>(1, n));
    return reward_range * std::sqrt(log_term(n_states, n_actions, delta) / (2.0 * visits));
}

double transition_bonus(std::int64_t n, double alpha0_sum, int n_states, int n_actions,
                        double delta) {
    check_delta(delta);
    const double radius = std::sqrt(2.0 * log_term(n_states, n_actions, delta) /
                                    (alpha0_sum + static_cast<double>(n)));
    return std::min(1.0, radius);
}

PosteriorModel fit_posterior(const CountStatistics& counts, const DirichletPrior& prior,
                             double delta, double reward_range) {
    check_delta(delta);
    if (!(reward_range > 0.0) || !std::isfinite(reward_range))
        throw ValidationError("reward range must be positive");
    const int ns = counts.n_states, na = counts.n_actions;
    if (prior.alpha0.n_states() != ns || prior.alpha0.n_actions() != na)
        throw ValidationError("fit_posterior: prior shape does not match counts");
    prior.validate();

    PosteriorModel model;
    model.confidence = delta;
    model.reward_range = reward_range;
    model.posterior_mean = TransitionTensor(ns, na);
    model.empirical = TransitionTensor(ns, na);
    model.b_r = Eigen::MatrixXd::Zero(ns, na);
    model.b_p = Eigen::MatrixXd::Zero(ns, na);

    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            const auto n = counts.count(s, a);
            const double denom = prior.alpha0_sum(s, a) + static_cast<double>(n);
            for (int next = 0; next < ns; ++next) {
                const auto n_next = counts.count(s, a, next);
                model.posterior_mean(s, a, next) =
                    (prior.alpha0(s, a, next) + static_cast<double>(n_next)) / denom;
                model.empirical(s, a, next) =
                    n > 0 ? static_cast<double>(n_next) / static_cast<double>(n) : 1.0 / ns;
            }
            model.b_r(s, a) = reward_bonus(n, ns, na, delta, reward_range);
            model.b_p(s, a) = transition_bonus(n, prior.alpha0_sum(s, a), ns, na, delta);
        }
    }
    return model;
}

TransitionTensor sample_transition_model(const DirichletPrior& prior,
                                         const CountStatistics& counts, std::uint64_t seed) {
    const int ns = counts.n_states, na = counts.n_actions;
    if (prior.alpha0.n_states() != ns || prior.alpha0.n_actions() != na)
        throw ValidationError("sample_transition_model: prior shape does not match counts");
    Rng rng(seed);
    TransitionTensor sample(ns, na);
    std::vector<double> concentration(static_cast<std::size_t>(ns));
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) {
            for (int next = 0; next < ns; ++next)
                concentration[next] =
                    prior.alpha0(s, a, next) + static_cast<double>(counts.count(s, a, next));
            rng.dirichlet(concentration, sample.row(s, a));
        }
    return sample;
}

} // namespace bcpo
