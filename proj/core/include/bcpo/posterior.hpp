#pragma once

#include "bcpo/dataset.hpp"
#include "bcpo/mdp.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace bcpo {

/// Independent Dirichlet prior over each next-state distribution P(.|s,a).
struct DirichletPrior {
    TransitionTensor alpha0;
    Eigen::MatrixXd alpha0_sum; ///< sum over next states, must be > 0 everywhere

    /// alpha0(s,a,s') = concentration / |S| for every entry (so alpha0_sum = concentration).
    static DirichletPrior symmetric(int n_states, int n_actions, double concentration = 1.0);

    /// Builds the prior from an explicit tensor and checks it is proper.
    static DirichletPrior from_tensor(TransitionTensor alpha0);

    void validate() const;
};

/**
 * Confidence radius on the mean reward of a pair visited `n` times:
 *
 *     reward_range * sqrt( log(2|S||A|/delta) / (2 max(1, n)) )
 *
 * With reward_range = 1 this is the Hoeffding radius for rewards in [0,1];
 * a wider range scales it linearly.
 */
double reward_bonus(std::int64_t n, int n_states, int n_actions, double delta,
                    double reward_range = 1.0);

/// min(1, sqrt( 2 log(2|S||A|/delta) / (alpha0_sum + n) )).
double transition_bonus(std::int64_t n, double alpha0_sum, int n_states, int n_actions,
                        double delta);

/// Fitted posterior: estimators and bonus radii. Immutable after fit_posterior.
struct PosteriorModel {
    TransitionTensor posterior_mean; ///< (alpha0 + n) / (alpha0_sum + n_sa)
    TransitionTensor empirical;      ///< n / n_sa, uniform rows where n_sa = 0
    Eigen::MatrixXd b_r;
    Eigen::MatrixXd b_p;
    double confidence = 0.1;
    double reward_range = 1.0;

    int n_states() const { return posterior_mean.n_states(); }
    int n_actions() const { return posterior_mean.n_actions(); }
};

/**
 * Dirichlet posterior plus bonus radii for confidence level `delta`.
 * Throws ValidationError for delta outside (0,1), an improper prior, a shape
 * mismatch, or a non-positive reward range.
 */
PosteriorModel fit_posterior(const CountStatistics& counts, const DirichletPrior& prior,
                             double delta, double reward_range = 1.0);

/// One draw P(.|s,a) ~ Dir(alpha0 + n) for every pair, independent across pairs.
TransitionTensor sample_transition_model(const DirichletPrior& prior,
                                         const CountStatistics& counts, std::uint64_t seed);

} // namespace bcpo
