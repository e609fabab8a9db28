#pragma once

#include "bcpo/dataset.hpp"
#include "bcpo/mdp.hpp"

#include <functional>
#include <vector>

namespace bcpo {

struct FqiResult {
    QTable q;
    int iterations = 0;
    /// ||Q_{k+1} - Q_k||_inf per iteration; not monotone in general.
    std::vector<double> residual_history;
};

/// Called after iteration k (1-based) with Q_k.
using FqiObserver = std::function<void(int, const QTable&)>;

/**
 * Fitted Q-iteration on the empirical model, no pessimism:
 *
 *     Q_{k+1}(s,a) = r-hat(s,a) + gamma sum_s' P-hat(s'|s,a) max_a' Q_k(s',a'),
 *
 * exactly `iters` times from Q_0 = 0. Terminal states (per the counts) are
 * absorbing with value 0. Throws NumericalError naming the iteration if values
 * become non-finite.
 */
FqiResult naive_fqi(const CountStatistics& counts, const TransitionTensor& empirical, double gamma,
                    int iters, const FqiObserver& observer = {});

/// Deterministic argmax policy; ties go to the lowest action index.
TabularPolicy greedy_policy(const QTable& q);

/// Argmax actions per state (same tie-break as greedy_policy).
std::vector<int> greedy_actions(const Eigen::MatrixXd& table);

} // namespace bcpo
