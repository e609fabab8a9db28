#pragma once

#include "bcpo/critic.hpp"
#include "bcpo/dataset.hpp"
#include "bcpo/experiment.hpp"
#include "bcpo/mdp.hpp"
#include "bcpo/random.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bcpo {

/// Outcome of one property check.
struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Random MDP with Dirichlet(1) transition rows, rewards uniform in [0,1], no terminal states.
TabularMDP random_mdp(Rng& rng, int n_states, int n_actions, double gamma);

/// Policy with Dirichlet(1) rows.
TabularPolicy random_policy(Rng& rng, int n_states, int n_actions);

/**
 * Independent draws: s uniform, a ~ behavior(.|s), s' ~ P(.|s,a), r ~ Bernoulli(r(s,a)).
 * Rewards of `mdp` must lie in [0,1].
 */
TransitionDataset sample_iid_dataset(const TabularMDP& mdp, const TabularPolicy& behavior,
                                     int n_transitions, Rng& rng);

/// Whether the pessimistic backup of the true Q^pi stays below Q^pi at every pair (within slack).
bool one_step_pessimism_holds(const PessimisticOperator& op, const QTable& q_true,
                              const TabularPolicy& policy, double slack = 1e-10);

struct CalibrationSettings {
    std::uint64_t seed = 2024;
    int n_states = 4;
    int n_actions = 2;
    double gamma = 0.5;
    int n_datasets = 500;
    int n_transitions = 200;
    double delta = 0.1;
    double slack = 1e-8;
};

/// Counts gathered over the resampled datasets of the calibration study.
struct CalibrationReport {
    int datasets = 0;
    int event_failures = 0;           ///< datasets where one-step pessimism fails somewhere
    int fixed_point_violations = 0;   ///< event held but Q_LCB > Q^pi + slack somewhere
    int descent_violations = 0;       ///< event held but Picard from Q^pi rose somewhere
    int return_bound_violations = 0;  ///< event held but J_LCB > J + slack
    int improvement_violations = 0;   ///< event held but the pessimistic improvement bound failed
    double event_failure_rate() const {
        return datasets > 0 ? static_cast<double>(event_failures) / datasets : 0.0;
    }
};

CalibrationReport run_calibration(const CalibrationSettings& settings = {});

/// Calibration report turned into pass/fail lines.
std::vector<CheckResult> calibration_checks(const CalibrationReport& report,
                                            const CalibrationSettings& settings);

/// Lipschitz bound of the pessimistic backup and geometric Picard convergence on random instances.
CheckResult check_contraction(std::uint64_t seed, int instances = 100);

/// Performance difference identity on random MDPs with at most 8 states.
CheckResult check_performance_difference(std::uint64_t seed, int instances = 100);

/// Occupancy form and value form of J agree on random MDPs.
CheckResult check_dual_return(std::uint64_t seed, int instances = 100);

/// Closed-form mirror step versus random simplex points and a dense grid search.
CheckResult check_mirror_descent_optimality(std::uint64_t seed, int states = 100);

/// |E_p g - E_q g| <= 2M sqrt(KL(p||q)/2) on random draws.
CheckResult check_pinsker_shift(std::uint64_t seed, int draws = 1000);

/// State-averaged KL shift bound with sqrt of the expected KL.
CheckResult check_kl_shift(std::uint64_t seed, int draws = 1000);

/// |E_p f - E_q f| <= 2M TV(p,q) on random draws.
CheckResult check_tv_shift(std::uint64_t seed, int draws = 1000);

/// Every property check that runs on synthetic instances, in a fixed order.
std::vector<CheckResult> run_property_suite(std::uint64_t seed);

/// One gridworld run evaluated for the method-ordering and certificate checks.
struct GridworldSeedReport {
    std::uint64_t dataset_seed = 0;
    double bcpo_return = 0.0;
    double bc_return = 0.0;
    double fqi_return = 0.0;
    bool event_holds = false;      ///< one-step pessimism at every BCPO iterate
    int audited_steps = 0;
    int certificate_violations = 0;
};

/**
 * Runs the full experiment with `dataset_seed` and checks, at every BCPO
 * iterate, one-step pessimism against the true MDP and the shift certificate
 * J_LCB(pi_k) >= J_LCB(pi_{k-1}) - shift_k.
 */
GridworldSeedReport gridworld_seed_report(ExperimentConfig config, std::uint64_t dataset_seed);

/// Ordering of mean returns over several dataset seeds.
CheckResult check_method_ordering(const std::vector<GridworldSeedReport>& reports);

/// Shift certificate on every run whose one-step pessimism event holds.
CheckResult check_certificate_audit(const std::vector<GridworldSeedReport>& reports);

/// b_P sorted by visit count is nonincreasing on the generated dataset.
CheckResult check_coverage_monotonicity(const ExperimentConfig& config);

/// Two runs into fresh directories produce byte-identical files.
CheckResult check_determinism(ExperimentConfig config, const std::filesystem::path& scratch);

} // namespace bcpo
