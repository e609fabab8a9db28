#pragma once

#include "bcpo/baselines.hpp"
#include "bcpo/config.hpp"
#include "bcpo/dataset.hpp"
#include "bcpo/gridworld.hpp"
#include "bcpo/policy_update.hpp"
#include "bcpo/posterior.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bcpo {

/// BCPO settings used by the gridworld experiment unless the config overrides them.
BcpoConfig gridworld_bcpo_defaults();

struct ExperimentConfig {
    GridSpec grid;
    double behavior_epsilon = 0.5;
    long long n_transitions = 15'000;
    std::uint64_t dataset_seed = 0;
    BcpoConfig bcpo = gridworld_bcpo_defaults();
    /// 0 means "derive from the grid rewards".
    double reward_range = 0.0;
    int fqi_iters = 500;
    int fqi_checkpoint_every = 10;
    int eval_episodes = 1000;
    std::uint64_t eval_seed = 12345;
    std::filesystem::path output_dir = "out";

    void validate() const;

    /// Reward range fed to the bonus radii and Q_max.
    double effective_reward_range() const;

    /// BcpoConfig with gamma taken from the grid.
    BcpoConfig effective_bcpo() const;

    /**
     * Reads every known key (see configs/default.cfg for the full list) and
     * rejects unknown ones.
     */
    static ExperimentConfig from_flat(FlatConfig& flat);
    static ExperimentConfig load(const std::filesystem::path& path);
};

struct SummaryRow {
    std::string method; ///< "bcpo", "bc" or "fqi"
    double return_mean = 0.0;
    double return_std = 0.0;
    double episode_length_mean = 0.0;
};

std::string summary_to_csv(const std::vector<SummaryRow>& rows);

/// Policy file format: header `s,a,prob`, one row per pair in index order.
std::string policy_to_csv(const TabularPolicy& policy);
TabularPolicy policy_from_csv(std::string_view text, int n_states, int n_actions);

/// Grid maps with header `row,col,action` / `row,col,value`, row-major.
std::string policy_map_to_csv(const GridSpec& spec, const std::vector<int>& actions);
std::vector<int> policy_map_from_csv(const GridSpec& spec, std::string_view text);
std::string value_map_to_csv(const GridSpec& spec, const Eigen::VectorXd& values);

/// Header `s,a,n,b_p,b_r`, one row per pair in index order.
std::string coverage_to_csv(const CountStatistics& counts, const PosteriorModel& model);

/// Ground truth, data and posterior shared by every method.
struct ExperimentData {
    TabularMDP mdp;
    TabularPolicy behavior;
    TransitionDataset dataset;
    CountStatistics counts;
    PosteriorModel model;
};

/// Builds the grid, synthesizes the behavior policy and samples the dataset
/// (or uses `dataset` when given), then fits counts and posterior.
ExperimentData prepare_experiment(const ExperimentConfig& config,
                                  std::optional<TransitionDataset> dataset = std::nullopt);

TabularPolicy train_bc(const ExperimentData& data);
FqiResult train_fqi(const ExperimentConfig& config, const ExperimentData& data,
                    const FqiObserver& observer = {});
BcpoResult train_bcpo(const ExperimentConfig& config, const ExperimentData& data,
                      const BcpoObserver& observer = {});

/// Deterministic policy that plays the most likely action of `policy`.
TabularPolicy mode_policy(const TabularPolicy& policy);

RolloutStats evaluate_policy(const ExperimentConfig& config, const ExperimentData& data,
                             const TabularPolicy& policy);

struct ExperimentOutputs {
    std::vector<SummaryRow> summary;
    /// File name -> content, for the nine emitted CSVs.
    std::map<std::string, std::string> files;
    long unvisited_pairs = 0;
    /// pi_0, pi_1, ... as produced by the BCPO outer loop, with their logs.
    std::vector<TabularPolicy> bcpo_iterates;
    std::vector<IterationLog> bcpo_logs;
};

/// Every artifact of a full run, in memory. Failures are rethrown with the stage name prefixed.
ExperimentOutputs compute_experiment(const ExperimentConfig& config);

/**
 * Writes `files` into `dir` as `<name>.partial` and renames them all once every
 * write has succeeded, so an interrupted run leaves only `.partial` files.
 */
void write_outputs(const std::filesystem::path& dir,
                   const std::map<std::string, std::string>& files);

/// compute_experiment + write_outputs into config.output_dir.
ExperimentOutputs run_experiment(const ExperimentConfig& config);

} // namespace bcpo
