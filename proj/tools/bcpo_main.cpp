#include "bcpo/csv.hpp"
#include "bcpo/errors.hpp"
#include "bcpo/experiment.hpp"
#include "bcpo/verification.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2, kIo = 3 };

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags, const std::string& seed_help) {
    cmd->add_option("--config", flags.config, "key=value experiment config file");
    cmd->add_option("--seed", flags.seed, seed_help);
    cmd->add_option("--out", flags.out, "output directory");
}

bcpo::ExperimentConfig load_config(const CommonFlags& flags) {
    bcpo::ExperimentConfig config;
    if (!flags.config.empty()) config = bcpo::ExperimentConfig::load(flags.config);
    if (!flags.out.empty()) config.output_dir = flags.out;
    return config;
}

void print_summary(const std::vector<bcpo::SummaryRow>& rows) {
    std::cout << bcpo::summary_to_csv(rows);
}

int cmd_gen_data(const CommonFlags& flags) {
    bcpo::ExperimentConfig config = load_config(flags);
    if (flags.seed) config.dataset_seed = *flags.seed;
    const bcpo::ExperimentData data = bcpo::prepare_experiment(config);
    long unvisited = 0;
    for (auto n : data.counts.n_sa) unvisited += n == 0;
    bcpo::write_outputs(config.output_dir, {{"dataset.csv", data.dataset.to_csv()}});
    std::cerr << "wrote " << data.dataset.size() << " transitions to "
              << (config.output_dir / "dataset.csv").string() << " (" << unvisited
              << " state-action pairs unvisited)\n";
    return kOk;
}

int cmd_train(const CommonFlags& flags, const std::string& method, const std::string& data_path) {
    bcpo::ExperimentConfig config = load_config(flags);
    if (flags.seed) config.dataset_seed = *flags.seed;
    std::optional<bcpo::TransitionDataset> dataset;
    if (!data_path.empty()) {
        const int ns = config.grid.n_states();
        dataset = bcpo::TransitionDataset::load_csv(data_path, ns, bcpo::kGridActions);
    }
    const bcpo::ExperimentData data = bcpo::prepare_experiment(config, std::move(dataset));

    std::map<std::string, std::string> files;
    bcpo::TabularPolicy policy;
    if (method == "bc") {
        policy = bcpo::train_bc(data);
    } else if (method == "fqi") {
        policy = bcpo::greedy_policy(bcpo::train_fqi(config, data).q);
    } else {
        const bcpo::BcpoResult result = bcpo::train_bcpo(config, data);
        policy = bcpo::mode_policy(result.policy);
        files["bcpo_iterations.csv"] = bcpo::iteration_logs_to_csv(result.logs);
    }
    const std::string name = "policy_" + method + ".csv";
    files[name] = bcpo::policy_to_csv(policy);
    bcpo::write_outputs(config.output_dir, files);

    const bcpo::RolloutStats stats = bcpo::evaluate_policy(config, data, policy);
    print_summary({{method, stats.mean_return, stats.std_return, stats.mean_length}});
    std::cerr << "wrote " << (config.output_dir / name).string() << "\n";
    return kOk;
}

int cmd_eval(const CommonFlags& flags, const std::string& policy_path, int episodes) {
    bcpo::ExperimentConfig config = load_config(flags);
    if (flags.seed) config.eval_seed = *flags.seed;
    if (episodes > 0) config.eval_episodes = episodes;
    config.validate();
    const bcpo::TabularMDP mdp = bcpo::build_mdp(config.grid);
    const bcpo::TabularPolicy policy = bcpo::policy_from_csv(
        bcpo::csv::read_file(policy_path), mdp.n_states, mdp.n_actions);
    const bcpo::RolloutStats stats =
        bcpo::rollout_evaluate(mdp, config.grid, policy, config.eval_episodes,
                               config.grid.max_episode_steps, config.eval_seed);
    print_summary({{fs::path(policy_path).stem().string(), stats.mean_return, stats.std_return,
                    stats.mean_length}});
    return kOk;
}

int cmd_run(const CommonFlags& flags) {
    bcpo::ExperimentConfig config = load_config(flags);
    if (flags.seed) config.dataset_seed = *flags.seed;
    const bcpo::ExperimentOutputs out = bcpo::run_experiment(config);
    print_summary(out.summary);
    std::cerr << "wrote " << out.files.size() << " files to " << config.output_dir.string() << " ("
              << out.unvisited_pairs << " state-action pairs unvisited)\n";
    return kOk;
}

int cmd_verify(const CommonFlags& flags) {
    const std::uint64_t seed = flags.seed.value_or(2024);
    bool all = true;
    for (const bcpo::CheckResult& r : bcpo::run_property_suite(seed)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        all = all && r.passed;
    }
    return all ? kOk : kNumerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pessimistic behavior-regularized policy optimization for tabular offline RL"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto* gen = app.add_subcommand("gen-data", "generate the offline gridworld dataset");
    add_common(gen, flags, "dataset seed");

    std::string method, data_path;
    auto* train = app.add_subcommand("train", "train one method and save its policy");
    train->add_option("method", method, "bc | fqi | bcpo")
        ->required()
        ->check(CLI::IsMember({"bc", "fqi", "bcpo"}));
    train->add_option("--data", data_path, "dataset CSV (generated from the config when omitted)");
    add_common(train, flags, "dataset seed");

    std::string policy_path;
    int episodes = 0;
    auto* eval = app.add_subcommand("eval", "roll out a saved policy on the gridworld");
    eval->add_option("--policy", policy_path, "policy CSV with header s,a,prob")->required();
    eval->add_option("--episodes", episodes, "number of episodes (default from config)");
    add_common(eval, flags, "evaluation seed");

    auto* run = app.add_subcommand("run", "full experiment: data, BC, FQI, BCPO, CSV artifacts");
    add_common(run, flags, "dataset seed");

    auto* verify = app.add_subcommand("verify", "run the property suite and print PASS/FAIL per check");
    verify->add_option("--seed", flags.seed, "seed of the random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kValidation;
    }

    try {
        if (*gen) return cmd_gen_data(flags);
        if (*train) return cmd_train(flags, method, data_path);
        if (*eval) return cmd_eval(flags, policy_path, episodes);
        if (*run) return cmd_run(flags);
        if (*verify) return cmd_verify(flags);
    } catch (const bcpo::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const bcpo::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    } catch (const bcpo::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    }
    return kValidation;
}
