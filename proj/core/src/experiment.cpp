#include "bcpo/experiment.hpp"

#include "bcpo/csv.hpp"
#include "bcpo/errors.hpp"

#include <cmath>
#include <system_error>

namespace bcpo {

BcpoConfig gridworld_bcpo_defaults() {
    BcpoConfig c;
    c.alpha = 0.1;
    c.trust_region_delta = 0.5;
    c.transition_penalty_scale = 0.01;
    return c;
}

void ExperimentConfig::validate() const {
    grid.validate();
    if (!(behavior_epsilon >= 0.0 && behavior_epsilon <= 1.0))
        throw ValidationError("data.behavior_epsilon must lie in [0,1]");
    if (n_transitions < 1) throw ValidationError("data.n_transitions must be >= 1");
    if (!(reward_range >= 0.0) || !std::isfinite(reward_range))
        throw ValidationError("bcpo.reward_range must be finite and >= 0");
    if (fqi_iters < 1) throw ValidationError("fqi.iters must be >= 1");
    if (fqi_checkpoint_every < 1) throw ValidationError("fqi.checkpoint_every must be >= 1");
    if (eval_episodes < 1) throw ValidationError("eval.episodes must be >= 1");
    if (output_dir.empty()) throw ValidationError("output.dir must not be empty");
    effective_bcpo().validate();
}

double ExperimentConfig::effective_reward_range() const {
    if (reward_range > 0.0) return reward_range;
    const double range = grid.max_reward() - grid.min_reward();
    return range > 0.0 ? range : 1.0;
}

BcpoConfig ExperimentConfig::effective_bcpo() const {
    BcpoConfig c = bcpo;
    c.gamma = grid.gamma;
    return c;
}

namespace {

void get_seed(FlatConfig& flat, const std::string& key, std::uint64_t& out) {
    long long value = static_cast<long long>(out);
    flat.get(key, value);
    if (value < 0) throw ValidationError(key + " must be nonnegative");
    out = static_cast<std::uint64_t>(value);
}

void get_cell(FlatConfig& flat, const std::string& prefix, Cell& cell) {
    flat.get(prefix + "_row", cell.row);
    flat.get(prefix + "_col", cell.col);
}

} // namespace

ExperimentConfig ExperimentConfig::from_flat(FlatConfig& flat) {
    ExperimentConfig c;

    GridSpec& g = c.grid;
    flat.get("grid.width", g.width);
    flat.get("grid.height", g.height);
    get_cell(flat, "grid.goal", g.goal);
    get_cell(flat, "grid.trap", g.trap);
    get_cell(flat, "grid.start", g.start);
    flat.get("grid.slip_prob", g.slip_prob);
    std::string slip = g.slip_model == SlipModel::Perpendicular ? "perpendicular" : "uniform";
    flat.get("grid.slip_model", slip);
    if (slip == "perpendicular") g.slip_model = SlipModel::Perpendicular;
    else if (slip == "uniform") g.slip_model = SlipModel::UniformAction;
    else throw ValidationError("grid.slip_model must be 'perpendicular' or 'uniform', got '" + slip + "'");
    flat.get("grid.step_penalty", g.step_penalty);
    flat.get("grid.goal_reward", g.goal_reward);
    flat.get("grid.trap_reward", g.trap_reward);
    flat.get("grid.penalty_on_terminal", g.penalty_on_terminal);
    flat.get("grid.gamma", g.gamma);
    flat.get("grid.max_episode_steps", g.max_episode_steps);

    flat.get("data.behavior_epsilon", c.behavior_epsilon);
    flat.get("data.n_transitions", c.n_transitions);
    get_seed(flat, "data.seed", c.dataset_seed);

    BcpoConfig& b = c.bcpo;
    flat.get("bcpo.alpha", b.alpha);
    flat.get("bcpo.trust_region_delta", b.trust_region_delta);
    flat.get("bcpo.confidence_delta", b.confidence_delta);
    flat.get("bcpo.n_outer_iters", b.n_outer_iters);
    flat.get("bcpo.critic_tol", b.critic_tol);
    long long critic_max_iters = b.critic_max_iters;
    flat.get("bcpo.critic_max_iters", critic_max_iters);
    b.critic_max_iters = static_cast<long>(critic_max_iters);
    flat.get("bcpo.eta_lo", b.eta_bisection.lo);
    flat.get("bcpo.eta_hi", b.eta_bisection.hi);
    flat.get("bcpo.eta_tol", b.eta_bisection.tol);
    std::string q_max = b.q_max_mode == QMaxMode::RewardRangeBound ? "reward_range" : "observed";
    flat.get("bcpo.q_max_mode", q_max);
    if (q_max == "reward_range") b.q_max_mode = QMaxMode::RewardRangeBound;
    else if (q_max == "observed") b.q_max_mode = QMaxMode::ObservedMax;
    else throw ValidationError("bcpo.q_max_mode must be 'reward_range' or 'observed', got '" + q_max + "'");
    get_seed(flat, "bcpo.seed", b.seed);
    flat.get("bcpo.transition_penalty_scale", b.transition_penalty_scale);
    flat.get("bcpo.prior_concentration", b.prior_concentration);
    flat.get("bcpo.early_stop_kl", b.early_stop_kl);
    flat.get("bcpo.policy_floor", b.policy_floor);
    flat.get("bcpo.reward_range", c.reward_range);

    flat.get("fqi.iters", c.fqi_iters);
    flat.get("fqi.checkpoint_every", c.fqi_checkpoint_every);
    flat.get("eval.episodes", c.eval_episodes);
    get_seed(flat, "eval.seed", c.eval_seed);
    std::string out = c.output_dir.string();
    flat.get("output.dir", out);
    c.output_dir = out;

    flat.check_all_consumed();
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    FlatConfig flat = FlatConfig::load(path);
    return from_flat(flat);
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
    csv::Writer w("method,return_mean,return_std,episode_length_mean");
    for (const auto& r : rows) {
        w.field(r.method).field(r.return_mean).field(r.return_std).field(r.episode_length_mean);
        w.end_row();
    }
    return w.str();
}

std::string policy_to_csv(const TabularPolicy& policy) {
    csv::Writer w("s,a,prob");
    for (int s = 0; s < policy.n_states(); ++s)
        for (int a = 0; a < policy.n_actions(); ++a) {
            w.field(s).field(a).field(policy.probs(s, a));
            w.end_row();
        }
    return w.str();
}

TabularPolicy policy_from_csv(std::string_view text, int n_states, int n_actions) {
    const auto rows = csv::lines(text);
    if (rows.empty() || rows.front() != "s,a,prob")
        throw ValidationError("policy file: expected header 's,a,prob'");
    const std::size_t expected = static_cast<std::size_t>(n_states) * n_actions;
    if (rows.size() - 1 != expected)
        throw ValidationError("policy file: expected " + std::to_string(expected) + " rows, found " +
                              std::to_string(rows.size() - 1));
    TabularPolicy policy{Eigen::MatrixXd::Constant(n_states, n_actions, -1.0)};
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto fields = csv::split(rows[i]);
        if (fields.size() != 3)
            throw ValidationError("policy file: line " + std::to_string(i + 1) + " needs 3 fields");
        const long long s = csv::parse_int(fields[0], "s");
        const long long a = csv::parse_int(fields[1], "a");
        if (s < 0 || s >= n_states || a < 0 || a >= n_actions)
            throw ValidationError("policy file: pair out of range on line " + std::to_string(i + 1));
        if (policy.probs(s, a) != -1.0)
            throw ValidationError("policy file: duplicate pair on line " + std::to_string(i + 1));
        policy.probs(s, a) = csv::parse_double(fields[2], "prob");
    }
    policy.validate(1e-9);
    return policy;
}

std::string policy_map_to_csv(const GridSpec& spec, const std::vector<int>& actions) {
    if (static_cast<int>(actions.size()) != spec.n_states())
        throw ValidationError("policy map: one action per cell required");
    csv::Writer w("row,col,action");
    for (int s = 0; s < spec.n_states(); ++s) {
        const Cell c = spec.cell_of(s);
        w.field(c.row).field(c.col).field(actions[s]);
        w.end_row();
    }
    return w.str();
}

std::vector<int> policy_map_from_csv(const GridSpec& spec, std::string_view text) {
    const auto rows = csv::lines(text);
    if (rows.empty() || rows.front() != "row,col,action")
        throw ValidationError("policy map: expected header 'row,col,action'");
    std::vector<int> actions(static_cast<std::size_t>(spec.n_states()), -1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto fields = csv::split(rows[i]);
        if (fields.size() != 3)
            throw ValidationError("policy map: line " + std::to_string(i + 1) + " needs 3 fields");
        const Cell c{static_cast<int>(csv::parse_int(fields[0], "row")),
                     static_cast<int>(csv::parse_int(fields[1], "col"))};
        const long long a = csv::parse_int(fields[2], "action");
        if (c.row < 0 || c.row >= spec.height || c.col < 0 || c.col >= spec.width || a < 0 ||
            a >= kGridActions)
            throw ValidationError("policy map: value out of range on line " + std::to_string(i + 1));
        actions[spec.state_of(c)] = static_cast<int>(a);
    }
    for (int a : actions)
        if (a < 0) throw ValidationError("policy map: some cells have no action");
    return actions;
}

std::string value_map_to_csv(const GridSpec& spec, const Eigen::VectorXd& values) {
    if (values.size() != spec.n_states()) throw ValidationError("value map: one value per cell required");
    csv::Writer w("row,col,value");
    for (int s = 0; s < spec.n_states(); ++s) {
        const Cell c = spec.cell_of(s);
        w.field(c.row).field(c.col).field(values(s));
        w.end_row();
    }
    return w.str();
}

std::string coverage_to_csv(const CountStatistics& counts, const PosteriorModel& model) {
    csv::Writer w("s,a,n,b_p,b_r");
    for (int s = 0; s < counts.n_states; ++s)
        for (int a = 0; a < counts.n_actions; ++a) {
            w.field(s).field(a).field(static_cast<long long>(counts.count(s, a)));
            w.field(model.b_p(s, a)).field(model.b_r(s, a));
            w.end_row();
        }
    return w.str();
}

ExperimentData prepare_experiment(const ExperimentConfig& config,
                                  std::optional<TransitionDataset> dataset) {
    config.validate();
    TabularMDP mdp = build_mdp(config.grid);
    TabularPolicy behavior = make_behavior_policy(mdp, config.grid, config.behavior_epsilon);
    if (!dataset)
        dataset = generate_dataset(mdp, config.grid, behavior, config.n_transitions,
                                   config.grid.max_episode_steps, config.dataset_seed);
    if (dataset->n_states() != mdp.n_states || dataset->n_actions() != mdp.n_actions)
        throw ValidationError("dataset shape does not match the grid");
    CountStatistics counts = count_statistics(*dataset);
    const BcpoConfig bcpo = config.effective_bcpo();
    PosteriorModel model = fit_posterior(
        counts, DirichletPrior::symmetric(mdp.n_states, mdp.n_actions, bcpo.prior_concentration),
        bcpo.confidence_delta, config.effective_reward_range());
    return ExperimentData{std::move(mdp), std::move(behavior), std::move(*dataset),
                          std::move(counts), std::move(model)};
}

TabularPolicy train_bc(const ExperimentData& data) { return behavior_cloning(data.counts); }

FqiResult train_fqi(const ExperimentConfig& config, const ExperimentData& data,
                    const FqiObserver& observer) {
    return naive_fqi(data.counts, data.model.empirical, config.grid.gamma, config.fqi_iters, observer);
}

BcpoResult train_bcpo(const ExperimentConfig& config, const ExperimentData& data,
                      const BcpoObserver& observer) {
    return bcpo_optimize(data.counts, data.model, data.mdp.initial_dist, config.effective_bcpo(),
                         &data.mdp, observer);
}

TabularPolicy mode_policy(const TabularPolicy& policy) {
    return TabularPolicy::deterministic(greedy_actions(policy.probs), policy.n_actions());
}

RolloutStats evaluate_policy(const ExperimentConfig& config, const ExperimentData& data,
                             const TabularPolicy& policy) {
    return rollout_evaluate(data.mdp, config.grid, policy, config.eval_episodes,
                            config.grid.max_episode_steps, config.eval_seed);
}

namespace {

[[noreturn]] void rethrow_in_stage(const std::string& stage) {
    const std::string prefix = "stage '" + stage + "': ";
    try {
        throw;
    } catch (const NonConvergenceError& e) {
        throw NonConvergenceError(prefix + e.what(), e.residual(), e.iterations());
    } catch (const NumericalError& e) {
        throw NumericalError(prefix + e.what());
    } catch (const IoError& e) {
        throw IoError(prefix + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(prefix + e.what());
    } catch (const Error& e) {
        throw Error(prefix + e.what());
    }
}

template <class F>
auto in_stage(const std::string& stage, F&& f) {
    try {
        return f();
    } catch (const Error&) {
        rethrow_in_stage(stage);
    }
}

SummaryRow summary_row(std::string method, const RolloutStats& stats) {
    return {std::move(method), stats.mean_return, stats.std_return, stats.mean_length};
}

} // namespace

ExperimentOutputs compute_experiment(const ExperimentConfig& config) {
    in_stage("config", [&] { config.validate(); });
    const ExperimentData data = in_stage("generate-data", [&] { return prepare_experiment(config); });

    csv::Writer curve("method,step,return_mean,return_std");
    auto add_curve_point = [&](const char* method, int step, const TabularPolicy& policy) {
        const RolloutStats stats = evaluate_policy(config, data, policy);
        curve.field(method).field(step).field(stats.mean_return).field(stats.std_return);
        curve.end_row();
    };

    const TabularPolicy bc = in_stage("train-bc", [&] { return train_bc(data); });

    const FqiResult fqi = in_stage("train-fqi", [&] {
        return train_fqi(config, data, [&](int k, const QTable& q) {
            if (k % config.fqi_checkpoint_every == 0) add_curve_point("fqi", k, greedy_policy(q));
        });
    });
    const std::vector<int> fqi_actions = greedy_actions(fqi.q.values);

    ExperimentOutputs out;
    const BcpoResult bcpo = in_stage("train-bcpo", [&] {
        return train_bcpo(config, data,
                          [&](const IterationLog& log, const TabularPolicy& policy,
                              const PessimisticCritic&) {
                              out.bcpo_iterates.push_back(policy);
                              add_curve_point("bcpo", log.iteration, mode_policy(policy));
                          });
    });
    out.bcpo_logs = bcpo.logs;
    const std::vector<int> bcpo_actions = greedy_actions(bcpo.policy.probs);

    in_stage("evaluate", [&] {
        out.summary.push_back(summary_row(
            "bcpo", evaluate_policy(config, data, TabularPolicy::deterministic(bcpo_actions, kGridActions))));
        out.summary.push_back(summary_row("bc", evaluate_policy(config, data, bc)));
        out.summary.push_back(summary_row(
            "fqi", evaluate_policy(config, data, TabularPolicy::deterministic(fqi_actions, kGridActions))));
    });

    Eigen::VectorXd fqi_values(data.mdp.n_states);
    for (int s = 0; s < data.mdp.n_states; ++s) fqi_values(s) = fqi.q.values.row(s).maxCoeff();

    for (std::int64_t n : data.counts.n_sa)
        if (n == 0) ++out.unvisited_pairs;

    out.files["summary.csv"] = summary_to_csv(out.summary);
    out.files["learning_curve.csv"] = curve.str();
    out.files["coverage_uncertainty.csv"] = coverage_to_csv(data.counts, data.model);
    out.files["value_map_bcpo.csv"] = value_map_to_csv(config.grid, bcpo.critic.v_lcb);
    out.files["value_map_fqi.csv"] = value_map_to_csv(config.grid, fqi_values);
    out.files["policy_map_bcpo.csv"] = policy_map_to_csv(config.grid, bcpo_actions);
    out.files["policy_map_fqi.csv"] = policy_map_to_csv(config.grid, fqi_actions);
    out.files["bcpo_iterations.csv"] = iteration_logs_to_csv(bcpo.logs);
    out.files["dataset.csv"] = data.dataset.to_csv();
    return out;
}

void write_outputs(const std::filesystem::path& dir,
                   const std::map<std::string, std::string>& files) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    for (const auto& [name, content] : files) csv::write_file(dir / (name + ".partial"), content);
    for (const auto& [name, content] : files) {
        fs::rename(dir / (name + ".partial"), dir / name, ec);
        if (ec) throw IoError("cannot rename " + (dir / name).string() + ".partial: " + ec.message());
    }
}

ExperimentOutputs run_experiment(const ExperimentConfig& config) {
    ExperimentOutputs out = compute_experiment(config);
    in_stage("write-outputs", [&] { write_outputs(config.output_dir, out.files); });
    return out;
}

} // namespace bcpo
