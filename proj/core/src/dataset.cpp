#include "bcpo/dataset.hpp"

#include "bcpo/csv.hpp"
#include "bcpo/errors.hpp"

#include <cmath>

namespace bcpo {

namespace {

void check_record(const Transition& t, int n_states, int n_actions, std::size_t index) {
    auto fail = [&](const char* what) {
        throw ValidationError("dataset record " + std::to_string(index) + ": " + what);
    };
    if (t.state < 0 || t.state >= n_states) fail("state out of range");
    if (t.action < 0 || t.action >= n_actions) fail("action out of range");
    if (t.next_state < 0 || t.next_state >= n_states) fail("next_state out of range");
    if (!std::isfinite(t.reward)) fail("non-finite reward");
}

} // namespace

TransitionDataset::TransitionDataset(int n_states, int n_actions, std::vector<Transition> records)
    : n_states_(n_states), n_actions_(n_actions), records_(std::move(records)) {
    if (n_states <= 0 || n_actions <= 0)
        throw ValidationError("dataset: dimensions must be positive");
    for (std::size_t i = 0; i < records_.size(); ++i)
        check_record(records_[i], n_states_, n_actions_, i);
}

std::string TransitionDataset::to_csv() const {
    csv::Writer out("s,a,r,s_next,terminal");
    for (const auto& t : records_) {
        out.field(t.state).field(t.action).field(t.reward).field(t.next_state)
            .field(t.terminal ? 1 : 0);
        out.end_row();
    }
    return out.str();
}

TransitionDataset TransitionDataset::from_csv(std::string_view text, int n_states, int n_actions) {
    const auto rows = csv::lines(text);
    if (rows.empty() || rows.front() != "s,a,r,s_next,terminal")
        throw ValidationError("dataset csv: expected header 's,a,r,s_next,terminal'");
    std::vector<Transition> records;
    records.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].empty()) continue;
        const auto f = csv::split(rows[i]);
        if (f.size() != 5)
            throw ValidationError("dataset csv line " + std::to_string(i + 1) +
                                  ": expected 5 fields");
        Transition t;
        t.state = static_cast<int>(csv::parse_int(f[0], "s"));
        t.action = static_cast<int>(csv::parse_int(f[1], "a"));
        t.reward = csv::parse_double(f[2], "r");
        t.next_state = static_cast<int>(csv::parse_int(f[3], "s_next"));
        const auto term = csv::parse_int(f[4], "terminal");
        if (term != 0 && term != 1)
            throw ValidationError("dataset csv line " + std::to_string(i + 1) +
                                  ": terminal must be 0 or 1");
        t.terminal = term == 1;
        records.push_back(t);
    }
    return TransitionDataset(n_states, n_actions, std::move(records));
}

TransitionDataset TransitionDataset::load_csv(const std::filesystem::path& path, int n_states,
                                              int n_actions) {
    return from_csv(csv::read_file(path), n_states, n_actions);
}

std::int64_t CountStatistics::state_count(int s) const {
    std::int64_t total_s = 0;
    for (int a = 0; a < n_actions; ++a) total_s += count(s, a);
    return total_s;
}

CountStatistics count_statistics(const TransitionDataset& dataset) {
    const int ns = dataset.n_states(), na = dataset.n_actions();
    CountStatistics c;
    c.n_states = ns;
    c.n_actions = na;
    c.n_sa.assign(static_cast<std::size_t>(ns) * na, 0);
    c.n_sas.assign(static_cast<std::size_t>(ns) * na * ns, 0);
    c.reward_sum = Eigen::MatrixXd::Zero(ns, na);
    c.reward_mean = Eigen::MatrixXd::Zero(ns, na);
    c.terminal_mask.assign(static_cast<std::size_t>(ns), false);

    std::size_t index = 0;
    for (const auto& t : dataset.records()) {
        check_record(t, ns, na, index++);
        const std::size_t sa = static_cast<std::size_t>(t.state) * na + t.action;
        ++c.n_sa[sa];
        ++c.n_sas[sa * ns + t.next_state];
        c.reward_sum(t.state, t.action) += t.reward;
        if (t.terminal) c.terminal_mask[t.next_state] = true;
    }
    c.total = static_cast<std::int64_t>(dataset.size());
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) {
            const auto n = c.count(s, a);
            if (n > 0) c.reward_mean(s, a) = c.reward_sum(s, a) / static_cast<double>(n);
        }
    return c;
}

TabularPolicy behavior_cloning(const CountStatistics& counts) {
    TabularPolicy policy{Eigen::MatrixXd::Zero(counts.n_states, counts.n_actions)};
    for (int s = 0; s < counts.n_states; ++s) {
        const auto visits = counts.state_count(s);
        for (int a = 0; a < counts.n_actions; ++a) {
            policy.probs(s, a) = visits > 0 ? static_cast<double>(counts.count(s, a)) /
                                                  static_cast<double>(visits)
                                            : 1.0 / counts.n_actions;
        }
    }
    return policy;
}

Eigen::VectorXd state_marginal(const CountStatistics& counts) {
    if (counts.total <= 0) throw EmptyDatasetError("state_marginal: dataset is empty");
    Eigen::VectorXd nu(counts.n_states);
    for (int s = 0; s < counts.n_states; ++s)
        nu(s) = static_cast<double>(counts.state_count(s)) / static_cast<double>(counts.total);
    return nu;
}

} // namespace bcpo
