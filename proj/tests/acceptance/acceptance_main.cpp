// Runs the nine acceptance criteria and prints one PASS/FAIL line for each.
// Exit status is 0 only when every criterion passes.

#include "bcpo/errors.hpp"
#include "bcpo/experiment.hpp"
#include "bcpo/verification.hpp"

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

using namespace bcpo;

namespace {

constexpr std::uint64_t kSuiteSeed = 2024;
constexpr int kGridSeeds = 5;

struct Criterion {
    int number;
    std::string name;
    std::function<CheckResult()> run;
};

CheckResult combine(const std::string& name, const std::vector<CheckResult>& parts) {
    CheckResult out{name, true, ""};
    for (const auto& p : parts) {
        out.passed = out.passed && p.passed;
        if (!out.detail.empty()) out.detail += "; ";
        out.detail += p.name + (p.passed ? " ok" : " FAILED") + " (" + p.detail + ")";
    }
    return out;
}

const CheckResult* find_check(const std::vector<CheckResult>& checks, const std::string& name) {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

} // namespace

int main(int argc, char** argv) {
    std::filesystem::path scratch = std::filesystem::temp_directory_path() / "bcpo_acceptance";
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--scratch" && i + 1 < argc) {
            scratch = argv[++i];
        } else {
            std::fprintf(stderr, "usage: %s [--scratch DIR]\n", argv[0]);
            return 1;
        }
    }

    const ExperimentConfig defaults;

    // the gridworld runs feed criteria 1 and 7, so they are computed once
    std::vector<GridworldSeedReport> grid_reports;
    auto grid = [&]() -> const std::vector<GridworldSeedReport>& {
        if (grid_reports.empty())
            for (int seed = 0; seed < kGridSeeds; ++seed)
                grid_reports.push_back(gridworld_seed_report(defaults, static_cast<std::uint64_t>(seed)));
        return grid_reports;
    };

    const std::vector<Criterion> criteria{
        {1, "gridworld method ordering", [&] { return check_method_ordering(grid()); }},
        {2, "fixed-point pessimism",
         [&] {
             const CalibrationSettings settings;
             const auto checks = calibration_checks(run_calibration(settings), settings);
             std::vector<CheckResult> parts;
             for (const char* name : {"one-step-pessimism-calibration", "fixed-point-pessimism"})
                 if (const CheckResult* c = find_check(checks, name)) parts.push_back(*c);
             if (parts.size() != 2) return CheckResult{"fixed-point pessimism", false, "calibration checks missing"};
             return combine("fixed-point pessimism", parts);
         }},
        {3, "contraction and convergence", [] { return check_contraction(kSuiteSeed + 1, 100); }},
        {4, "performance difference identity", [] { return check_performance_difference(kSuiteSeed + 2, 100); }},
        {5, "mirror-descent optimality", [] { return check_mirror_descent_optimality(kSuiteSeed + 3, 100); }},
        {6, "pinsker and shift bounds",
         [] {
             return combine("pinsker and shift bounds",
                            {check_pinsker_shift(kSuiteSeed + 4, 1000), check_kl_shift(kSuiteSeed + 5, 1000),
                             check_tv_shift(kSuiteSeed + 6, 1000)});
         }},
        {7, "certificate audit", [&] { return check_certificate_audit(grid()); }},
        {8, "coverage-uncertainty monotonicity", [&] { return check_coverage_monotonicity(defaults); }},
        {9, "determinism", [&] { return check_determinism(defaults, scratch); }},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto started = std::chrono::steady_clock::now();
        CheckResult result;
        try {
            result = c.run();
        } catch (const std::exception& e) {
            result = {c.name, false, std::string("threw: ") + e.what()};
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (!result.passed) ++failures;
        std::printf("%s criterion %d %s: %s [%.2fs]\n", result.passed ? "PASS" : "FAIL", c.number,
                    c.name.c_str(), result.detail.c_str(), seconds);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
