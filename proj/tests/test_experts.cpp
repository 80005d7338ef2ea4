#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "helpers.hpp"

using namespace mentorcore;

namespace {

constexpr double kEOverEMinus1 = 2.718281828459045 / (2.718281828459045 - 1.0);

// All 2^k binary labelings of k fixed grid states, as an explicit class.
PolicyClass labelings_class(const std::vector<double>& grid) {
    const int k = static_cast<int>(grid.size());
    std::vector<Policy> members;
    for (int code = 0; code < (1 << k); ++code) {
        std::vector<int> labels(grid.size());
        for (int i = 0; i < k; ++i) labels[static_cast<std::size_t>(i)] = (code >> i) & 1;
        auto grid_copy = grid;
        members.push_back(Policy{[grid_copy, labels](const State& s) {
                                     for (std::size_t i = 0; i < grid_copy.size(); ++i) {
                                         if (s[0] == grid_copy[i]) return labels[i];
                                     }
                                     return 0;
                                 },
                                 "labeling"});
    }
    return PolicyClass::explicit_finite(std::move(members), 2, 1);
}

// Worst-case halving mistakes over all realizable sequences: recursion over
// (consistent labelers, depth), adversary picks state and label.
int worst_case_mistakes(const std::vector<double>& grid,
                        const std::vector<std::vector<int>>& truth_tables,
                        std::vector<int> alive, int depth,
                        std::map<std::pair<std::vector<int>, int>, int>& memo) {
    if (depth == 0) return 0;
    const auto key = std::make_pair(alive, depth);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    int worst = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        // Halving's plurality prediction on this state.
        int votes[2] = {0, 0};
        for (int i : alive) ++votes[truth_tables[static_cast<std::size_t>(i)][g]];
        const int prediction = votes[1] > votes[0] ? 1 : 0;
        for (int label = 0; label < 2; ++label) {
            std::vector<int> next;
            for (int i : alive) {
                if (truth_tables[static_cast<std::size_t>(i)][g] == label) next.push_back(i);
            }
            if (next.empty()) continue;  // label not realizable
            const int mistake = prediction != label ? 1 : 0;
            worst = std::max(worst, mistake + worst_case_mistakes(grid, truth_tables,
                                                                  std::move(next), depth - 1,
                                                                  memo));
        }
    }
    memo[key] = worst;
    return worst;
}

}  // namespace

TEST_CASE("halving: singleton class never errs") {
    PolicyClass cls = PolicyClass::explicit_finite({threshold_policy(0.5)}, 2, 1);
    auto learner = halving_learner(cls);
    testutil::UniformAdversary adv(1, threshold_policy(0.5));
    RunTrace trace = run_protocol(*learner, adv, 50, 3, 2);
    CHECK(trace.total_loss() == 0.0);
}

TEST_CASE("halving: |class|=4 thresholds on grid states, mistakes <= 2") {
    PolicyClass cls = PolicyClass::explicit_finite(
        {threshold_policy(0.1), threshold_policy(0.35), threshold_policy(0.6),
         threshold_policy(0.85)},
        2, 1);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto learner = halving_learner(cls);
        testutil::UniformAdversary adv(1, threshold_policy(0.6));
        RunTrace trace = run_protocol(*learner, adv, 50, seed, 2);
        CHECK(trace.total_loss() <= 2.0);
    }
}

TEST_CASE("halving: version space shrinks by at least half on mistakes") {
    PolicyClass cls = labelings_class({0.1, 0.4, 0.7});
    auto learner = halving_learner(cls);
    History history;
    Rng rng(5);
    Rng gen(17);
    std::size_t prev_size = learner->version_space_size();
    for (int t = 0; t < 30; ++t) {
        const State s(std::vector<double>{
            std::vector<double>{0.1, 0.4, 0.7}[static_cast<std::size_t>(gen.uniform_int(3))]});
        const ActionId truth = s[0] >= 0.4 ? 1 : 0;  // one of the labelings
        const ActionId predicted = learner->act(history, s, std::nullopt, rng);
        Step step;
        step.state = s;
        step.action = predicted;
        step.queried = true;
        step.mentor_feedback = truth;
        history.append(step);
        learner->act(history, s, std::nullopt, rng);  // forces ingestion
        const std::size_t size = learner->version_space_size();
        CHECK(size <= prev_size);
        if (predicted != truth) CHECK(size <= prev_size / 2);
        prev_size = size;
    }
    CHECK_FALSE(learner->non_realizable_detected());
}

TEST_CASE("halving: worst-case mistakes equal ceil(log2 |class|) exactly") {
    const std::vector<double> grid = {0.2, 0.5};
    std::vector<std::vector<int>> tables;
    for (int code = 0; code < 4; ++code) {
        tables.push_back({code & 1, (code >> 1) & 1});
    }
    std::vector<int> alive = {0, 1, 2, 3};
    std::map<std::pair<std::vector<int>, int>, int> memo;
    CHECK(worst_case_mistakes(grid, tables, alive, 8, memo) == 2);
}

TEST_CASE("halving: non-realizable input flagged, version space retained") {
    PolicyClass cls = PolicyClass::explicit_finite({constant_policy(0), constant_policy(0)}, 2, 1);
    auto learner = halving_learner(cls);
    History history;
    Step step;
    step.state = State(0.5);
    step.queried = true;
    step.mentor_feedback = 1;  // inconsistent with every member
    history.append(step);
    Rng rng(1);
    learner->act(history, State(0.5), std::nullopt, rng);
    CHECK(learner->non_realizable_detected());
    CHECK(learner->version_space_size() == 2);
}

TEST_CASE("exp-weights: single expert is followed exactly") {
    auto learner = exp_weights_learner({constant_policy(1)}, 1.0);
    testutil::UniformAdversary adv(1, constant_policy(1));
    RunTrace trace = run_protocol(*learner, adv, 40, 9, 2);
    CHECK(trace.total_loss() == 0.0);
    CHECK(learner->cumulative_expected_loss() == doctest::Approx(learner->best_expert_loss()));
}

TEST_CASE("exp-weights: identical experts give the common loss exactly") {
    auto learner = exp_weights_learner({constant_policy(0), constant_policy(0)}, 1.0);
    testutil::UniformAdversary adv(1, threshold_policy(0.5));
    RunTrace trace = run_protocol(*learner, adv, 60, 13, 2);
    Rng flush_rng(0);
    learner->act(trace.history, State(0.0), std::nullopt, flush_rng);  // ingest final step
    CHECK(learner->cumulative_expected_loss() ==
          doctest::Approx(learner->best_expert_loss()).epsilon(1e-12));
    CHECK(trace.total_loss() == doctest::Approx(learner->best_expert_loss()));
}

TEST_CASE("exp-weights: perfect expert bounds closed-form loss by e/(e-1) ln 2") {
    auto learner = exp_weights_learner({constant_policy(1), constant_policy(0)}, 1.0);
    testutil::UniformAdversary adv(1, constant_policy(1));
    run_protocol(*learner, adv, 100, 21, 2);
    CHECK(learner->best_expert_loss() == 0.0);
    CHECK(learner->cumulative_expected_loss() <= kEOverEMinus1 * std::log(2.0));
}

TEST_CASE("exp-weights: distribution normalizes at every step") {
    auto learner = exp_weights_learner(
        {threshold_policy(0.2), threshold_policy(0.5), threshold_policy(0.8)}, 1.0);
    testutil::UniformAdversary adv(1, threshold_policy(0.5));
    History history;
    Rng adv_rng(3), act_rng(4);
    for (int t = 0; t < 50; ++t) {
        auto [s, am] = adv.next(history, adv_rng);
        const ActionId a = learner->act(history, s, std::nullopt, act_rng);
        const std::vector<double>& probs = learner->distribution();
        double total = 0.0;
        for (double p : probs) {
            CHECK(p >= 0.0);
            total += p;
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
        Step step;
        step.state = s;
        step.action = a;
        step.queried = true;
        step.mentor_feedback = am;
        history.append(step);
    }
}

TEST_CASE("exp-weights: small-loss bound holds surely on random instances") {
    Rng gen(88);
    for (int rep = 0; rep < 50; ++rep) {
        const int n_experts = 1 + gen.uniform_int(8);
        const int T = 1 + gen.uniform_int(40);
        std::vector<Policy> experts;
        // Scripted experts: state carries the step index; expert i predicts
        // a fixed random bit per step, giving arbitrary loss matrices.
        std::vector<std::vector<int>> table(static_cast<std::size_t>(n_experts));
        for (auto& row : table) {
            for (int t = 0; t < T; ++t) row.push_back(gen.uniform_int(2));
        }
        for (int i = 0; i < n_experts; ++i) {
            auto row = table[static_cast<std::size_t>(i)];
            experts.push_back(Policy{[row](const State& s) {
                                         return row[static_cast<std::size_t>(s[0])];
                                     },
                                     "scripted"});
        }
        auto learner = exp_weights_learner(std::move(experts), 1.0);
        std::vector<std::pair<State, ActionId>> script;
        for (int t = 0; t < T; ++t) {
            script.emplace_back(State(static_cast<double>(t)), gen.uniform_int(2));
        }
        testutil::ScriptedAdversary adv(std::move(script));
        run_protocol(*learner, adv, T, gen.next_u64(), 2);
        CHECK(learner->cumulative_expected_loss() <=
              kEOverEMinus1 * (learner->best_expert_loss() + std::log(n_experts)) + 1e-9);
    }
}

TEST_CASE("epsilon_cover: thresholds at eps=0.5 give {0, 0.5, 1}") {
    CoverResult cover = epsilon_cover(PolicyClass::thresholds_1d(1), 0.5);
    REQUIRE(cover.thresholds.size() == 3);
    CHECK(cover.thresholds[0] == 0.0);
    CHECK(cover.thresholds[1] == 0.5);
    CHECK(cover.thresholds[2] == 1.0);
    CHECK(cover.policies.size() <= 82);  // (41/0.5)^1
}

TEST_CASE("epsilon_cover: explicit class is its own 0-cover") {
    PolicyClass cls = PolicyClass::explicit_finite({constant_policy(0), constant_policy(1)}, 2, 1);
    CoverResult cover = epsilon_cover(cls, 0.01);
    CHECK(cover.policies.size() == 2);
}

TEST_CASE("epsilon_cover: eps >= 1 needs one policy") {
    CHECK(epsilon_cover(PolicyClass::thresholds_1d(1), 1.0).policies.size() == 1);
    CHECK(epsilon_cover(PolicyClass::axis_thresholds(2), 1.5).policies.size() == 1);
}

TEST_CASE("epsilon_cover: exact cover property for 1D thresholds") {
    // Disagreement measure between two thresholds is |theta - theta'| under
    // the uniform baseline; the grid guarantees a cover element within eps/2.
    for (double eps : {0.5, 0.25, 0.1, 0.03}) {
        CoverResult cover = epsilon_cover(PolicyClass::thresholds_1d(1), eps);
        Rng gen(31);
        for (int rep = 0; rep < 1000; ++rep) {
            const double theta = gen.uniform();
            double best = 1.0;
            for (double grid_theta : cover.thresholds) {
                best = std::min(best, std::abs(theta - grid_theta));
            }
            CHECK(best <= eps + 1e-12);
        }
        const double d = 1.0;
        CHECK(static_cast<double>(cover.policies.size()) <= std::pow(41.0 / eps, d));
    }
}

TEST_CASE("epsilon_cover: orthant cover property via exact volumes") {
    const int n = 2;
    const double eps = 0.3;
    CoverResult cover = epsilon_cover(PolicyClass::axis_thresholds(n), eps);
    CHECK(static_cast<double>(cover.policies.size()) <= std::pow(41.0 / eps, n));
    Rng gen(77);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> theta = {gen.uniform(), gen.uniform()};
        // Nearest grid point per dimension is within (eps/n)/2; the symmetric
        // difference of the two orthants has volume at most sum of offsets.
        const double h = eps / n;
        double disagreement_bound = 0.0;
        for (double x : theta) {
            const double snapped = std::round(x / h) * h;
            disagreement_bound += std::abs(x - std::min(snapped, 1.0));
        }
        CHECK(disagreement_bound <= eps / 2.0 + 1e-12);
    }
}

TEST_CASE("realizable_smooth_learner: T=1 collapses to one policy") {
    auto learner = realizable_smooth_learner(PolicyClass::thresholds_1d(1), 1);
    CHECK(learner->num_experts() == 1);
}

TEST_CASE("realizable_smooth_learner: margin instance has zero best loss") {
    const int T = 128;
    auto learner = realizable_smooth_learner(PolicyClass::thresholds_1d(1), T);
    const double theta = 0.37;
    // States keep a margin of at least 1/T from the mentor threshold, so a
    // grid threshold classifies everything correctly and L* = 0.
    std::vector<std::pair<State, ActionId>> script;
    Rng gen(101);
    for (int t = 0; t < T; ++t) {
        double x = gen.uniform();
        if (std::abs(x - theta) < 1.0 / T) x = theta + 2.0 / T;
        script.emplace_back(State(x), x >= theta ? 1 : 0);
    }
    testutil::ScriptedAdversary adv(std::move(script));
    run_protocol(*learner, adv, T, 55, 2);
    CHECK(learner->best_expert_loss() == 0.0);
    CHECK(learner->cumulative_expected_loss() <=
          kEOverEMinus1 * std::log(static_cast<double>(learner->num_experts())));
}

TEST_CASE("realizable_smooth_learner: smooth realizable loss is logarithmic in T") {
    const int T = 1024;
    const int trials = 50;
    KahanSum total;
    for (int i = 0; i < trials; ++i) {
        auto learner = realizable_smooth_learner(PolicyClass::thresholds_1d(1), T);
        testutil::UniformAdversary adv(1, threshold_policy(0.42));
        RunTrace trace = run_protocol(*learner, adv, T, Rng::derive(7, "trial", i), 2);
        total.add(trace.total_loss());
    }
    const double mean_loss = total.sum / trials;
    // e/(e-1) * (ln(41 T) + 1) with d = 1, sigma = 1.
    const double bound = kEOverEMinus1 * (std::log(41.0 * T) + 1.0);
    CHECK(mean_loss <= bound);
}

TEST_CASE("one_vs_rest: perfect copies never err") {
    // Copies learn indicator classes that contain the truth, so all copies
    // are eventually perfect; with halving on singletons they are perfect
    // from the start.
    const double theta = 0.5;
    auto make_factory = [theta](int target) {
        Policy indicator{[theta, target](const State& s) {
                             const int mentor = s[0] >= theta ? 1 : 0;
                             return mentor == target ? 1 : 0;
                         },
                         "indicator"};
        return PolicyClass::explicit_finite({indicator}, 2, 1);
    };
    int next_copy = 0;
    auto learner = one_vs_rest(
        [&]() -> std::unique_ptr<Algorithm> {
            return halving_learner(make_factory(next_copy++));
        },
        2);
    testutil::UniformAdversary adv(1, threshold_policy(theta));
    RunTrace trace = run_protocol(*learner, adv, 100, 19, 2);
    CHECK(trace.total_loss() == 0.0);
}

TEST_CASE("one_vs_rest: mistakes bounded by sum of copy mistake sets") {
    // Copies 0 and 1 err exactly at t=0 (they predict 0 there); copy 2 is
    // perfect. Truth is action 2 at every step.
    int next_copy = 0;
    auto learner = one_vs_rest(
        [&]() -> std::unique_ptr<Algorithm> {
            const int copy = next_copy++;
            std::vector<ActionId> outputs;
            for (int t = 0; t < 8; ++t) {
                const int truth_bit = copy == 2 ? 1 : 0;
                if (t == 0 && (copy == 0 || copy == 1)) {
                    outputs.push_back(1);  // wrong positive at t=0
                } else {
                    outputs.push_back(truth_bit);
                }
            }
            return std::make_unique<testutil::ScriptedAlgorithm>(std::move(outputs));
        },
        3);
    std::vector<std::pair<State, ActionId>> script;
    for (int t = 0; t < 8; ++t) script.emplace_back(State(0.5), 2);
    testutil::ScriptedAdversary adv(std::move(script));
    RunTrace trace = run_protocol(*learner, adv, 8, 2, 3);
    CHECK(trace.total_loss() <= 2.0);
}

TEST_CASE("one_vs_rest: rejects bad arguments") {
    CHECK_THROWS_AS(one_vs_rest([] { return std::make_unique<testutil::ConstantAlgorithm>(0); },
                                2),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        one_vs_rest([] { return std::make_unique<testutil::ScriptedAlgorithm>(
                             std::vector<ActionId>{0}); },
                    1),
        std::invalid_argument);
}

TEST_CASE("learner factories validate inputs") {
    CHECK_THROWS_AS(halving_learner(PolicyClass::thresholds_1d(1)), std::invalid_argument);
    CHECK_THROWS_AS(exp_weights_learner({}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(exp_weights_learner({constant_policy(0)}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(epsilon_cover(PolicyClass::thresholds_1d(1), 0.0), std::invalid_argument);
}
