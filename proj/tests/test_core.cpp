#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

using namespace mentorcore;

namespace {

// Records whether feedback was visible at each act call.
class SpyAlgorithm : public Algorithm {
public:
    std::vector<bool> saw_feedback;
    std::vector<std::optional<ActionId>> feedback_values;
    int period;

    explicit SpyAlgorithm(int query_period) : period(query_period) {}

    bool query(const History& history, const State&, Rng&) override {
        return history.length() % period == 0;
    }
    ActionId act(const History&, const State&, std::optional<ActionId> feedback, Rng&) override {
        saw_feedback.push_back(feedback.has_value());
        feedback_values.push_back(feedback);
        return 0;
    }
};

class OutOfRangeAlgorithm : public Algorithm {
public:
    bool query(const History&, const State&, Rng&) override { return false; }
    ActionId act(const History& history, const State&, std::optional<ActionId>, Rng&) override {
        return history.length() == 3 ? 7 : 0;
    }
};

}  // namespace

TEST_CASE("distance is Euclidean") {
    CHECK(distance(State({0.0, 0.0}), State({3.0, 4.0})) == doctest::Approx(5.0));
    CHECK(distance(State(0.25), State(0.25)) == 0.0);
}

TEST_CASE("binary_loss") {
    CHECK(binary_loss(2, 2) == 0.0);
    CHECK(binary_loss(0, 1) == 1.0);
}

TEST_CASE("restrict_history basics") {
    History f;
    for (int i = 0; i < 3; ++i) {
        Step s;
        s.state = State(static_cast<double>(i));
        s.action = i % 2;
        f.append(s);
    }

    SUBCASE("all ones is identity") {
        History r = restrict_history(f, {true, true, true, true});
        REQUIRE(r.length() == 3);
        for (int i = 0; i < 3; ++i) CHECK(r.steps[i].state == f.steps[i].state);
    }
    SUBCASE("all zeros is empty") {
        CHECK(restrict_history(f, {false, false, false}).length() == 0);
    }
    SUBCASE("pattern 101 keeps first and third") {
        History r = restrict_history(f, {true, false, true});
        REQUIRE(r.length() == 2);
        CHECK(r.steps[0].state[0] == 0.0);
        CHECK(r.steps[1].state[0] == 2.0);
    }
    SUBCASE("length identity") {
        std::vector<bool> u = {true, false, true};
        CHECK(restrict_history(f, u).length() == 2);
    }
    SUBCASE("short bit vector rejected") {
        CHECK_THROWS_AS(restrict_history(f, {true, true}), std::invalid_argument);
    }
}

TEST_CASE("run_protocol mentor copy matches mentor everywhere") {
    MentorCopy alg;
    testutil::UniformAdversary adv(1, threshold_policy(0.5));
    RunTrace trace = run_protocol(alg, adv, 5, 99, 2);
    REQUIRE(trace.history.length() == 5);
    for (int t = 0; t < 5; ++t) {
        CHECK(trace.history.steps[t].action == trace.mentor_actions[t]);
    }
    CHECK(trace.total_loss() == 0.0);
}

TEST_CASE("run_protocol determinism: same seed, identical trace") {
    auto run_once = [] {
        auto alg = full_stack(PolicyClass::thresholds_1d(1), 64, 1);
        testutil::UniformAdversary adv(1, threshold_policy(0.3));
        return run_protocol(*alg, adv, 64, 1234, 2);
    };
    RunTrace a = run_once();
    RunTrace b = run_once();
    REQUIRE(a.history.length() == b.history.length());
    for (int t = 0; t < a.history.length(); ++t) {
        CHECK(a.history.steps[t].state == b.history.steps[t].state);
        CHECK(a.history.steps[t].action == b.history.steps[t].action);
        CHECK(a.history.steps[t].queried == b.history.steps[t].queried);
        CHECK(a.history.steps[t].mentor_feedback == b.history.steps[t].mentor_feedback);
    }
}

TEST_CASE("run_protocol never-query case") {
    testutil::ConstantAlgorithm alg(0);
    testutil::UniformAdversary adv(1, threshold_policy(0.5));
    RunTrace trace = run_protocol(alg, adv, 20, 7, 2);
    CHECK(trace.total_queries() == 0);
    for (const Step& s : trace.history.steps) {
        CHECK_FALSE(s.mentor_feedback.has_value());
        CHECK_FALSE(s.queried);
    }
}

TEST_CASE("run_protocol rejects out-of-range actions with step index") {
    OutOfRangeAlgorithm alg;
    testutil::UniformAdversary adv(1, threshold_policy(0.5));
    try {
        run_protocol(alg, adv, 10, 5, 2);
        FAIL("expected ProtocolViolation");
    } catch (const ProtocolViolation& e) {
        CHECK(e.step_index == 3);
    }
}

TEST_CASE("run_protocol rejects T < 1") {
    testutil::ConstantAlgorithm alg(0);
    testutil::UniformAdversary adv(1, threshold_policy(0.5));
    CHECK_THROWS_AS(run_protocol(alg, adv, 0, 1, 2), std::invalid_argument);
}

TEST_CASE("feedback visible to act exactly on queried steps") {
    SpyAlgorithm alg(3);
    testutil::UniformAdversary adv(1, threshold_policy(0.5));
    RunTrace trace = run_protocol(alg, adv, 30, 11, 2);
    for (int t = 0; t < 30; ++t) {
        const bool queried = (t % 3 == 0);
        CHECK(alg.saw_feedback[t] == queried);
        CHECK(trace.history.steps[t].queried == queried);
        CHECK(trace.history.steps[t].mentor_feedback.has_value() == queried);
        if (queried) {
            CHECK(*alg.feedback_values[t] == trace.mentor_actions[t]);
        }
    }
}

TEST_CASE("query-agnostic learners ignore current-step feedback") {
    // Fresh instances with identical histories and identical rng streams
    // must act identically whether or not feedback is supplied.
    Rng gen(2024);
    for (int rep = 0; rep < 1000; ++rep) {
        History history;
        const int len = gen.uniform_int(8);
        for (int i = 0; i < len; ++i) {
            Step s;
            s.state = State(gen.uniform());
            s.action = gen.uniform_int(2);
            s.queried = gen.bernoulli(0.5);
            if (s.queried) s.mentor_feedback = gen.uniform_int(2);
            history.append(s);
        }
        const State probe(gen.uniform());
        const std::uint64_t rng_seed = gen.next_u64();

        auto a = realizable_smooth_learner(PolicyClass::thresholds_1d(1), 16);
        auto b = realizable_smooth_learner(PolicyClass::thresholds_1d(1), 16);
        Rng ra(rng_seed), rb(rng_seed);
        CHECK(a->act(history, probe, std::nullopt, ra) == b->act(history, probe, 1, rb));
    }
}

TEST_CASE("rng streams: named splits differ, derivation is pure") {
    Rng root(42);
    Rng a = root.split("adversary");
    Rng b = root.split("query");
    CHECK(a.next_u64() != b.next_u64());

    CHECK(Rng::derive(5, "trial", 3) == Rng::derive(5, "trial", 3));
    CHECK(Rng::derive(5, "trial", 3) != Rng::derive(5, "trial", 4));
    CHECK(Rng::derive(5, "trial", 3) != Rng::derive(6, "trial", 3));
    CHECK(Rng::derive(5, "trial") != Rng::derive(5, "mentor"));
}

TEST_CASE("rng uniform_int is within range and roughly uniform") {
    Rng rng(7);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) {
        const int v = rng.uniform_int(5);
        REQUIRE(v >= 0);
        REQUIRE(v < 5);
        ++counts[static_cast<std::size_t>(v)];
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}
