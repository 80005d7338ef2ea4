#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mentorcore/rng.hpp"

namespace mentorcore {

// A state is a point in R^n.
struct State {
    std::vector<double> coords;

    State() = default;
    explicit State(std::vector<double> c) : coords(std::move(c)) {}
    explicit State(double x) : coords{x} {}

    int dim() const { return static_cast<int>(coords.size()); }
    double operator[](int i) const { return coords[static_cast<std::size_t>(i)]; }

    bool operator==(const State& other) const { return coords == other.coords; }
};

inline double distance(const State& a, const State& b) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.coords.size(); ++i) {
        const double d = a.coords[i] - b.coords[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

// Actions are indices into a finite action set of known size.
using ActionId = int;

// One protocol step. mentor_feedback is present iff the step was queried;
// the unqueried case uses an explicit null rather than a dummy action index.
struct Step {
    State state;
    ActionId action = 0;
    std::optional<ActionId> mentor_feedback;
    bool queried = false;
};

struct History {
    std::vector<Step> steps;

    int length() const { return static_cast<int>(steps.size()); }
    bool empty() const { return steps.empty(); }
    const Step& back() const { return steps.back(); }
    void append(Step s) { steps.push_back(std::move(s)); }
};

struct ProtocolViolation : std::runtime_error {
    int step_index;
    ProtocolViolation(int t, const std::string& what)
        : std::runtime_error("protocol violation at step " + std::to_string(t) + ": " + what),
          step_index(t) {}
};

// The (query function, action function) pair of the learning protocol.
// Learners may keep internal state, but that state must be a function of the
// histories they have been shown; stateful learners ingest new history
// entries lazily via a cursor.
class Algorithm {
public:
    virtual ~Algorithm() = default;

    // q_t ~ Gamma^Q(F_t, s_t)
    virtual bool query(const History& history, const State& s, Rng& rng) = 0;

    // a_t ~ Gamma^A(F_t, s_t, a_t^m q_t)
    virtual ActionId act(const History& history, const State& s,
                         std::optional<ActionId> mentor_feedback, Rng& rng) = 0;

    // Full feedback: query function is identically 1.
    virtual bool full_feedback() const { return false; }

    // Query-agnostic: the action ignores the current step's feedback.
    virtual bool query_agnostic() const { return false; }
};

// Emits (s_t, a_t^m) given the history so far.
class Adversary {
public:
    virtual ~Adversary() = default;

    virtual std::pair<State, ActionId> next(const History& history, Rng& rng) = 0;

    // Declared smoothness; 0 means fully adversarial.
    virtual double sigma() const { return 0.0; }
};

struct RunTrace {
    History history;
    std::vector<ActionId> mentor_actions;  // ground truth a_t^m, revealed or not
    std::vector<double> losses;            // binary loss of a_t against a_t^m
    int T = 0;
    std::uint64_t seed = 0;

    int total_queries() const {
        int q = 0;
        for (const Step& s : history.steps) q += s.queried ? 1 : 0;
        return q;
    }
    double total_loss() const {
        double sum = 0.0;
        for (double l : losses) sum += l;
        return sum;
    }
};

inline double binary_loss(ActionId a, ActionId a_m) { return a == a_m ? 0.0 : 1.0; }

// Query-restricted history F ∩ u: the subsequence at indices with u_i = 1.
inline History restrict_history(const History& history, const std::vector<bool>& u) {
    if (static_cast<int>(u.size()) < history.length()) {
        throw std::invalid_argument("restrict_history: bit vector shorter than history");
    }
    History out;
    for (int i = 0; i < history.length(); ++i) {
        if (u[static_cast<std::size_t>(i)]) out.append(history.steps[static_cast<std::size_t>(i)]);
    }
    return out;
}

// Runs the per-step protocol: adversary draw, query decision, feedback
// reveal, action. The three component streams are split from the root seed
// so they evolve independently.
inline RunTrace run_protocol(Algorithm& alg, Adversary& adv, int T, std::uint64_t seed,
                             int num_actions) {
    if (T < 1) throw std::invalid_argument("run_protocol: T must be >= 1");
    Rng root(seed);
    Rng adv_rng = root.split("adversary");
    Rng query_rng = root.split("query");
    Rng action_rng = root.split("action");

    RunTrace trace;
    trace.T = T;
    trace.seed = seed;
    for (int t = 0; t < T; ++t) {
        auto [s, mentor_action] = adv.next(trace.history, adv_rng);
        if (mentor_action < 0 || mentor_action >= num_actions) {
            throw ProtocolViolation(t, "adversary returned out-of-range mentor action");
        }
        const bool queried = alg.query(trace.history, s, query_rng);
        std::optional<ActionId> feedback;
        if (queried) feedback = mentor_action;
        const ActionId a = alg.act(trace.history, s, feedback, action_rng);
        if (a < 0 || a >= num_actions) {
            throw ProtocolViolation(t, "algorithm returned out-of-range action");
        }
        trace.history.append(Step{s, a, feedback, queried});
        trace.mentor_actions.push_back(mentor_action);
        trace.losses.push_back(binary_loss(a, mentor_action));
    }
    return trace;
}

}  // namespace mentorcore
