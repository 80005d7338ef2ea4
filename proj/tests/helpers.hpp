#pragma once

// Shared generators and scripted components for the test suites.

#include <algorithm>
#include <memory>
#include <vector>

#include "mentorcore/mentorcore.hpp"

namespace testutil {

using namespace mentorcore;

// Uniform i.i.d. states on [0,1]^dim with a fixed mentor policy (sigma = 1).
class UniformAdversary : public Adversary {
public:
    UniformAdversary(int dim, Policy mentor) : dim_(dim), mentor_(std::move(mentor)) {}

    std::pair<State, ActionId> next(const History&, Rng& rng) override {
        std::vector<double> c(static_cast<std::size_t>(dim_));
        for (double& x : c) x = rng.uniform();
        State s(std::move(c));
        ActionId am = mentor_(s);
        return {std::move(s), am};
    }

    double sigma() const override { return 1.0; }

private:
    int dim_;
    Policy mentor_;
};

// Fixed (state, mentor action) script, cycled.
class ScriptedAdversary : public Adversary {
public:
    explicit ScriptedAdversary(std::vector<std::pair<State, ActionId>> script)
        : script_(std::move(script)) {}

    std::pair<State, ActionId> next(const History& history, Rng&) override {
        return script_[static_cast<std::size_t>(history.length()) % script_.size()];
    }

private:
    std::vector<std::pair<State, ActionId>> script_;
};

// Plays a fixed action forever, never queries.
class ConstantAlgorithm : public Algorithm {
public:
    explicit ConstantAlgorithm(ActionId a) : a_(a) {}
    bool query(const History&, const State&, Rng&) override { return false; }
    ActionId act(const History&, const State&, std::optional<ActionId>, Rng&) override {
        return a_;
    }
    bool query_agnostic() const override { return true; }

private:
    ActionId a_;
};

// Full-feedback learner that emits a fixed action sequence regardless of
// input; used to probe wrapper plumbing.
class ScriptedAlgorithm : public Algorithm {
public:
    explicit ScriptedAlgorithm(std::vector<ActionId> actions) : actions_(std::move(actions)) {}
    bool query(const History&, const State&, Rng&) override { return true; }
    ActionId act(const History& history, const State&, std::optional<ActionId>, Rng&) override {
        return actions_[static_cast<std::size_t>(history.length()) % actions_.size()];
    }
    bool full_feedback() const override { return true; }
    bool query_agnostic() const override { return true; }

private:
    std::vector<ActionId> actions_;
};

inline std::vector<double> random_distribution(Rng& rng, int n) {
    std::vector<double> p(static_cast<std::size_t>(n));
    double total = 0.0;
    for (double& x : p) {
        x = 0.05 + rng.uniform();
        total += x;
    }
    for (double& x : p) x /= total;
    return p;
}

// Random tiny finite MDP within the exact-oracle limits. States embedded on
// an integer grid in R^1.
inline FiniteMDP random_finite_mdp(Rng& rng, int num_states, int num_actions) {
    FiniteMDP m;
    m.num_actions = num_actions;
    for (int s = 0; s < num_states; ++s) m.states.push_back(State(static_cast<double>(s)));
    m.init_probs = random_distribution(rng, num_states);
    m.trans.resize(static_cast<std::size_t>(num_states));
    m.reward.resize(static_cast<std::size_t>(num_states));
    for (int s = 0; s < num_states; ++s) {
        m.trans[static_cast<std::size_t>(s)].resize(static_cast<std::size_t>(num_actions));
        for (int a = 0; a < num_actions; ++a) {
            m.trans[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] =
                random_distribution(rng, num_states);
            m.reward[static_cast<std::size_t>(s)].push_back(rng.uniform());
        }
        m.mentor.push_back(rng.uniform_int(num_actions));
    }
    return m;
}

// Random survival tables with values in [0.1, 1] and the mentor action
// always having the row maximum, so per-step survival gaps are nonnegative.
inline FiniteMu random_mentor_optimal_mu(Rng& rng, const FiniteMDP& mdp, int T) {
    FiniteMu mu;
    mu.value.resize(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        auto& per_t = mu.value[static_cast<std::size_t>(t)];
        per_t.resize(static_cast<std::size_t>(mdp.size()));
        for (int s = 0; s < mdp.size(); ++s) {
            auto& row = per_t[static_cast<std::size_t>(s)];
            row.resize(static_cast<std::size_t>(mdp.num_actions));
            for (double& v : row) v = 0.1 + 0.9 * rng.uniform();
            const auto max_it = std::max_element(row.begin(), row.end());
            std::swap(*max_it, row[static_cast<std::size_t>(mdp.mentor[static_cast<std::size_t>(s)])]);
        }
    }
    return mu;
}

// Random stochastic memoryless policy on a finite MDP; deterministic in
// roughly half the entries to exercise pruning.
inline TabularPolicy random_tabular_policy(Rng& rng, const FiniteMDP& mdp, int T) {
    std::vector<std::vector<std::vector<double>>> table(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        table[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(mdp.size()));
        for (int s = 0; s < mdp.size(); ++s) {
            if (rng.bernoulli(0.5)) {
                std::vector<double> p(static_cast<std::size_t>(mdp.num_actions), 0.0);
                p[static_cast<std::size_t>(rng.uniform_int(mdp.num_actions))] = 1.0;
                table[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = std::move(p);
            } else {
                table[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] =
                    random_distribution(rng, mdp.num_actions);
            }
        }
    }
    return [table](int t, int s) {
        return table[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
    };
}

}  // namespace testutil
