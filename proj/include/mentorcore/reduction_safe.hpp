#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mentorcore/core.hpp"
#include "mentorcore/experts.hpp"
#include "mentorcore/reduction_budget.hpp"

namespace mentorcore {

// Cache of (state, mentor action) pairs gathered on out-of-distribution
// steps. Same-action entries stay pairwise more than epsilon apart, which is
// what bounds the cache size by a packing number.
class MentorCache {
public:
    void insert(const State& s, ActionId a) { entries_.emplace_back(s, a); }

    std::size_t size() const { return entries_.size(); }
    const std::vector<std::pair<State, ActionId>>& entries() const { return entries_; }

private:
    std::vector<std::pair<State, ActionId>> entries_;
};

// Euclidean distance from s to the nearest cache entry with matching action;
// +infinity when no entry matches (the empty-min convention).
inline double nn_distance(const MentorCache& cache, const State& s, ActionId a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [entry_state, entry_action] : cache.entries()) {
        if (entry_action != a) continue;
        const double d = distance(s, entry_state);
        if (d < best) best = d;  // ties keep the first-inserted witness
    }
    return best;
}

// Per-step record kept for structural checks.
struct SafeStepDiag {
    bool ood = false;        // out-of-distribution branch taken
    bool sim_query = false;  // base's simulated query decision
    ActionId sim_action = 0; // base's simulated action
    double nn_dist = 0.0;
};

// The ask-for-help wrapper: simulate the base on a simulated history, follow
// it in familiar states, query the mentor and cache the answer in unfamiliar
// ones. The branch condition is strictly greater than epsilon; a distance of
// exactly epsilon follows the base.
class SafeWrapper : public Algorithm {
public:
    SafeWrapper(std::shared_ptr<Algorithm> base, double epsilon, int T)
        : base_(std::move(base)), epsilon_(epsilon), T_(T) {
        if (epsilon <= 0.0) throw std::invalid_argument("safe_wrapper: epsilon must be positive");
        if (!base_->query_agnostic()) {
            throw std::invalid_argument("safe_wrapper: base must be query-agnostic");
        }
    }

    bool query(const History&, const State& s, Rng& rng) override {
        // Simulate (q~_t, a~_t) from the base on the simulated history. The
        // base acts with null feedback; its simulated query result enters
        // only through the next step's simulated history.
        Pending p;
        p.sim_query = base_->query(simulated_, s, rng);
        p.sim_action = base_->act(simulated_, s, std::nullopt, rng);
        p.nn_dist = nn_distance(cache_, s, p.sim_action);
        p.ood = p.nn_dist > epsilon_;
        pending_ = p;
        has_pending_ = true;
        return p.ood ? true : p.sim_query;
    }

    ActionId act(const History&, const State& s, std::optional<ActionId> mentor_feedback,
                 Rng&) override {
        if (!has_pending_) throw std::logic_error("safe_wrapper: act called before query");
        const Pending p = pending_;
        has_pending_ = false;

        ActionId action;
        if (p.ood) {
            if (!mentor_feedback) {
                throw std::runtime_error("safe_wrapper: mentor feedback unavailable on query");
            }
            action = *mentor_feedback;
            cache_.insert(s, *mentor_feedback);
        } else {
            action = p.sim_action;
        }

        // Extend the simulated history with the base's simulated tuple
        // (s_t, a~_t, pi^m(s_t) q~_t). Whenever q~_t = 1 the real query bit
        // was also 1, so the feedback is available.
        Step sim_step;
        sim_step.state = s;
        sim_step.action = p.sim_action;
        sim_step.queried = p.sim_query;
        if (p.sim_query) {
            if (!mentor_feedback) {
                throw std::runtime_error("safe_wrapper: mentor feedback unavailable on query");
            }
            sim_step.mentor_feedback = *mentor_feedback;
        }
        simulated_.append(std::move(sim_step));

        diags_.push_back(SafeStepDiag{p.ood, p.sim_query, p.sim_action, p.nn_dist});
        return action;
    }

    const MentorCache& cache() const { return cache_; }
    const History& simulated_history() const { return simulated_; }
    const std::vector<SafeStepDiag>& diagnostics() const { return diags_; }

    int simulated_query_count() const {
        int q = 0;
        for (const SafeStepDiag& d : diags_) q += d.sim_query ? 1 : 0;
        return q;
    }

private:
    struct Pending {
        bool sim_query = false;
        ActionId sim_action = 0;
        bool ood = false;
        double nn_dist = 0.0;
    };

    std::shared_ptr<Algorithm> base_;
    double epsilon_;
    int T_;
    MentorCache cache_;
    History simulated_;
    std::vector<SafeStepDiag> diags_;
    Pending pending_;
    bool has_pending_ = false;
};

inline std::unique_ptr<SafeWrapper> safe_wrapper(std::shared_ptr<Algorithm> base, double epsilon,
                                                 int T) {
    return std::make_unique<SafeWrapper>(std::move(base), epsilon, T);
}

// k = T^{(2n+1)/(2n+2)}, epsilon = T^{-1/(n+1)}.
inline std::pair<double, double> default_params(int T, int n) {
    if (T < 1 || n < 1) throw std::invalid_argument("default_params: require T >= 1, n >= 1");
    const double t = static_cast<double>(T);
    const double k = std::pow(t, (2.0 * n + 1.0) / (2.0 * n + 2.0));
    const double eps = std::pow(t, -1.0 / (n + 1.0));
    return {k, eps};
}

// The full stack: smooth realizable learner -> query-budgeted wrapper ->
// ask-for-help wrapper, with the default parameter schedule.
inline std::unique_ptr<SafeWrapper> full_stack(const PolicyClass& cls, int T, int n) {
    auto [k, eps] = default_params(T, n);
    std::shared_ptr<Algorithm> base = realizable_smooth_learner(cls, T);
    std::shared_ptr<Algorithm> budgeted = budgeted_active(std::move(base), k, T);
    return safe_wrapper(std::move(budgeted), eps, T);
}

}  // namespace mentorcore
