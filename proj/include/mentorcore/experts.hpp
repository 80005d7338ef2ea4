#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mentorcore/core.hpp"

namespace mentorcore {

// A deterministic policy S -> A with a printable description.
struct Policy {
    std::function<ActionId(const State&)> fn;
    std::string desc;

    ActionId operator()(const State& s) const { return fn(s); }
};

// pi_theta(s) = 1(s[0] >= theta), actions {0, 1}.
inline Policy threshold_policy(double theta) {
    return Policy{[theta](const State& s) { return s[0] >= theta ? 1 : 0; },
                  "threshold(" + std::to_string(theta) + ")"};
}

// pi_theta(s) = 1(s[j] >= theta[j] for all j), actions {0, 1}.
inline Policy orthant_policy(std::vector<double> theta) {
    return Policy{[theta](const State& s) {
                      for (std::size_t j = 0; j < theta.size(); ++j) {
                          if (s.coords[j] < theta[j]) return 0;
                      }
                      return 1;
                  },
                  "orthant"};
}

inline Policy constant_policy(ActionId a) {
    return Policy{[a](const State&) { return a; }, "const(" + std::to_string(a) + ")"};
}

struct PolicyClass {
    enum class Kind { ExplicitFinite, Threshold1D, AxisThreshold };

    Kind kind = Kind::ExplicitFinite;
    int dim = 1;          // state dimension
    int num_actions = 2;
    int vc_dim = 1;
    std::vector<Policy> members;  // populated for ExplicitFinite only

    static PolicyClass explicit_finite(std::vector<Policy> members, int num_actions, int dim) {
        PolicyClass c;
        c.kind = Kind::ExplicitFinite;
        c.members = std::move(members);
        c.num_actions = num_actions;
        c.dim = dim;
        c.vc_dim = std::max(1, static_cast<int>(std::ceil(
                                   std::log2(static_cast<double>(c.members.size()) + 1.0))));
        return c;
    }

    // Thresholds on coordinate 0 of [0,1]^dim; VC dimension 1.
    static PolicyClass thresholds_1d(int dim = 1) {
        PolicyClass c;
        c.kind = Kind::Threshold1D;
        c.dim = dim;
        c.num_actions = 2;
        c.vc_dim = 1;
        return c;
    }

    // Axis-aligned orthant indicators on [0,1]^n; VC dimension n.
    static PolicyClass axis_thresholds(int n) {
        PolicyClass c;
        c.kind = Kind::AxisThreshold;
        c.dim = n;
        c.num_actions = 2;
        c.vc_dim = n;
        return c;
    }
};

struct CoverResult {
    std::vector<Policy> policies;
    double epsilon = 0.0;
    // Threshold parameters when the class is a threshold kind; enables exact
    // interval-measure checks of the cover property in tests.
    std::vector<double> thresholds;
};

// Smooth epsilon-cover under the uniform baseline on the class domain.
// Threshold kinds use a uniform parameter grid, which beats the (41/eps)^d
// size bound; the bound is asserted in tests, not targeted.
inline CoverResult epsilon_cover(const PolicyClass& cls, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("epsilon_cover: eps must be positive");
    CoverResult out;
    out.epsilon = eps;
    if (cls.kind == PolicyClass::Kind::ExplicitFinite) {
        out.policies = cls.members;  // the class itself is a 0-cover
        return out;
    }
    if (cls.kind == PolicyClass::Kind::Threshold1D) {
        if (eps >= 1.0) {
            out.thresholds = {0.0};
            out.policies = {threshold_policy(0.0)};
            return out;
        }
        // Grid spacing eps: any theta is within eps/2 of a grid point, and
        // the disagreement interval has uniform measure |theta - theta'|.
        for (double theta = 0.0; theta < 1.0; theta += eps) {
            out.thresholds.push_back(theta);
        }
        out.thresholds.push_back(1.0);
        for (double theta : out.thresholds) out.policies.push_back(threshold_policy(theta));
        return out;
    }
    if (cls.kind == PolicyClass::Kind::AxisThreshold) {
        const int n = cls.dim;
        if (eps >= 1.0) {
            out.policies = {orthant_policy(std::vector<double>(static_cast<std::size_t>(n), 0.0))};
            return out;
        }
        // Per-dimension spacing eps/n; symmetric-difference measure between
        // orthants is at most the sum of per-dimension offsets.
        const double h = eps / n;
        std::vector<double> grid;
        for (double v = 0.0; v < 1.0; v += h) grid.push_back(v);
        grid.push_back(1.0);
        std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
        while (true) {
            std::vector<double> theta(static_cast<std::size_t>(n));
            for (int j = 0; j < n; ++j) theta[static_cast<std::size_t>(j)] = grid[idx[static_cast<std::size_t>(j)]];
            out.policies.push_back(orthant_policy(theta));
            int j = 0;
            while (j < n) {
                if (++idx[static_cast<std::size_t>(j)] < grid.size()) break;
                idx[static_cast<std::size_t>(j)] = 0;
                ++j;
            }
            if (j == n) break;
        }
        return out;
    }
    throw std::invalid_argument("epsilon_cover: unsupported policy class kind");
}

// Classical halving over an explicit finite version space: predict the
// plurality vote, eliminate inconsistent policies on feedback. Under
// realizability the version space never empties and mistakes are at most
// ceil(log2 |Pi|).
class HalvingLearner : public Algorithm {
public:
    HalvingLearner(std::vector<Policy> policies, int num_actions)
        : policies_(std::move(policies)),
          num_actions_(num_actions),
          alive_(policies_.size(), true),
          alive_count_(policies_.size()) {
        if (policies_.empty()) throw std::invalid_argument("halving: empty policy list");
    }

    bool query(const History&, const State&, Rng&) override { return true; }

    ActionId act(const History& history, const State& s, std::optional<ActionId>,
                 Rng&) override {
        ingest(history);
        std::vector<int> votes(static_cast<std::size_t>(num_actions_), 0);
        for (std::size_t i = 0; i < policies_.size(); ++i) {
            if (alive_[i]) ++votes[static_cast<std::size_t>(policies_[i](s))];
        }
        ActionId best = 0;
        for (ActionId a = 1; a < num_actions_; ++a) {
            if (votes[static_cast<std::size_t>(a)] > votes[static_cast<std::size_t>(best)]) best = a;
        }
        return best;
    }

    bool full_feedback() const override { return true; }
    bool query_agnostic() const override { return true; }

    std::size_t version_space_size() const { return alive_count_; }
    bool non_realizable_detected() const { return non_realizable_; }
    const std::vector<bool>& alive_mask() const { return alive_; }

private:
    void ingest(const History& history) {
        for (; cursor_ < history.length(); ++cursor_) {
            const Step& step = history.steps[static_cast<std::size_t>(cursor_)];
            if (!step.mentor_feedback) continue;
            std::vector<bool> next = alive_;
            std::size_t count = 0;
            for (std::size_t i = 0; i < policies_.size(); ++i) {
                if (!alive_[i]) continue;
                if (policies_[i](step.state) != *step.mentor_feedback) {
                    next[i] = false;
                } else {
                    ++count;
                }
            }
            if (count == 0) {
                // Non-realizable input: retain the current version space as a
                // last-known-consistent fallback and flag the condition.
                non_realizable_ = true;
                continue;
            }
            alive_ = std::move(next);
            alive_count_ = count;
        }
    }

    std::vector<Policy> policies_;
    int num_actions_;
    std::vector<bool> alive_;
    std::size_t alive_count_;
    int cursor_ = 0;
    bool non_realizable_ = false;
};

// Exponential weights over a finite expert list: sample expert i with
// probability proportional to exp(-eta * cumulative loss of i). With eta = 1
// the closed-form cumulative expected loss obeys
//   sum_t <w_t, l_t> <= e/(e-1) * (L* + ln N).
class ExpWeightsLearner : public Algorithm {
public:
    ExpWeightsLearner(std::vector<Policy> experts, double eta)
        : experts_(std::move(experts)),
          eta_(eta),
          cum_losses_(experts_.size(), 0.0) {
        if (experts_.empty()) throw std::invalid_argument("exp_weights: empty expert list");
        if (eta <= 0.0) throw std::invalid_argument("exp_weights: eta must be positive");
    }

    bool query(const History&, const State&, Rng&) override { return true; }

    ActionId act(const History& history, const State& s, std::optional<ActionId>,
                 Rng& rng) override {
        ingest(history);
        distribution();
        const double u = rng.uniform();
        const auto it = std::upper_bound(cum_probs_.begin(), cum_probs_.end(), u);
        const std::size_t pick = std::min(static_cast<std::size_t>(it - cum_probs_.begin()),
                                          experts_.size() - 1);
        return experts_[pick](s);
    }

    bool full_feedback() const override { return true; }
    bool query_agnostic() const override { return true; }

    // Sampling distribution induced by the current cumulative losses.
    const std::vector<double>& distribution() {
        if (dirty_) {
            const double min_loss = *std::min_element(cum_losses_.begin(), cum_losses_.end());
            double total = 0.0;
            probs_.resize(cum_losses_.size());
            for (std::size_t i = 0; i < cum_losses_.size(); ++i) {
                probs_[i] = std::exp(-eta_ * (cum_losses_[i] - min_loss));
                total += probs_[i];
            }
            cum_probs_.resize(probs_.size());
            double acc = 0.0;
            for (std::size_t i = 0; i < probs_.size(); ++i) {
                probs_[i] /= total;
                acc += probs_[i];
                cum_probs_[i] = acc;
            }
            dirty_ = false;
        }
        return probs_;
    }

    // sum_t <w_t, l_t>, accumulated deterministically from the weight
    // recursion; independent of the sampling draws.
    double cumulative_expected_loss() const { return cum_expected_loss_; }

    double best_expert_loss() const {
        return *std::min_element(cum_losses_.begin(), cum_losses_.end());
    }

    std::size_t num_experts() const { return experts_.size(); }

private:
    void ingest(const History& history) {
        for (; cursor_ < history.length(); ++cursor_) {
            const Step& step = history.steps[static_cast<std::size_t>(cursor_)];
            if (!step.mentor_feedback) continue;
            const std::vector<double>& probs = distribution();
            double expected = 0.0;
            for (std::size_t i = 0; i < experts_.size(); ++i) {
                const double loss = binary_loss(experts_[i](step.state), *step.mentor_feedback);
                expected += probs[i] * loss;
                cum_losses_[i] += loss;
            }
            cum_expected_loss_ += expected;
            dirty_ = true;
        }
    }

    std::vector<Policy> experts_;
    double eta_;
    std::vector<double> cum_losses_;
    std::vector<double> probs_;
    std::vector<double> cum_probs_;
    bool dirty_ = true;
    double cum_expected_loss_ = 0.0;
    int cursor_ = 0;
};

inline std::unique_ptr<HalvingLearner> halving_learner(const PolicyClass& cls) {
    if (cls.kind != PolicyClass::Kind::ExplicitFinite) {
        throw std::invalid_argument("halving_learner: requires an explicit finite class");
    }
    return std::make_unique<HalvingLearner>(cls.members, cls.num_actions);
}

inline std::unique_ptr<ExpWeightsLearner> exp_weights_learner(std::vector<Policy> experts,
                                                              double eta) {
    return std::make_unique<ExpWeightsLearner>(std::move(experts), eta);
}

// Exponential weights (eta = 1) on a (1/T)-cover of the class. Under
// realizability and a sigma-smooth adversary the expected cumulative binary
// loss is O(d log T + 1/sigma).
inline std::unique_ptr<ExpWeightsLearner> realizable_smooth_learner(const PolicyClass& cls,
                                                                    int T) {
    CoverResult cover = epsilon_cover(cls, 1.0 / std::max(1, T));
    return std::make_unique<ExpWeightsLearner>(std::move(cover.policies), 1.0);
}

// One-vs-rest multi-action wrapper: copy a predicts whether a_t^m == a. The
// final prediction is the lowest-index positive copy, or action 0 when no
// copy is positive.
class OneVsRestLearner : public Algorithm {
public:
    OneVsRestLearner(std::function<std::unique_ptr<Algorithm>()> factory, int action_count)
        : action_count_(action_count) {
        if (action_count < 2) throw std::invalid_argument("one_vs_rest: need at least 2 actions");
        for (int a = 0; a < action_count; ++a) {
            auto copy = factory();
            if (!copy->full_feedback() || !copy->query_agnostic()) {
                throw std::invalid_argument(
                    "one_vs_rest: factory must produce full-feedback, query-agnostic learners");
            }
            copies_.push_back(std::move(copy));
            copy_histories_.emplace_back();
        }
    }

    bool query(const History&, const State&, Rng&) override { return true; }

    ActionId act(const History& history, const State& s, std::optional<ActionId>,
                 Rng& rng) override {
        ingest(history);
        pending_predictions_.assign(static_cast<std::size_t>(action_count_), 0);
        ActionId chosen = 0;
        bool found = false;
        for (int a = 0; a < action_count_; ++a) {
            const ActionId bit =
                copies_[static_cast<std::size_t>(a)]->act(copy_histories_[static_cast<std::size_t>(a)], s, std::nullopt, rng);
            pending_predictions_[static_cast<std::size_t>(a)] = bit;
            if (bit == 1 && !found) {
                chosen = a;
                found = true;
            }
        }
        return chosen;
    }

    bool full_feedback() const override { return true; }
    bool query_agnostic() const override { return true; }

private:
    void ingest(const History& history) {
        for (; cursor_ < history.length(); ++cursor_) {
            const Step& step = history.steps[static_cast<std::size_t>(cursor_)];
            if (!step.mentor_feedback) continue;
            for (int a = 0; a < action_count_; ++a) {
                Step binary;
                binary.state = step.state;
                binary.mentor_feedback = (*step.mentor_feedback == a) ? 1 : 0;
                binary.queried = true;
                copy_histories_[static_cast<std::size_t>(a)].append(std::move(binary));
            }
        }
    }

    int action_count_;
    std::vector<std::unique_ptr<Algorithm>> copies_;
    std::vector<History> copy_histories_;
    std::vector<ActionId> pending_predictions_;
    int cursor_ = 0;
};

inline std::unique_ptr<OneVsRestLearner> one_vs_rest(
    std::function<std::unique_ptr<Algorithm>()> factory, int action_count) {
    return std::make_unique<OneVsRestLearner>(std::move(factory), action_count);
}

}  // namespace mentorcore
