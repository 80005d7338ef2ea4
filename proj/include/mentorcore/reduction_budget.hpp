#pragma once

#include <memory>
#include <stdexcept>

#include "mentorcore/core.hpp"

namespace mentorcore {

// q * (T/k) * loss: the importance-weighted loss estimate used by the
// query-budgeted reduction. Unbiased when q ~ Bernoulli(k/T) independent of
// the loss.
inline double tilde_loss(bool q, double k, double T, double loss_value) {
    if (k <= 0.0 || k > T) throw std::invalid_argument("tilde_loss: require 0 < k <= T");
    return q ? (T / k) * loss_value : 0.0;
}

// Converts a full-feedback, query-agnostic algorithm into an active one:
// query i.i.d. Bernoulli(k/T) each step and run the base on the
// query-restricted history. The wrapper keeps its own query-decision log and
// feeds the base an incrementally maintained restricted history, so the
// restriction is always computed from ground truth even when an outer
// wrapper also queries.
class BudgetedActive : public Algorithm {
public:
    BudgetedActive(std::shared_ptr<Algorithm> base, double k, int T)
        : base_(std::move(base)), k_(k), T_(T) {
        if (k <= 0.0 || k > static_cast<double>(T)) {
            throw std::invalid_argument("budgeted_active: require 0 < k <= T");
        }
        if (!base_->full_feedback() || !base_->query_agnostic()) {
            throw std::invalid_argument(
                "budgeted_active: base must be full-feedback and query-agnostic");
        }
    }

    bool query(const History&, const State&, Rng& rng) override {
        const bool q = rng.bernoulli(k_ / static_cast<double>(T_));
        query_log_.push_back(q);
        return q;
    }

    ActionId act(const History& history, const State& s, std::optional<ActionId>,
                 Rng& rng) override {
        sync(history);
        return base_->act(restricted_, s, std::nullopt, rng);
    }

    bool query_agnostic() const override { return true; }

    const std::vector<bool>& query_log() const { return query_log_; }

private:
    // Append newly completed queried steps to the restricted history F ∩ q.
    void sync(const History& history) {
        for (; cursor_ < history.length(); ++cursor_) {
            if (cursor_ < static_cast<int>(query_log_.size()) &&
                query_log_[static_cast<std::size_t>(cursor_)]) {
                restricted_.append(history.steps[static_cast<std::size_t>(cursor_)]);
            }
        }
    }

    std::shared_ptr<Algorithm> base_;
    double k_;
    int T_;
    std::vector<bool> query_log_;
    History restricted_;
    int cursor_ = 0;
};

inline std::unique_ptr<BudgetedActive> budgeted_active(std::shared_ptr<Algorithm> base, double k,
                                                       int T) {
    return std::make_unique<BudgetedActive>(std::move(base), k, T);
}

}  // namespace mentorcore
