#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mentorcore/core.hpp"
#include "mentorcore/environments.hpp"
#include "mentorcore/experts.hpp"
#include "mentorcore/parallel.hpp"

namespace mentorcore {

enum class RegretKind { SA, PLUS, MUL, MDP, QUERIES };

inline const char* regret_kind_name(RegretKind k) {
    switch (k) {
        case RegretKind::SA: return "SA";
        case RegretKind::PLUS: return "PLUS";
        case RegretKind::MUL: return "MUL";
        case RegretKind::MDP: return "MDP";
        case RegretKind::QUERIES: return "QUERIES";
    }
    return "?";
}

struct RegretReport {
    RegretKind kind = RegretKind::SA;
    double estimate = 0.0;
    double ci_halfwidth = 0.0;  // 95% normal approximation
    int trials = 0;
    double query_mean = 0.0;
    std::map<std::string, double> extra;
};

struct SlopeFit {
    std::vector<std::pair<double, double>> points;  // (log T, log value)
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int dropped = 0;  // nonpositive values excluded from the fit
};

// Compensated summation; keeps parallel-trial aggregation deterministic when
// applied in index order.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

namespace detail {

constexpr double kZ95 = 1.959963984540054;

inline std::pair<double, double> mean_ci(const std::vector<double>& samples) {
    KahanSum s;
    for (double x : samples) s.add(x);
    const double n = static_cast<double>(samples.size());
    const double mean = s.sum / n;
    if (samples.size() < 2) return {mean, 0.0};
    KahanSum sq;
    for (double x : samples) sq.add((x - mean) * (x - mean));
    const double stderr_ = std::sqrt(sq.sum / (n - 1.0) / n);
    return {mean, kZ95 * stderr_};
}

inline double bounding_box_diameter(const std::vector<State>& states) {
    if (states.empty()) return 0.0;
    const int n = states.front().dim();
    double sq = 0.0;
    for (int j = 0; j < n; ++j) {
        double lo = states.front()[j], hi = lo;
        for (const State& s : states) {
            lo = std::min(lo, s[j]);
            hi = std::max(hi, s[j]);
        }
        sq += (hi - lo) * (hi - lo);
    }
    return std::sqrt(sq);
}

inline std::vector<State> visited_states(const RunTrace& trace) {
    std::vector<State> out;
    out.reserve(trace.history.steps.size());
    for (const Step& st : trace.history.steps) out.push_back(st.state);
    return out;
}

}  // namespace detail

using AlgFactory = std::function<std::unique_ptr<Algorithm>()>;
using AdvFactory = std::function<std::unique_ptr<Adversary>()>;

// R_SA: prediction-loss gap against the best comparator, minimized per trial
// (paired). With an infinite class the caller passes its cover and sets
// `covered`, recorded in diagnostics.
inline RegretReport estimate_regret_sa(const AlgFactory& alg_factory, const AdvFactory& adv_factory,
                                       const std::vector<Policy>& comparators, int T, int trials,
                                       std::uint64_t seed, int num_actions = 2,
                                       bool covered = false) {
    if (trials < 1) throw std::invalid_argument("estimate_regret_sa: trials must be >= 1");
    if (comparators.empty()) throw std::invalid_argument("estimate_regret_sa: empty comparator set");
    std::vector<double> samples(static_cast<std::size_t>(trials));
    std::vector<double> queries(static_cast<std::size_t>(trials));
    std::vector<double> diams(static_cast<std::size_t>(trials));
    parallel_for(trials, [&](int i) {
        auto alg = alg_factory();
        auto adv = adv_factory();
        const RunTrace trace =
            run_protocol(*alg, *adv, T, Rng::derive(seed, "trial", static_cast<std::uint64_t>(i)),
                         num_actions);
        double best = std::numeric_limits<double>::infinity();
        for (const Policy& pi : comparators) {
            KahanSum loss;
            for (int t = 0; t < T; ++t) {
                loss.add(binary_loss(pi(trace.history.steps[static_cast<std::size_t>(t)].state),
                                     trace.mentor_actions[static_cast<std::size_t>(t)]));
            }
            best = std::min(best, loss.sum);
        }
        samples[static_cast<std::size_t>(i)] = trace.total_loss() - best;
        queries[static_cast<std::size_t>(i)] = trace.total_queries();
        diams[static_cast<std::size_t>(i)] =
            detail::bounding_box_diameter(detail::visited_states(trace));
    });
    RegretReport report;
    report.kind = RegretKind::SA;
    std::tie(report.estimate, report.ci_halfwidth) = detail::mean_ci(samples);
    report.trials = trials;
    report.query_mean = detail::mean_ci(queries).first;
    report.extra["diam_mean"] = detail::mean_ci(diams).first;
    report.extra["covered"] = covered ? 1.0 : 0.0;
    return report;
}

namespace detail {

template <typename PerTrial>
RegretReport estimate_paired(RegretKind kind, const AlgFactory& alg_factory,
                             const AdvFactory& adv_factory, int T, int trials, std::uint64_t seed,
                             int num_actions, PerTrial&& per_trial) {
    if (trials < 1) throw std::invalid_argument("regret estimator: trials must be >= 1");
    std::vector<double> samples(static_cast<std::size_t>(trials));
    std::vector<double> queries(static_cast<std::size_t>(trials));
    std::vector<double> diams(static_cast<std::size_t>(trials));
    parallel_for(trials, [&](int i) {
        auto alg = alg_factory();
        auto adv = adv_factory();
        const RunTrace trace =
            run_protocol(*alg, *adv, T, Rng::derive(seed, "trial", static_cast<std::uint64_t>(i)),
                         num_actions);
        samples[static_cast<std::size_t>(i)] = per_trial(trace);
        queries[static_cast<std::size_t>(i)] = trace.total_queries();
        diams[static_cast<std::size_t>(i)] = bounding_box_diameter(visited_states(trace));
    });
    RegretReport report;
    report.kind = kind;
    std::tie(report.estimate, report.ci_halfwidth) = mean_ci(samples);
    report.trials = trials;
    report.query_mean = mean_ci(queries).first;
    report.extra["diam_mean"] = mean_ci(diams).first;
    return report;
}

}  // namespace detail

// R_plus: additive survival-probability gap on the agent's own states. The
// trace is generated once and mu applied post-hoc, so one set of traces
// serves any admissible mu simultaneously.
inline RegretReport estimate_regret_plus(const AlgFactory& alg_factory,
                                         const AdvFactory& adv_factory, const MuSequence& mu,
                                         int T, int trials, std::uint64_t seed,
                                         int num_actions = 2) {
    return detail::estimate_paired(
        RegretKind::PLUS, alg_factory, adv_factory, T, trials, seed, num_actions,
        [&mu](const RunTrace& trace) {
            KahanSum gap;
            for (int t = 0; t < trace.T; ++t) {
                const Step& st = trace.history.steps[static_cast<std::size_t>(t)];
                const ActionId am = trace.mentor_actions[static_cast<std::size_t>(t)];
                gap.add(mu.value(t, st.state, am) - mu.value(t, st.state, st.action));
            }
            return gap.sum;
        });
}

// R_mul: log-product (catastrophe-avoidance) gap. Requires mu > 0 on every
// visited pair; the objective is undefined otherwise.
inline RegretReport estimate_regret_mul(const AlgFactory& alg_factory,
                                        const AdvFactory& adv_factory, const MuSequence& mu,
                                        int T, int trials, std::uint64_t seed,
                                        int num_actions = 2) {
    if (trials < 1) throw std::invalid_argument("estimate_regret_mul: trials must be >= 1");
    std::vector<double> samples(static_cast<std::size_t>(trials));
    std::vector<double> queries(static_cast<std::size_t>(trials));
    std::vector<double> diams(static_cast<std::size_t>(trials));
    std::vector<double> visited_min(static_cast<std::size_t>(trials),
                                    std::numeric_limits<double>::infinity());
    parallel_for(trials, [&](int i) {
        auto alg = alg_factory();
        auto adv = adv_factory();
        const RunTrace trace =
            run_protocol(*alg, *adv, T, Rng::derive(seed, "trial", static_cast<std::uint64_t>(i)),
                         num_actions);
        KahanSum gap;
        double local_min = std::numeric_limits<double>::infinity();
        for (int t = 0; t < T; ++t) {
            const Step& st = trace.history.steps[static_cast<std::size_t>(t)];
            const ActionId am = trace.mentor_actions[static_cast<std::size_t>(t)];
            const double mu_m = mu.value(t, st.state, am);
            const double mu_a = mu.value(t, st.state, st.action);
            local_min = std::min({local_min, mu_m, mu_a});
            if (mu_m <= 0.0 || mu_a <= 0.0) {
                throw std::domain_error(
                    "estimate_regret_mul: mu = 0 on a visited pair; the log-product objective "
                    "needs mu_min > 0");
            }
            gap.add(std::log(mu_m) - std::log(mu_a));
        }
        samples[static_cast<std::size_t>(i)] = gap.sum;
        queries[static_cast<std::size_t>(i)] = trace.total_queries();
        diams[static_cast<std::size_t>(i)] =
            detail::bounding_box_diameter(detail::visited_states(trace));
        visited_min[static_cast<std::size_t>(i)] = local_min;
    });
    RegretReport report;
    report.kind = RegretKind::MUL;
    std::tie(report.estimate, report.ci_halfwidth) = detail::mean_ci(samples);
    report.trials = trials;
    report.query_mean = detail::mean_ci(queries).first;
    report.extra["diam_mean"] = detail::mean_ci(diams).first;
    report.extra["mu_min_visited"] =
        *std::min_element(visited_min.begin(), visited_min.end());
    return report;
}

// R_MDP: reward gap between an independent mentor rollout and the agent's
// run, with a common-random-number initial state per trial.
inline RegretReport estimate_regret_mdp(const AlgFactory& alg_factory, const MDPInstance& mdp,
                                        int T, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("estimate_regret_mdp: trials must be >= 1");
    std::vector<double> samples(static_cast<std::size_t>(trials));
    std::vector<double> queries(static_cast<std::size_t>(trials));
    std::vector<double> diams(static_cast<std::size_t>(trials));
    parallel_for(trials, [&](int i) {
        const std::uint64_t trial_seed = Rng::derive(seed, "trial", static_cast<std::uint64_t>(i));
        Rng init_rng(Rng::derive(trial_seed, "init"));
        const State s1 = mdp.init(init_rng);

        Rng mentor_rng(Rng::derive(trial_seed, "mentor"));
        KahanSum mentor_reward;
        State sm = s1;
        mentor_reward.add(mdp.reward(sm, mdp.mentor(sm)));
        for (int t = 1; t < T; ++t) {
            sm = mdp.step(sm, mdp.mentor(sm), mentor_rng);
            mentor_reward.add(mdp.reward(sm, mdp.mentor(sm)));
        }

        auto alg = alg_factory();
        MdpAdversary adv(mdp, s1);
        const RunTrace trace =
            run_protocol(*alg, adv, T, Rng::derive(trial_seed, "agent"), mdp.num_actions);
        KahanSum agent_reward;
        for (const Step& st : trace.history.steps) agent_reward.add(mdp.reward(st.state, st.action));

        samples[static_cast<std::size_t>(i)] = mentor_reward.sum - agent_reward.sum;
        queries[static_cast<std::size_t>(i)] = trace.total_queries();
        diams[static_cast<std::size_t>(i)] =
            detail::bounding_box_diameter(detail::visited_states(trace));
    });
    RegretReport report;
    report.kind = RegretKind::MDP;
    std::tie(report.estimate, report.ci_halfwidth) = detail::mean_ci(samples);
    report.trials = trials;
    report.query_mean = detail::mean_ci(queries).first;
    report.extra["diam_mean"] = detail::mean_ci(diams).first;
    return report;
}

// Splits one regret sample into the part caused by being in worse states and
// the part caused by acting worse in them; the parts sum to the direct
// difference exactly (add and subtract sum_t r(s_t, pi^m(s_t))).
inline std::pair<double, double> decompose_mdp_regret(const std::vector<State>& agent_states,
                                                      const std::vector<ActionId>& agent_actions,
                                                      const std::vector<State>& mentor_states,
                                                      const MDPInstance& mdp) {
    if (agent_states.size() != mentor_states.size() ||
        agent_states.size() != agent_actions.size()) {
        throw std::invalid_argument("decompose_mdp_regret: trace length mismatch");
    }
    KahanSum state_based, action_based;
    for (std::size_t t = 0; t < agent_states.size(); ++t) {
        const State& sm = mentor_states[t];
        const State& s = agent_states[t];
        const double r_mentor = mdp.reward(sm, mdp.mentor(sm));
        const double r_counterfactual = mdp.reward(s, mdp.mentor(s));
        state_based.add(r_mentor - r_counterfactual);
        action_based.add(r_counterfactual - mdp.reward(s, agent_actions[t]));
    }
    return {state_based.sum, action_based.sum};
}

// ---------------------------------------------------------------------------
// Exact oracle for tiny finite instances
// ---------------------------------------------------------------------------

// Action distribution of a memoryless, query-free agent: probs[a] given
// (step, state index).
using TabularPolicy = std::function<std::vector<double>(int t, int state_index)>;

// mu tables for a finite instance: value[t][s][a].
struct FiniteMu {
    std::vector<std::vector<std::vector<double>>> value;

    double min_value() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& per_t : value)
            for (const auto& per_s : per_t)
                for (double v : per_s) m = std::min(m, v);
        return m;
    }
};

struct ExactRegret {
    double mdp = 0.0;
    double plus = 0.0;
    double mul = 0.0;
    double sa = 0.0;
    double mu_min = 1.0;
};

// Protocol adapter for a tabular policy (never queries).
class TabularAlgorithm : public Algorithm {
public:
    TabularAlgorithm(std::shared_ptr<const FiniteMDP> mdp, TabularPolicy policy)
        : mdp_(std::move(mdp)), policy_(std::move(policy)) {}

    bool query(const History&, const State&, Rng&) override { return false; }

    ActionId act(const History& history, const State& s, std::optional<ActionId>,
                 Rng& rng) override {
        const std::vector<double> probs = policy_(history.length(), mdp_->index_of(s));
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t a = 0; a < probs.size(); ++a) {
            acc += probs[a];
            if (u < acc) return static_cast<ActionId>(a);
        }
        return static_cast<ActionId>(probs.size()) - 1;
    }

    bool query_agnostic() const override { return true; }

private:
    std::shared_ptr<const FiniteMDP> mdp_;
    TabularPolicy policy_;
};

namespace detail {

struct OracleAccum {
    double agent_reward = 0.0;
    double plus_gap = 0.0;
    double mul_gap = 0.0;
    double mistakes = 0.0;
    std::vector<std::vector<double>> occupancy;  // [t][s]
};

inline void oracle_walk(const FiniteMDP& mdp, const TabularPolicy& policy, const FiniteMu* mu,
                        int T, int t, int s, double prob, double reward_acc, double plus_acc,
                        double mul_acc, double mistakes_acc, OracleAccum& out) {
    if (t == T) {
        out.agent_reward += prob * reward_acc;
        out.plus_gap += prob * plus_acc;
        out.mul_gap += prob * mul_acc;
        out.mistakes += prob * mistakes_acc;
        return;
    }
    out.occupancy[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] += prob;
    const ActionId am = mdp.mentor[static_cast<std::size_t>(s)];
    const std::vector<double> probs = policy(t, s);
    for (int a = 0; a < mdp.num_actions; ++a) {
        const double pa = probs[static_cast<std::size_t>(a)];
        if (pa <= 0.0) continue;
        const double r = mdp.reward[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
        double dplus = 0.0, dmul = 0.0;
        if (mu) {
            const auto& row = mu->value[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
            dplus = row[static_cast<std::size_t>(am)] - row[static_cast<std::size_t>(a)];
            dmul = std::log(row[static_cast<std::size_t>(am)]) -
                   std::log(row[static_cast<std::size_t>(a)]);
        }
        const double dmiss = binary_loss(a, am);
        const auto& trans = mdp.trans[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
        if (t + 1 == T) {
            // No transition branching needed after the final action.
            out.agent_reward += prob * pa * (reward_acc + r);
            out.plus_gap += prob * pa * (plus_acc + dplus);
            out.mul_gap += prob * pa * (mul_acc + dmul);
            out.mistakes += prob * pa * (mistakes_acc + dmiss);
            continue;
        }
        for (int s2 = 0; s2 < mdp.size(); ++s2) {
            const double pt = trans[static_cast<std::size_t>(s2)];
            if (pt <= 0.0) continue;
            oracle_walk(mdp, policy, mu, T, t + 1, s2, prob * pa * pt, reward_acc + r,
                        plus_acc + dplus, mul_acc + dmul, mistakes_acc + dmiss, out);
        }
    }
}

inline double oracle_mentor_reward(const FiniteMDP& mdp, int T, int t, int s, double reward_acc) {
    const ActionId am = mdp.mentor[static_cast<std::size_t>(s)];
    const double r = mdp.reward[static_cast<std::size_t>(s)][static_cast<std::size_t>(am)];
    if (t + 1 == T) return reward_acc + r;
    double total = 0.0;
    const auto& trans = mdp.trans[static_cast<std::size_t>(s)][static_cast<std::size_t>(am)];
    for (int s2 = 0; s2 < mdp.size(); ++s2) {
        const double pt = trans[static_cast<std::size_t>(s2)];
        if (pt <= 0.0) continue;
        total += pt * oracle_mentor_reward(mdp, T, t + 1, s2, reward_acc + r);
    }
    return total;
}

}  // namespace detail

// Exact expectations of all regret kinds by enumerating every branch of the
// trajectory tree with its probability. Deliberately brute force so it stays
// independent of the Monte Carlo estimators it validates.
inline ExactRegret exact_regret_oracle(const FiniteMDP& mdp, const TabularPolicy& policy, int T,
                                       const std::optional<FiniteMu>& mu = std::nullopt,
                                       const std::vector<std::vector<ActionId>>* comparators =
                                           nullptr) {
    if (mdp.size() > 4 || mdp.num_actions > 3 || T > 6 || T < 1) {
        throw std::length_error("exact_regret_oracle: limits are |S| <= 4, |A| <= 3, 1 <= T <= 6");
    }
    if (mu) {
        if (static_cast<int>(mu->value.size()) < T) {
            throw std::invalid_argument("exact_regret_oracle: mu horizon shorter than T");
        }
        if (mu->min_value() <= 0.0) {
            throw std::domain_error("exact_regret_oracle: mu must be positive everywhere");
        }
    }

    detail::OracleAccum acc;
    acc.occupancy.assign(static_cast<std::size_t>(T),
                         std::vector<double>(static_cast<std::size_t>(mdp.size()), 0.0));
    double mentor_reward = 0.0;
    for (int s = 0; s < mdp.size(); ++s) {
        const double p0 = mdp.init_probs[static_cast<std::size_t>(s)];
        if (p0 <= 0.0) continue;
        detail::oracle_walk(mdp, policy, mu ? &*mu : nullptr, T, 0, s, p0, 0.0, 0.0, 0.0, 0.0,
                            acc);
        mentor_reward += p0 * detail::oracle_mentor_reward(mdp, T, 0, s, 0.0);
    }

    ExactRegret result;
    result.mdp = mentor_reward - acc.agent_reward;
    result.plus = acc.plus_gap;
    result.mul = acc.mul_gap;
    result.mu_min = mu ? mu->min_value() : 1.0;

    // R_SA comparator term from occupancies; default comparator set is every
    // deterministic state-to-action map.
    std::vector<std::vector<ActionId>> all_maps;
    if (!comparators) {
        const int count = static_cast<int>(std::pow(mdp.num_actions, mdp.size()));
        for (int code = 0; code < count; ++code) {
            std::vector<ActionId> pi(static_cast<std::size_t>(mdp.size()));
            int c = code;
            for (int s = 0; s < mdp.size(); ++s) {
                pi[static_cast<std::size_t>(s)] = c % mdp.num_actions;
                c /= mdp.num_actions;
            }
            all_maps.push_back(std::move(pi));
        }
        comparators = &all_maps;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pi : *comparators) {
        double loss = 0.0;
        for (int t = 0; t < T; ++t) {
            for (int s = 0; s < mdp.size(); ++s) {
                loss += acc.occupancy[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] *
                        binary_loss(pi[static_cast<std::size_t>(s)],
                                    mdp.mentor[static_cast<std::size_t>(s)]);
            }
        }
        best = std::min(best, loss);
    }
    result.sa = acc.mistakes - best;
    return result;
}

// ---------------------------------------------------------------------------
// Slope fitting
// ---------------------------------------------------------------------------

inline SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].first <= points[i - 1].first) {
            throw std::invalid_argument("fit_loglog_slope: T values must be strictly increasing");
        }
    }
    SlopeFit fit;
    for (const auto& [T, v] : points) {
        if (v <= 0.0) {
            ++fit.dropped;
            continue;
        }
        fit.points.emplace_back(std::log(T), std::log(v));
    }
    if (fit.points.size() < 3) {
        throw std::invalid_argument("fit_loglog_slope: need at least 3 positive points, have " +
                                    std::to_string(fit.points.size()));
    }
    const double n = static_cast<double>(fit.points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : fit.points) {
        sx += x;
        sy += y;
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : fit.points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

// ---------------------------------------------------------------------------
// Geometric utilities
// ---------------------------------------------------------------------------

struct PackingResult {
    int count = 0;
    bool exact = true;  // false: greedy lower bound on large inputs
};

namespace detail {

inline void packing_dfs(const std::vector<State>& pts, double delta, std::size_t next,
                        std::vector<std::size_t>& chosen, int& best) {
    if (static_cast<int>(chosen.size()) + static_cast<int>(pts.size() - next) <= best) return;
    if (next == pts.size()) {
        best = std::max(best, static_cast<int>(chosen.size()));
        return;
    }
    bool compatible = true;
    for (std::size_t j : chosen) {
        if (distance(pts[next], pts[j]) <= delta) {
            compatible = false;
            break;
        }
    }
    if (compatible) {
        chosen.push_back(next);
        packing_dfs(pts, delta, next + 1, chosen, best);
        chosen.pop_back();
    }
    packing_dfs(pts, delta, next + 1, chosen, best);
}

}  // namespace detail

// Maximum number of candidate points with pairwise distance strictly greater
// than delta. Exact search up to 20 points, greedy lower bound beyond.
inline PackingResult packing_number_bruteforce(const std::vector<State>& points, double delta) {
    PackingResult result;
    if (points.empty()) return result;
    if (points.size() <= 20) {
        std::vector<std::size_t> chosen;
        int best = 0;
        detail::packing_dfs(points, delta, 0, chosen, best);
        result.count = best;
        result.exact = true;
        return result;
    }
    std::vector<State> kept;
    for (const State& p : points) {
        bool far = true;
        for (const State& q : kept) {
            if (distance(p, q) <= delta) {
                far = false;
                break;
            }
        }
        if (far) kept.push_back(p);
    }
    result.count = static_cast<int>(kept.size());
    result.exact = false;
    return result;
}

inline double unit_ball_volume(int n) {
    return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

// 3^n vol(K) / (delta^n vol(B)): the packing-number ceiling for a region of
// volume vol_K in R^n.
inline double packing_upper_bound(int n, double vol_K, double delta) {
    return std::pow(3.0, n) * vol_K / (std::pow(delta, n) * unit_ball_volume(n));
}

struct JungReport {
    double meb_radius = 0.0;
    double diam = 0.0;
    double bound = 0.0;
    bool pass = true;
};

namespace detail {

struct Ball {
    std::vector<double> center;
    double r2 = -1.0;  // negative: empty ball

    bool contains(const State& p, double tol) const {
        if (r2 < 0.0) return false;
        double d2 = 0.0;
        for (std::size_t j = 0; j < center.size(); ++j) {
            const double d = p[static_cast<int>(j)] - center[j];
            d2 += d * d;
        }
        return d2 <= r2 + tol;
    }
};

// Smallest ball with the support points on its boundary: center solves the
// equidistance system in the affine hull of the support.
inline Ball ball_from_support(const std::vector<const State*>& sup, int n) {
    Ball b;
    if (sup.empty()) return b;
    const State& p0 = *sup[0];
    const int m = static_cast<int>(sup.size()) - 1;
    if (m == 0) {
        b.center.assign(static_cast<std::size_t>(n), 0.0);
        for (int j = 0; j < n; ++j) b.center[static_cast<std::size_t>(j)] = p0[j];
        b.r2 = 0.0;
        return b;
    }
    // A lambda = rhs with A_ij = 2 v_i . v_j, rhs_i = v_i . v_i.
    std::vector<std::vector<double>> A(static_cast<std::size_t>(m),
                                       std::vector<double>(static_cast<std::size_t>(m + 1), 0.0));
    std::vector<std::vector<double>> v(static_cast<std::size_t>(m),
                                       std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            v[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = (*sup[static_cast<std::size_t>(i + 1)])[j] - p0[j];
        }
    }
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            double dot = 0.0;
            for (int d = 0; d < n; ++d) {
                dot += v[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] *
                       v[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)];
            }
            A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 2.0 * dot;
        }
        A[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)] =
            A[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] / 2.0;
    }
    // Gaussian elimination with partial pivoting; singular systems (affinely
    // dependent support) yield an empty ball, which Welzl then avoids.
    for (int col = 0; col < m; ++col) {
        int pivot = col;
        for (int row = col + 1; row < m; ++row) {
            if (std::abs(A[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)]) >
                std::abs(A[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)])) {
                pivot = row;
            }
        }
        if (std::abs(A[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]) < 1e-12) {
            return b;
        }
        std::swap(A[static_cast<std::size_t>(col)], A[static_cast<std::size_t>(pivot)]);
        for (int row = col + 1; row < m; ++row) {
            const double f = A[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] /
                             A[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
            for (int c2 = col; c2 <= m; ++c2) {
                A[static_cast<std::size_t>(row)][static_cast<std::size_t>(c2)] -=
                    f * A[static_cast<std::size_t>(col)][static_cast<std::size_t>(c2)];
            }
        }
    }
    std::vector<double> lambda(static_cast<std::size_t>(m), 0.0);
    for (int row = m - 1; row >= 0; --row) {
        double rhs = A[static_cast<std::size_t>(row)][static_cast<std::size_t>(m)];
        for (int c2 = row + 1; c2 < m; ++c2) {
            rhs -= A[static_cast<std::size_t>(row)][static_cast<std::size_t>(c2)] *
                   lambda[static_cast<std::size_t>(c2)];
        }
        lambda[static_cast<std::size_t>(row)] =
            rhs / A[static_cast<std::size_t>(row)][static_cast<std::size_t>(row)];
    }
    b.center.assign(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) b.center[static_cast<std::size_t>(j)] = p0[j];
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            b.center[static_cast<std::size_t>(j)] +=
                lambda[static_cast<std::size_t>(i)] *
                v[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    b.r2 = 0.0;
    for (int j = 0; j < n; ++j) {
        const double d = p0[j] - b.center[static_cast<std::size_t>(j)];
        b.r2 += d * d;
    }
    return b;
}

inline Ball welzl(std::vector<const State*>& pts, std::size_t count,
                  std::vector<const State*>& support, int n) {
    if (count == 0 || support.size() == static_cast<std::size_t>(n) + 1) {
        return ball_from_support(support, n);
    }
    const State* p = pts[count - 1];
    Ball b = welzl(pts, count - 1, support, n);
    if (b.contains(*p, 1e-10)) return b;
    support.push_back(p);
    b = welzl(pts, count - 1, support, n);
    support.pop_back();
    return b;
}

}  // namespace detail

// Verifies the minimum-enclosing-ball radius against the diameter bound
// diam * sqrt(n / (2(n+1))).
inline JungReport jung_radius_check(const std::vector<State>& points) {
    if (points.empty()) throw std::invalid_argument("jung_radius_check: empty point set");
    const int n = points.front().dim();
    if (n > 3 || points.size() > 50) {
        throw std::length_error("jung_radius_check: limits are n <= 3 and 50 points");
    }
    std::vector<const State*> ptrs;
    ptrs.reserve(points.size());
    for (const State& p : points) ptrs.push_back(&p);
    // Deterministic shuffle for Welzl's expected-linear behavior.
    Rng rng(0x6a756e67ULL);
    for (std::size_t i = ptrs.size(); i > 1; --i) {
        std::swap(ptrs[i - 1], ptrs[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
    }
    std::vector<const State*> support;
    detail::Ball ball = detail::welzl(ptrs, ptrs.size(), support, n);

    JungReport report;
    report.meb_radius = ball.r2 > 0.0 ? std::sqrt(ball.r2) : 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            report.diam = std::max(report.diam, distance(points[i], points[j]));
        }
    }
    report.bound = report.diam * std::sqrt(n / (2.0 * (n + 1.0)));
    report.pass = report.meb_radius <= report.bound + 1e-9;
    return report;
}

}  // namespace mentorcore
