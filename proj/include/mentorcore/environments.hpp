#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mentorcore/core.hpp"

namespace mentorcore {

// A measurable test set for exact kernel evaluation. Finite instances use
// index sets; box environments use axis-aligned boxes over live states.
struct StateSet {
    enum class Kind { All, Empty, Indices, Box };

    Kind kind = Kind::All;
    std::vector<int> indices;
    std::vector<double> lo, hi;

    static StateSet all() { return StateSet{}; }
    static StateSet empty() {
        StateSet s;
        s.kind = Kind::Empty;
        return s;
    }
    static StateSet of_indices(std::vector<int> idx) {
        StateSet s;
        s.kind = Kind::Indices;
        s.indices = std::move(idx);
        return s;
    }
    static StateSet box(std::vector<double> lo, std::vector<double> hi) {
        StateSet s;
        s.kind = Kind::Box;
        s.lo = std::move(lo);
        s.hi = std::move(hi);
        return s;
    }
};

// An MDP the adversary commits to upfront: transition sampler, initial
// distribution, mentor policy, reward, plus exact evaluators where the
// instance supports them.
struct MDPInstance {
    int n = 1;
    int num_actions = 2;
    double sigma = 0.0;
    double L = 1.0;

    std::function<State(Rng&)> init;
    std::function<State(const State&, ActionId, Rng&)> step;
    std::function<ActionId(const State&)> mentor;
    std::function<double(const State&, ActionId)> reward;

    // P(s, a, X): exact probability mass assigned to X. Null when the
    // instance has no exact evaluator.
    std::function<double(const State&, ActionId, const StateSet&)> kernel_mass;

    // TV distance between P(s1, a1) and P(s2, a2), exact.
    std::function<double(const State&, ActionId, const State&, ActionId)> tv_between;
};

// Per-step survival probabilities mu_t(s, a).
struct MuSequence {
    std::function<double(int t, const State&, ActionId)> value;
    int horizon = 0;     // steps covered by explicit target sets; 1 afterwards
    double mu_min = 0.0; // infimum over the declared domain, 0 when unknown
};

// mu_i(s, a) = P(s, a, X_i) for the scheduled sets, 1 afterwards.
inline MuSequence mu_from_mdp(const MDPInstance& mdp, std::vector<StateSet> target_sets) {
    if (!mdp.kernel_mass) {
        throw std::invalid_argument("mu_from_mdp: instance has no exact kernel evaluator");
    }
    MuSequence mu;
    mu.horizon = static_cast<int>(target_sets.size());
    auto sets = std::make_shared<std::vector<StateSet>>(std::move(target_sets));
    auto mass = mdp.kernel_mass;
    mu.value = [sets, mass](int t, const State& s, ActionId a) {
        if (t < 0 || t >= static_cast<int>(sets->size())) return 1.0;
        return mass(s, a, (*sets)[static_cast<std::size_t>(t)]);
    };
    return mu;
}

// s_1 ~ D1, s_{t+1} ~ P(s_t, pi^m(s_t)).
inline std::vector<State> mentor_rollout(const MDPInstance& mdp, int T, std::uint64_t seed) {
    if (T < 1) throw std::invalid_argument("mentor_rollout: T must be >= 1");
    Rng rng(seed);
    std::vector<State> states;
    states.reserve(static_cast<std::size_t>(T));
    State s = mdp.init(rng);
    states.push_back(s);
    for (int t = 1; t < T; ++t) {
        s = mdp.step(s, mdp.mentor(s), rng);
        states.push_back(s);
    }
    return states;
}

// Protocol adversary induced by an MDP: states follow the kernel driven by
// the agent's own actions; the mentor action is pi^m(s_t). An initial-state
// override supports common-random-number pairing with mentor rollouts.
class MdpAdversary : public Adversary {
public:
    explicit MdpAdversary(const MDPInstance& mdp, std::optional<State> initial_state = {})
        : mdp_(&mdp), initial_override_(std::move(initial_state)) {}

    std::pair<State, ActionId> next(const History& history, Rng& rng) override {
        State s = history.empty()
                      ? (initial_override_ ? *initial_override_ : mdp_->init(rng))
                      : mdp_->step(history.back().state, history.back().action, rng);
        ActionId am = mdp_->mentor(s);
        return {std::move(s), am};
    }

    double sigma() const override { return mdp_->sigma; }

private:
    const MDPInstance* mdp_;
    std::optional<State> initial_override_;
};

// ---------------------------------------------------------------------------
// Finite tabular MDPs (exact enumeration support)
// ---------------------------------------------------------------------------

struct FiniteMDP {
    std::vector<State> states;  // embedding in R^n
    int num_actions = 2;
    std::vector<double> init_probs;                       // [s]
    std::vector<std::vector<std::vector<double>>> trans;  // [s][a][s']
    std::vector<ActionId> mentor;                         // [s]
    std::vector<std::vector<double>> reward;              // [s][a]
    double L = 1.0;
    double sigma = 0.0;

    int size() const { return static_cast<int>(states.size()); }

    int index_of(const State& s) const {
        for (int i = 0; i < size(); ++i) {
            if (states[static_cast<std::size_t>(i)] == s) return i;
        }
        throw std::invalid_argument("FiniteMDP: unknown state");
    }

    MDPInstance to_instance() const {
        MDPInstance m;
        m.n = states.empty() ? 1 : states.front().dim();
        m.num_actions = num_actions;
        m.sigma = sigma;
        m.L = L;
        // The instance closes over a copy so it stays valid independently.
        auto self = std::make_shared<FiniteMDP>(*this);
        m.init = [self](Rng& rng) { return self->states[static_cast<std::size_t>(sample(self->init_probs, rng))]; };
        m.step = [self](const State& s, ActionId a, Rng& rng) {
            const int i = self->index_of(s);
            return self->states[static_cast<std::size_t>(
                sample(self->trans[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)], rng))];
        };
        m.mentor = [self](const State& s) { return self->mentor[static_cast<std::size_t>(self->index_of(s))]; };
        m.reward = [self](const State& s, ActionId a) {
            return self->reward[static_cast<std::size_t>(self->index_of(s))][static_cast<std::size_t>(a)];
        };
        m.kernel_mass = [self](const State& s, ActionId a, const StateSet& set) {
            const auto& row =
                self->trans[static_cast<std::size_t>(self->index_of(s))][static_cast<std::size_t>(a)];
            switch (set.kind) {
                case StateSet::Kind::All: {
                    double total = 0.0;
                    for (double p : row) total += p;
                    return total;
                }
                case StateSet::Kind::Empty:
                    return 0.0;
                case StateSet::Kind::Indices: {
                    double total = 0.0;
                    for (int j : set.indices) total += row[static_cast<std::size_t>(j)];
                    return total;
                }
                default:
                    throw std::invalid_argument("FiniteMDP: box sets unsupported");
            }
        };
        m.tv_between = [self](const State& s1, ActionId a1, const State& s2, ActionId a2) {
            const auto& p =
                self->trans[static_cast<std::size_t>(self->index_of(s1))][static_cast<std::size_t>(a1)];
            const auto& q =
                self->trans[static_cast<std::size_t>(self->index_of(s2))][static_cast<std::size_t>(a2)];
            double l1 = 0.0;
            for (std::size_t j = 0; j < p.size(); ++j) l1 += std::abs(p[j] - q[j]);
            return 0.5 * l1;
        };
        return m;
    }

private:
    static int sample(const std::vector<double>& probs, Rng& rng) {
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;
    }
};

// The three-state problem where one irreversible action leads to permanent
// reward 1 and the other to permanent reward 0. States embedded in R^1 at
// Start=0, Heaven=+1, Hell=-1; action 0 is the good action.
inline FiniteMDP heaven_hell(int T) {
    if (T < 2) throw std::invalid_argument("heaven_hell: T must be >= 2");
    FiniteMDP m;
    m.states = {State(0.0), State(1.0), State(-1.0)};  // Start, Heaven, Hell
    m.num_actions = 2;
    m.init_probs = {1.0, 0.0, 0.0};
    m.trans = {
        {{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}},  // Start: a0 -> Heaven, a1 -> Hell
        {{0.0, 1.0, 0.0}, {0.0, 1.0, 0.0}},  // Heaven absorbing
        {{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}},  // Hell absorbing
    };
    m.mentor = {0, 0, 0};
    m.reward = {{0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}};
    m.L = 1.0;  // vacuous: the mentor action is constant, unit state separation
    m.sigma = 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// Continuous cliff-line MDP
// ---------------------------------------------------------------------------

struct LocalGenReport {
    double max_ratio = 0.0;
    State witness_a, witness_b;
    double L = 0.0;
    bool pass = true;
};

// Live states are [0,1]^n plus an absorbing Dead state (all coordinates -1).
// Action 0 displaces upward in dimension 1, action 1 downward; crossing
// below coordinate 0 in dimension 1 is irreversible death. Next states are
// uniform on an axis-aligned box of side sigma^{1/n}, so live transitions
// have density at most 1/sigma against the uniform baseline. The mentor is
// a threshold rule in dimension 1; displacement magnitudes ramp down to zero
// at the threshold so that the mentor-action kernels satisfy the TV form of
// L-local generalization, certified post-hoc at construction.
struct CliffLine {
    MDPInstance instance;
    int n = 1;
    double w = 0.0;      // box side
    double delta = 0.0;  // displacement magnitude
    double theta = 0.0;  // mentor threshold in dimension 1
    double rho = 0.0;    // ramp width

    // The survival target set used for mu: the band of width w centered on
    // the threshold in dimension 1. The mentor action maximizes its mass at
    // every state, so mu gaps are nonnegative.
    StateSet interest_set() const {
        std::vector<double> lo(static_cast<std::size_t>(n), 0.0);
        std::vector<double> hi(static_cast<std::size_t>(n), 1.0);
        lo[0] = theta - w / 2.0;
        hi[0] = theta + w / 2.0;
        return StateSet::box(std::move(lo), std::move(hi));
    }

    static bool is_dead(const State& s) { return s[0] < 0.0; }
    State dead_state() const { return State(std::vector<double>(static_cast<std::size_t>(n), -1.0)); }
};

namespace detail {

struct CliffParams {
    int n;
    double w, delta, theta, rho;
};

inline double cliff_ramp(const CliffParams& p, double x1) {
    return std::min(1.0, std::abs(x1 - p.theta) / p.rho);
}

// Center of the next-state box in dimension 1.
inline double cliff_center1(const CliffParams& p, double x1, ActionId a) {
    const double shift = p.delta * cliff_ramp(p, x1);
    if (a == 0) {  // up, away from the cliff
        return std::clamp(x1 + shift, p.w / 2.0, 1.0 - p.w / 2.0);
    }
    // down: clamped above only; below-zero spill is the cliff
    return std::min(x1 - shift, 1.0 - p.w / 2.0);
}

inline double cliff_center_other(const CliffParams& p, double xj) {
    return std::clamp(xj, p.w / 2.0, 1.0 - p.w / 2.0);
}

inline double interval_overlap(double a_lo, double a_hi, double b_lo, double b_hi) {
    return std::max(0.0, std::min(a_hi, b_hi) - std::max(a_lo, b_lo));
}

}  // namespace detail

// Samples state pairs and reports the worst observed ratio between the
// mentor-action kernel TV distance and the state distance.
inline LocalGenReport check_local_generalization(const MDPInstance& mdp, double L, int num_pairs,
                                                 std::uint64_t seed) {
    if (!mdp.tv_between) {
        throw std::invalid_argument("check_local_generalization: no exact TV evaluator");
    }
    Rng rng(seed);
    LocalGenReport report;
    report.L = L;
    for (int i = 0; i < num_pairs; ++i) {
        std::vector<double> a(static_cast<std::size_t>(mdp.n)), b(static_cast<std::size_t>(mdp.n));
        for (int j = 0; j < mdp.n; ++j) {
            a[static_cast<std::size_t>(j)] = rng.uniform();
            b[static_cast<std::size_t>(j)] = rng.uniform();
        }
        State sa(std::move(a)), sb(std::move(b));
        const double dist = distance(sa, sb);
        if (dist == 0.0) continue;  // 0/0 pairs excluded by convention
        const double tv = mdp.tv_between(sa, mdp.mentor(sa), sa, mdp.mentor(sb));
        const double ratio = tv / dist;
        if (ratio > report.max_ratio) {
            report.max_ratio = ratio;
            report.witness_a = sa;
            report.witness_b = sb;
        }
    }
    report.pass = report.max_ratio <= L + 1e-9;
    return report;
}

// Same check for a mu sequence: |mu_t(s, pi^m(s)) - mu_t(s, pi^m(s'))| vs
// L * ||s - s'|| over sampled pairs and all covered steps.
inline LocalGenReport check_local_generalization(const MuSequence& mu,
                                                 const std::function<ActionId(const State&)>& mentor,
                                                 int n, double L, int num_pairs,
                                                 std::uint64_t seed) {
    Rng rng(seed);
    LocalGenReport report;
    report.L = L;
    const int steps = std::max(1, mu.horizon);
    for (int i = 0; i < num_pairs; ++i) {
        std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            a[static_cast<std::size_t>(j)] = rng.uniform();
            b[static_cast<std::size_t>(j)] = rng.uniform();
        }
        State sa(std::move(a)), sb(std::move(b));
        const double dist = distance(sa, sb);
        if (dist == 0.0) continue;
        const int t = rng.uniform_int(steps);
        const double gap = std::abs(mu.value(t, sa, mentor(sa)) - mu.value(t, sa, mentor(sb)));
        const double ratio = gap / dist;
        if (ratio > report.max_ratio) {
            report.max_ratio = ratio;
            report.witness_a = sa;
            report.witness_b = sb;
        }
    }
    report.pass = report.max_ratio <= L + 1e-9;
    return report;
}

inline CliffLine cliff_line(int n, double L_target, double sigma, int T) {
    if (n < 1 || sigma <= 0.0 || sigma > 1.0 || L_target <= 0.0 || T < 1) {
        throw std::invalid_argument("cliff_line: invalid parameters");
    }
    CliffLine env;
    env.n = n;
    env.w = std::pow(sigma, 1.0 / n);
    env.delta = 0.05;
    env.theta = 0.5;
    env.rho = 2.0 * env.delta / (env.w * L_target);
    if (env.w / 2.0 + env.delta > env.theta) {
        throw std::runtime_error("cliff_line: infeasible, w/2 + delta > theta (sigma too large)");
    }
    if (env.rho > std::min(env.theta, 1.0 - env.theta)) {
        throw std::runtime_error(
            "cliff_line: infeasible, ramp width exceeds threshold margin (L_target too small; "
            "need L_target >= " +
            std::to_string(2.0 * env.delta / (env.w * std::min(env.theta, 1.0 - env.theta))) + ")");
    }

    const detail::CliffParams p{n, env.w, env.delta, env.theta, env.rho};
    const State dead = env.dead_state();

    MDPInstance m;
    m.n = n;
    m.num_actions = 2;
    m.sigma = sigma;
    m.L = L_target;
    m.init = [n](Rng& rng) {
        std::vector<double> c(static_cast<std::size_t>(n));
        for (double& x : c) x = rng.uniform();
        return State(std::move(c));
    };
    m.step = [p, dead](const State& s, ActionId a, Rng& rng) {
        if (CliffLine::is_dead(s)) return dead;
        std::vector<double> next(static_cast<std::size_t>(p.n));
        const double c1 = detail::cliff_center1(p, s[0], a);
        next[0] = rng.uniform(c1 - p.w / 2.0, c1 + p.w / 2.0);
        if (next[0] < 0.0) return dead;
        for (int j = 1; j < p.n; ++j) {
            const double cj = detail::cliff_center_other(p, s[j]);
            next[static_cast<std::size_t>(j)] = rng.uniform(cj - p.w / 2.0, cj + p.w / 2.0);
        }
        return State(std::move(next));
    };
    m.mentor = [p](const State& s) {
        if (CliffLine::is_dead(s)) return 0;
        return s[0] >= p.theta ? 1 : 0;
    };
    m.reward = [](const State& s, ActionId) {
        if (CliffLine::is_dead(s)) return 0.0;
        return std::clamp(s[0], 0.0, 1.0);
    };
    m.kernel_mass = [p](const State& s, ActionId a, const StateSet& set) {
        switch (set.kind) {
            case StateSet::Kind::All:
                return 1.0;
            case StateSet::Kind::Empty:
                return 0.0;
            case StateSet::Kind::Box:
                break;
            default:
                throw std::invalid_argument("cliff_line: index sets unsupported");
        }
        if (CliffLine::is_dead(s)) return 0.0;  // next state is Dead, outside any live box
        double mass = 1.0;
        const double c1 = detail::cliff_center1(p, s[0], a);
        mass *= detail::interval_overlap(c1 - p.w / 2.0, c1 + p.w / 2.0,
                                         std::max(set.lo[0], 0.0), set.hi[0]) /
                p.w;
        for (int j = 1; j < p.n; ++j) {
            const double cj = detail::cliff_center_other(p, s[j]);
            mass *= detail::interval_overlap(cj - p.w / 2.0, cj + p.w / 2.0,
                                             set.lo[static_cast<std::size_t>(j)],
                                             set.hi[static_cast<std::size_t>(j)]) /
                    p.w;
        }
        return mass;
    };
    m.tv_between = [p](const State& s1, ActionId a1, const State& s2, ActionId a2) {
        const bool dead1 = CliffLine::is_dead(s1);
        const bool dead2 = CliffLine::is_dead(s2);
        if (dead1 || dead2) return (dead1 == dead2) ? 0.0 : 1.0;
        // Both kernels are uniform boxes of side w (plus a dead atom from
        // the dimension-1 spill below zero). TV = 0.5 * (|dead1 - dead2| +
        // L1 distance of the live densities), with the live overlap a
        // product of per-dimension interval overlaps clipped at zero.
        const double c1 = detail::cliff_center1(p, s1[0], a1);
        const double c2 = detail::cliff_center1(p, s2[0], a2);
        double live1 = detail::interval_overlap(c1 - p.w / 2.0, c1 + p.w / 2.0, 0.0, 1.0) / p.w;
        double live2 = detail::interval_overlap(c2 - p.w / 2.0, c2 + p.w / 2.0, 0.0, 1.0) / p.w;
        double overlap = detail::interval_overlap(std::max(c1 - p.w / 2.0, 0.0), c1 + p.w / 2.0,
                                                  std::max(c2 - p.w / 2.0, 0.0), c2 + p.w / 2.0) /
                         p.w;
        for (int j = 1; j < p.n; ++j) {
            const double d1 = detail::cliff_center_other(p, s1[j]);
            const double d2 = detail::cliff_center_other(p, s2[j]);
            overlap *= detail::interval_overlap(d1 - p.w / 2.0, d1 + p.w / 2.0, d2 - p.w / 2.0,
                                                d2 + p.w / 2.0) /
                       p.w;
        }
        const double dead_mass1 = 1.0 - live1;
        const double dead_mass2 = 1.0 - live2;
        return 0.5 * (std::abs(dead_mass1 - dead_mass2) + (live1 - overlap) + (live2 - overlap));
    };
    env.instance = std::move(m);

    // Post-hoc certification: random pairs plus a deterministic sweep of
    // near-threshold straddling pairs, which is where the ratio peaks.
    LocalGenReport cert = check_local_generalization(env.instance, L_target, 2000, 0xC11FF);
    double worst = cert.max_ratio;
    for (int i = 1; i <= 200; ++i) {
        const double eta = env.rho * i / 200.0;
        const State below(std::vector<double>(static_cast<std::size_t>(n), env.theta - eta));
        const State above(std::vector<double>(static_cast<std::size_t>(n), env.theta + eta));
        const double tv = env.instance.tv_between(below, env.instance.mentor(below), below,
                                                  env.instance.mentor(above));
        worst = std::max(worst, tv / distance(below, above));
    }
    if (worst > L_target + 1e-9) {
        throw std::runtime_error("cliff_line: certification failed, TV ratio " +
                                 std::to_string(worst) + " exceeds L_target " +
                                 std::to_string(L_target));
    }
    return env;
}

// ---------------------------------------------------------------------------
// Smooth sequence adversary
// ---------------------------------------------------------------------------

// Draws states uniformly from a scheduled region of uniform-baseline measure
// at least sigma, pairing them with a fixed mentor policy. The region may
// adapt to history; uniformity on a measure->=sigma region keeps the density
// at most 1/sigma.
class SmoothSequenceAdversary : public Adversary {
public:
    using Plan = std::function<StateSet(int t, const History&)>;

    SmoothSequenceAdversary(double sigma, int dim, Plan plan,
                            std::function<ActionId(const State&)> mentor)
        : sigma_(sigma), dim_(dim), plan_(std::move(plan)), mentor_(std::move(mentor)) {
        if (sigma <= 0.0 || sigma > 1.0) {
            throw std::invalid_argument("smooth_sequence_adversary: sigma must be in (0, 1]");
        }
    }

    // Convenience: a fixed cycle of regions.
    SmoothSequenceAdversary(double sigma, int dim, std::vector<StateSet> schedule,
                            std::function<ActionId(const State&)> mentor)
        : SmoothSequenceAdversary(
              sigma, dim,
              [boxes = std::make_shared<std::vector<StateSet>>(std::move(schedule))](
                  int t, const History&) { return (*boxes)[static_cast<std::size_t>(t) % boxes->size()]; },
              std::move(mentor)) {}

    std::pair<State, ActionId> next(const History& history, Rng& rng) override {
        StateSet region = plan_(history.length(), history);
        if (region.kind == StateSet::Kind::All) {
            std::vector<double> lo(static_cast<std::size_t>(dim_), 0.0);
            std::vector<double> hi(static_cast<std::size_t>(dim_), 1.0);
            region = StateSet::box(std::move(lo), std::move(hi));
        }
        if (region.kind != StateSet::Kind::Box) {
            throw std::invalid_argument("smooth_sequence_adversary: plan must yield boxes");
        }
        double measure = 1.0;
        for (int j = 0; j < dim_; ++j) {
            measure *= std::max(0.0, std::min(region.hi[static_cast<std::size_t>(j)], 1.0) -
                                         std::max(region.lo[static_cast<std::size_t>(j)], 0.0));
        }
        if (measure + 1e-12 < sigma_) {
            throw std::runtime_error("smooth_sequence_adversary: region measure " +
                                     std::to_string(measure) + " below sigma " +
                                     std::to_string(sigma_));
        }
        std::vector<double> c(static_cast<std::size_t>(dim_));
        for (int j = 0; j < dim_; ++j) {
            c[static_cast<std::size_t>(j)] = rng.uniform(std::max(region.lo[static_cast<std::size_t>(j)], 0.0),
                                                         std::min(region.hi[static_cast<std::size_t>(j)], 1.0));
        }
        State s(std::move(c));
        ActionId am = mentor_(s);
        return {std::move(s), am};
    }

    double sigma() const override { return sigma_; }

private:
    double sigma_;
    int dim_;
    Plan plan_;
    std::function<ActionId(const State&)> mentor_;
};

inline std::unique_ptr<SmoothSequenceAdversary> smooth_sequence_adversary(
    double sigma, int dim, std::vector<StateSet> schedule,
    std::function<ActionId(const State&)> mentor) {
    return std::make_unique<SmoothSequenceAdversary>(sigma, dim, std::move(schedule),
                                                     std::move(mentor));
}

}  // namespace mentorcore
