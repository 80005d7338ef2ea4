#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mentorcore/core.hpp"
#include "mentorcore/environments.hpp"
#include "mentorcore/experts.hpp"
#include "mentorcore/metrics.hpp"
#include "mentorcore/parallel.hpp"
#include "mentorcore/reduction_budget.hpp"
#include "mentorcore/reduction_safe.hpp"

namespace mentorcore {

struct ConfigError : std::runtime_error {
    std::string path;
    ConfigError(std::string field_path, const std::string& what)
        : std::runtime_error("config error at " + field_path + ": " + what),
          path(std::move(field_path)) {}
};

struct EnvironmentSpec {
    std::string name;
    int n = 1;
    double sigma = 0.5;
    double L = 2.0;
};

// Parameter rules are absolute numbers, "default", or "T^p" exponent rules.
struct StackSpec {
    std::string name;
    std::string k_rule = "default";
    std::string epsilon_rule = "default";
};

struct ExperimentConfig {
    int schema_version = 1;
    EnvironmentSpec environment;
    StackSpec stack;
    std::vector<int> T_list;
    int trials = 200;
    std::uint64_t seed = 1;
    std::vector<RegretKind> metrics;
    std::map<std::string, double> ceilings;  // metric name -> max fitted slope
    std::string output = "results.csv";
    bool timing = false;  // true: measure wall_ms (breaks byte-determinism)
};

struct ResultRow {
    int T = 0;
    std::string metric;
    double estimate = 0.0;
    double ci95 = 0.0;
    int trials = 0;
    double query_mean = 0.0;
    double diam_mean = 0.0;
    double wall_ms = 0.0;
};

// ---------------------------------------------------------------------------
// Baseline stacks
// ---------------------------------------------------------------------------

// Queries every step and plays the revealed mentor action.
class MentorCopy : public Algorithm {
public:
    bool query(const History&, const State&, Rng&) override { return true; }
    ActionId act(const History&, const State&, std::optional<ActionId> feedback, Rng&) override {
        if (!feedback) throw std::runtime_error("mentor_copy: feedback missing on queried step");
        return *feedback;
    }
    bool full_feedback() const override { return true; }
};

// Mentor-free uniform-random baseline.
class RandomAction : public Algorithm {
public:
    explicit RandomAction(int num_actions) : num_actions_(num_actions) {}
    bool query(const History&, const State&, Rng&) override { return false; }
    ActionId act(const History&, const State&, std::optional<ActionId>, Rng& rng) override {
        return rng.uniform_int(num_actions_);
    }
    bool query_agnostic() const override { return true; }

private:
    int num_actions_;
};

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const std::string& key,
                                           const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + "." + key, "missing field");
    return j.at(key);
}

inline RegretKind parse_metric(const std::string& name, const std::string& path) {
    if (name == "SA") return RegretKind::SA;
    if (name == "PLUS") return RegretKind::PLUS;
    if (name == "MUL") return RegretKind::MUL;
    if (name == "MDP") return RegretKind::MDP;
    if (name == "QUERIES") return RegretKind::QUERIES;
    throw ConfigError(path, "unknown metric '" + name + "'");
}

// "default" -> fallback; "T^p" -> T to the p; number -> itself.
inline double resolve_rule(const std::string& rule, int T, double fallback,
                           const std::string& path) {
    if (rule == "default") return fallback;
    if (rule.rfind("T^", 0) == 0) {
        try {
            return std::pow(static_cast<double>(T), std::stod(rule.substr(2)));
        } catch (const std::exception&) {
            throw ConfigError(path, "bad exponent in rule '" + rule + "'");
        }
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(rule, &used);
        if (used != rule.size()) throw std::invalid_argument(rule);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(path, "unparseable rule '" + rule + "'");
    }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.schema_version = detail::require_field(j, "schema_version", "$").get<int>();
    if (cfg.schema_version != 1) {
        throw ConfigError("$.schema_version", "unsupported version " +
                                                  std::to_string(cfg.schema_version));
    }
    const auto& env = detail::require_field(j, "environment", "$");
    cfg.environment.name = detail::require_field(env, "name", "$.environment").get<std::string>();
    cfg.environment.n = env.value("n", 1);
    cfg.environment.sigma = env.value("sigma", 0.5);
    cfg.environment.L = env.value("L", 2.0);

    const auto& stack = detail::require_field(j, "stack", "$");
    cfg.stack.name = detail::require_field(stack, "name", "$.stack").get<std::string>();
    if (stack.contains("k")) {
        cfg.stack.k_rule = stack.at("k").is_string() ? stack.at("k").get<std::string>()
                                                     : stack.at("k").dump();
    }
    if (stack.contains("epsilon")) {
        cfg.stack.epsilon_rule = stack.at("epsilon").is_string()
                                     ? stack.at("epsilon").get<std::string>()
                                     : stack.at("epsilon").dump();
    }

    cfg.T_list = detail::require_field(j, "T_list", "$").get<std::vector<int>>();
    for (std::size_t i = 0; i < cfg.T_list.size(); ++i) {
        if (cfg.T_list[i] < 1 || (i > 0 && cfg.T_list[i] <= cfg.T_list[i - 1])) {
            throw ConfigError("$.T_list", "horizons must be positive and strictly increasing");
        }
    }
    if (cfg.T_list.empty()) throw ConfigError("$.T_list", "empty horizon list");

    cfg.trials = j.value("trials", 200);
    if (cfg.trials < 1) throw ConfigError("$.trials", "must be >= 1");
    cfg.seed = j.value("seed", std::uint64_t{1});

    for (const auto& m : detail::require_field(j, "metrics", "$")) {
        cfg.metrics.push_back(detail::parse_metric(m.get<std::string>(), "$.metrics"));
    }
    if (cfg.metrics.empty()) throw ConfigError("$.metrics", "empty metric list");

    if (j.contains("ceilings")) {
        for (const auto& [key, value] : j.at("ceilings").items()) {
            detail::parse_metric(key, "$.ceilings");  // validates the name
            cfg.ceilings[key] = value.get<double>();
        }
    }
    cfg.output = j.value("output", std::string("results.csv"));
    cfg.timing = j.value("timing", false);
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("$", "cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

namespace detail {

struct ResolvedEnvironment {
    MDPInstance instance;
    PolicyClass cls;
    std::optional<MuSequence> mu;
    int n = 1;
};

inline ResolvedEnvironment resolve_environment(const ExperimentConfig& cfg) {
    ResolvedEnvironment env;
    const int T_max = cfg.T_list.back();
    if (cfg.environment.name == "heaven_hell") {
        env.instance = heaven_hell(std::max(2, T_max)).to_instance();
        env.cls = PolicyClass::explicit_finite({constant_policy(0), constant_policy(1)}, 2, 1);
        env.n = 1;
        return env;
    }
    if (cfg.environment.name == "cliff_line") {
        CliffLine cliff =
            cliff_line(cfg.environment.n, cfg.environment.L, cfg.environment.sigma, T_max);
        env.mu = mu_from_mdp(cliff.instance,
                             std::vector<StateSet>(static_cast<std::size_t>(T_max),
                                                   cliff.interest_set()));
        env.instance = std::move(cliff.instance);
        env.cls = PolicyClass::thresholds_1d(cfg.environment.n);
        env.n = cfg.environment.n;
        return env;
    }
    throw ConfigError("$.environment.name", "unknown environment '" + cfg.environment.name + "'");
}

inline AlgFactory make_stack(const ExperimentConfig& cfg, const ResolvedEnvironment& env, int T) {
    const std::string& name = cfg.stack.name;
    if (name == "mentor_copy") {
        return [] { return std::make_unique<MentorCopy>(); };
    }
    if (name == "random_action") {
        const int a = env.instance.num_actions;
        return [a] { return std::make_unique<RandomAction>(a); };
    }
    if (name == "full_stack") {
        auto [k_default, eps_default] = default_params(T, env.n);
        const double k = resolve_rule(cfg.stack.k_rule, T, k_default, "$.stack.k");
        const double eps =
            resolve_rule(cfg.stack.epsilon_rule, T, eps_default, "$.stack.epsilon");
        const PolicyClass cls = env.cls;
        return [cls, k, eps, T] {
            std::shared_ptr<Algorithm> base = realizable_smooth_learner(cls, T);
            std::shared_ptr<Algorithm> budgeted = budgeted_active(std::move(base), k, T);
            return safe_wrapper(std::move(budgeted), eps, T);
        };
    }
    if (name == "budgeted_only") {
        const double k = resolve_rule(cfg.stack.k_rule, T,
                                      default_params(T, env.n).first, "$.stack.k");
        const PolicyClass cls = env.cls;
        return [cls, k, T] {
            std::shared_ptr<Algorithm> base = realizable_smooth_learner(cls, T);
            return budgeted_active(std::move(base), k, T);
        };
    }
    throw ConfigError("$.stack.name", "unknown stack '" + name + "'");
}

inline bool wants(const ExperimentConfig& cfg, RegretKind kind) {
    for (RegretKind m : cfg.metrics) {
        if (m == kind) return true;
    }
    return false;
}

}  // namespace detail

// One row per (T, metric), in config order. All requested metrics for a
// horizon are computed from the same set of trial traces.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
    detail::ResolvedEnvironment env = detail::resolve_environment(cfg);

    const bool need_mdp = detail::wants(cfg, RegretKind::MDP);
    const bool need_plus = detail::wants(cfg, RegretKind::PLUS);
    const bool need_mul = detail::wants(cfg, RegretKind::MUL);
    const bool need_sa = detail::wants(cfg, RegretKind::SA);
    if ((need_plus || need_mul) && !env.mu) {
        throw ConfigError("$.metrics",
                          "PLUS/MUL need a survival sequence; environment '" +
                              cfg.environment.name + "' does not define one");
    }

    std::vector<ResultRow> rows;
    for (const int T : cfg.T_list) {
        const auto t_start = std::chrono::steady_clock::now();
        const std::uint64_t t_seed = Rng::derive(cfg.seed, "T", static_cast<std::uint64_t>(T));
        AlgFactory stack = detail::make_stack(cfg, env, T);

        std::vector<Policy> comparators;
        if (need_sa) {
            comparators = env.cls.kind == PolicyClass::Kind::ExplicitFinite
                              ? env.cls.members
                              : epsilon_cover(env.cls, 1.0 / T).policies;
        }

        const std::size_t trials = static_cast<std::size_t>(cfg.trials);
        std::vector<double> s_mdp(trials), s_plus(trials), s_mul(trials), s_sa(trials),
            s_queries(trials), s_diam(trials);
        parallel_for(cfg.trials, [&](int i) {
            const std::uint64_t trial_seed =
                Rng::derive(t_seed, "trial", static_cast<std::uint64_t>(i));
            Rng init_rng(Rng::derive(trial_seed, "init"));
            const State s1 = env.instance.init(init_rng);

            auto alg = stack();
            MdpAdversary adv(env.instance, s1);
            const RunTrace trace = run_protocol(*alg, adv, T, Rng::derive(trial_seed, "agent"),
                                                env.instance.num_actions);

            s_queries[static_cast<std::size_t>(i)] = trace.total_queries();
            std::vector<State> states;
            states.reserve(static_cast<std::size_t>(T));
            for (const Step& st : trace.history.steps) states.push_back(st.state);
            s_diam[static_cast<std::size_t>(i)] = detail::bounding_box_diameter(states);

            if (need_mdp) {
                Rng mentor_rng(Rng::derive(trial_seed, "mentor"));
                KahanSum mentor_reward;
                State sm = s1;
                mentor_reward.add(env.instance.reward(sm, env.instance.mentor(sm)));
                for (int t = 1; t < T; ++t) {
                    sm = env.instance.step(sm, env.instance.mentor(sm), mentor_rng);
                    mentor_reward.add(env.instance.reward(sm, env.instance.mentor(sm)));
                }
                KahanSum agent_reward;
                for (const Step& st : trace.history.steps) {
                    agent_reward.add(env.instance.reward(st.state, st.action));
                }
                s_mdp[static_cast<std::size_t>(i)] = mentor_reward.sum - agent_reward.sum;
            }
            if (need_plus || need_mul) {
                KahanSum plus, mul;
                for (int t = 0; t < T; ++t) {
                    const Step& st = trace.history.steps[static_cast<std::size_t>(t)];
                    const ActionId am = trace.mentor_actions[static_cast<std::size_t>(t)];
                    const double mu_m = env.mu->value(t, st.state, am);
                    const double mu_a = env.mu->value(t, st.state, st.action);
                    plus.add(mu_m - mu_a);
                    if (need_mul) {
                        if (mu_m <= 0.0 || mu_a <= 0.0) {
                            throw std::domain_error(
                                "run_experiment: mu = 0 on a visited pair; MUL undefined");
                        }
                        mul.add(std::log(mu_m) - std::log(mu_a));
                    }
                }
                s_plus[static_cast<std::size_t>(i)] = plus.sum;
                s_mul[static_cast<std::size_t>(i)] = mul.sum;
            }
            if (need_sa) {
                double best = std::numeric_limits<double>::infinity();
                for (const Policy& pi : comparators) {
                    KahanSum loss;
                    for (int t = 0; t < T; ++t) {
                        loss.add(binary_loss(
                            pi(trace.history.steps[static_cast<std::size_t>(t)].state),
                            trace.mentor_actions[static_cast<std::size_t>(t)]));
                    }
                    best = std::min(best, loss.sum);
                }
                s_sa[static_cast<std::size_t>(i)] = trace.total_loss() - best;
            }
        });

        const double query_mean = detail::mean_ci(s_queries).first;
        const double diam_mean = detail::mean_ci(s_diam).first;
        const double wall_ms =
            cfg.timing ? std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t_start)
                             .count()
                       : 0.0;
        for (RegretKind m : cfg.metrics) {
            ResultRow row;
            row.T = T;
            row.metric = regret_kind_name(m);
            row.trials = cfg.trials;
            row.query_mean = query_mean;
            row.diam_mean = diam_mean;
            row.wall_ms = wall_ms;
            const std::vector<double>* samples = nullptr;
            switch (m) {
                case RegretKind::SA: samples = &s_sa; break;
                case RegretKind::PLUS: samples = &s_plus; break;
                case RegretKind::MUL: samples = &s_mul; break;
                case RegretKind::MDP: samples = &s_mdp; break;
                case RegretKind::QUERIES: samples = &s_queries; break;
            }
            std::tie(row.estimate, row.ci95) = detail::mean_ci(*samples);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// CSV and summary output
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline std::string format_csv(const std::vector<ResultRow>& rows) {
    std::string out = "T,metric,estimate,ci95,trials,query_mean,diam_mean,wall_ms\n";
    for (const ResultRow& r : rows) {
        out += std::to_string(r.T) + "," + r.metric + "," + detail::format_double(r.estimate) +
               "," + detail::format_double(r.ci95) + "," + std::to_string(r.trials) + "," +
               detail::format_double(r.query_mean) + "," + detail::format_double(r.diam_mean) +
               "," + detail::format_double(r.wall_ms) + "\n";
    }
    return out;
}

inline void write_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "'");
    out << format_csv(rows);
}

struct MetricSummary {
    std::string metric;
    bool fitted = false;
    SlopeFit fit;
    bool has_ceiling = false;
    double ceiling = 0.0;
    bool pass = true;
    std::string warning;
};

struct ExperimentSummary {
    std::vector<MetricSummary> metrics;
    bool all_pass = true;
};

inline ExperimentSummary fit_and_report(const std::vector<ResultRow>& rows,
                                        const std::map<std::string, double>& ceilings) {
    // Preserve first-appearance metric order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> points;
    for (const ResultRow& r : rows) {
        if (!points.count(r.metric)) order.push_back(r.metric);
        points[r.metric].emplace_back(static_cast<double>(r.T), r.estimate);
    }
    ExperimentSummary summary;
    for (const std::string& metric : order) {
        MetricSummary ms;
        ms.metric = metric;
        if (auto it = ceilings.find(metric); it != ceilings.end()) {
            ms.has_ceiling = true;
            ms.ceiling = it->second;
        }
        try {
            ms.fit = fit_loglog_slope(points[metric]);
            ms.fitted = true;
            if (ms.has_ceiling) ms.pass = ms.fit.slope < ms.ceiling;
        } catch (const std::invalid_argument& e) {
            ms.warning = e.what();
            ms.pass = !ms.has_ceiling;
        }
        if (!ms.pass) summary.all_pass = false;
        summary.metrics.push_back(std::move(ms));
    }
    return summary;
}

inline nlohmann::json summary_to_json(const ExperimentSummary& summary) {
    nlohmann::json out;
    out["all_pass"] = summary.all_pass;
    out["metrics"] = nlohmann::json::array();
    for (const MetricSummary& ms : summary.metrics) {
        nlohmann::json j;
        j["metric"] = ms.metric;
        j["fitted"] = ms.fitted;
        if (ms.fitted) {
            j["slope"] = ms.fit.slope;
            j["intercept"] = ms.fit.intercept;
            j["r2"] = ms.fit.r2;
            j["dropped_points"] = ms.fit.dropped;
        }
        if (ms.has_ceiling) {
            j["ceiling"] = ms.ceiling;
            j["pass"] = ms.pass;
        }
        if (!ms.warning.empty()) j["warning"] = ms.warning;
        out["metrics"].push_back(std::move(j));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plots (derived from the CSV file, never from in-memory rows)
// ---------------------------------------------------------------------------

inline std::vector<ResultRow> parse_csv(const std::string& text) {
    std::vector<ResultRow> rows;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        ResultRow r;
        std::getline(fields, cell, ',');
        r.T = std::stoi(cell);
        std::getline(fields, r.metric, ',');
        std::getline(fields, cell, ',');
        r.estimate = std::stod(cell);
        std::getline(fields, cell, ',');
        r.ci95 = std::stod(cell);
        std::getline(fields, cell, ',');
        r.trials = std::stoi(cell);
        std::getline(fields, cell, ',');
        r.query_mean = std::stod(cell);
        std::getline(fields, cell, ',');
        r.diam_mean = std::stod(cell);
        std::getline(fields, cell, ',');
        r.wall_ms = std::stod(cell);
        rows.push_back(std::move(r));
    }
    return rows;
}

// Writes one log-log SVG scatter per metric next to the CSV, re-reading the
// CSV so that plots always reflect the artifact of record.
inline std::vector<std::string> emit_plots(const std::string& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw std::runtime_error("emit_plots: cannot open '" + csv_path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::vector<ResultRow> rows = parse_csv(buffer.str());

    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    for (const ResultRow& r : rows) {
        if (r.estimate <= 0.0) continue;
        if (!series.count(r.metric)) order.push_back(r.metric);
        series[r.metric].emplace_back(std::log(static_cast<double>(r.T)), std::log(r.estimate));
    }

    const std::string stem =
        csv_path.size() > 4 && csv_path.substr(csv_path.size() - 4) == ".csv"
            ? csv_path.substr(0, csv_path.size() - 4)
            : csv_path;
    std::vector<std::string> written;
    const double width = 480.0, height = 360.0, margin = 48.0;
    for (const std::string& metric : order) {
        const auto& pts = series[metric];
        double x_lo = pts.front().first, x_hi = x_lo, y_lo = pts.front().second, y_hi = y_lo;
        for (const auto& [x, y] : pts) {
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
            y_lo = std::min(y_lo, y);
            y_hi = std::max(y_hi, y);
        }
        if (x_hi == x_lo) x_hi = x_lo + 1.0;
        if (y_hi == y_lo) y_hi = y_lo + 1.0;
        auto sx = [&](double x) {
            return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2.0 * margin);
        };
        auto sy = [&](double y) {
            return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2.0 * margin);
        };
        std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                          std::to_string(static_cast<int>(width)) + "\" height=\"" +
                          std::to_string(static_cast<int>(height)) + "\">\n";
        svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        svg += "<text x=\"12\" y=\"20\" font-family=\"monospace\" font-size=\"13\">" + metric +
               " (log-log)</text>\n";
        for (std::size_t i = 1; i < pts.size(); ++i) {
            svg += "<line x1=\"" + detail::format_double(sx(pts[i - 1].first)) + "\" y1=\"" +
                   detail::format_double(sy(pts[i - 1].second)) + "\" x2=\"" +
                   detail::format_double(sx(pts[i].first)) + "\" y2=\"" +
                   detail::format_double(sy(pts[i].second)) +
                   "\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n";
        }
        for (const auto& [x, y] : pts) {
            svg += "<circle cx=\"" + detail::format_double(sx(x)) + "\" cy=\"" +
                   detail::format_double(sy(y)) + "\" r=\"3.5\" fill=\"crimson\"/>\n";
        }
        svg += "</svg>\n";
        const std::string path = stem + "_" + metric + ".svg";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("emit_plots: cannot open '" + path + "'");
        out << svg;
        written.push_back(path);
    }
    return written;
}

}  // namespace mentorcore
