#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mentorcore/mentorcore.hpp"

namespace {

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mentorcore: regret sweeps for mentor-guided online learning in MDPs"};

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    int trials_override = 0;
    std::string metric_override;
    bool emit_plot_files = false;

    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--out", out_override, "override output CSV path");
    auto* seed_opt = app.add_option("--seed", seed_override, "override root seed");
    auto* trials_opt = app.add_option("--trials", trials_override, "override trial count");
    app.add_option("--metric", metric_override,
                   "override metric list, comma separated (SA,PLUS,MUL,MDP,QUERIES)");
    app.add_flag("--emit-plots", emit_plot_files, "write SVG plots derived from the CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        mentorcore::ExperimentConfig cfg = mentorcore::load_config(config_path);
        if (!out_override.empty()) cfg.output = out_override;
        if (seed_opt->count() > 0) cfg.seed = seed_override;
        if (trials_opt->count() > 0) {
            if (trials_override < 1) throw mentorcore::ConfigError("--trials", "must be >= 1");
            cfg.trials = trials_override;
        }
        if (!metric_override.empty()) {
            cfg.metrics.clear();
            for (const std::string& name : split_list(metric_override)) {
                cfg.metrics.push_back(mentorcore::detail::parse_metric(name, "--metric"));
            }
        }

        const std::vector<mentorcore::ResultRow> rows = mentorcore::run_experiment(cfg);
        mentorcore::write_csv(rows, cfg.output);
        std::cerr << "wrote " << rows.size() << " rows to " << cfg.output << "\n";

        const mentorcore::ExperimentSummary summary =
            mentorcore::fit_and_report(rows, cfg.ceilings);
        for (const mentorcore::MetricSummary& ms : summary.metrics) {
            std::cerr << ms.metric << ": ";
            if (ms.fitted) {
                std::cerr << "slope " << ms.fit.slope << " (r2 " << ms.fit.r2 << ")";
            } else {
                std::cerr << "no fit (" << ms.warning << ")";
            }
            if (ms.has_ceiling) {
                std::cerr << " ceiling " << ms.ceiling << " -> " << (ms.pass ? "pass" : "FAIL");
            }
            std::cerr << "\n";
        }

        {
            std::ofstream out(cfg.output + ".summary.json", std::ios::binary);
            out << mentorcore::summary_to_json(summary).dump(2) << "\n";
        }
        if (emit_plot_files) {
            for (const std::string& path : mentorcore::emit_plots(cfg.output)) {
                std::cerr << "plot: " << path << "\n";
            }
        }
        return summary.all_pass ? 0 : 1;
    } catch (const mentorcore::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
