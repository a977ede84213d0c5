// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include "pinnlab/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

pinnlab::ExperimentConfig resolve_config(const std::string& config_path,
                                         const std::string& preset_name,
                                         const std::vector<std::string>& overrides) {
    pinnlab::ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = pinnlab::load_config(config_path);
    } else if (!preset_name.empty()) {
        cfg = pinnlab::preset(preset_name);
    } else {
        throw pinnlab::ConfigError("either --config or --preset is required");
    }
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw pinnlab::ConfigError("--set expects key=value, got '" + kv + "'");
        }
        pinnlab::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

std::vector<double> parse_values(const std::string& list) {
    std::vector<double> out;
    std::istringstream in(list);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw pinnlab::ConfigError("--values is empty");
    return out;
}

int cmd_run(const std::string& config_path, const std::string& preset_name,
            const std::vector<std::string>& overrides, const std::string& out_dir) {
    pinnlab::ExperimentConfig cfg = resolve_config(config_path, preset_name, overrides);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    pinnlab::TrainReport report = pinnlab::run_experiment(cfg);
    std::printf("final_rmse=%.6g best_rmse=%.6g (iter %d) stop=%s wall=%.1fs\n",
                report.final_rmse, report.best_rmse, report.best_iteration,
                report.stop_reason.c_str(), report.wall_time_s);
    if (cfg.b_trainable) std::printf("learned_b=%.6g\n", report.learned_b);
    if (cfg.coeff_trainable) {
        std::printf("learned_alpha=%.6g learned_beta=%.6g\n", report.learned_alpha,
                    report.learned_beta);
    }
    if (!cfg.out_dir.empty()) {
        pinnlab::write_report(report, cfg.out_dir);
        std::printf("wrote %s/report.json, curve.csv, predictions.csv\n", cfg.out_dir.c_str());
    }
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& preset_name,
              const std::vector<std::string>& overrides, const std::string& axis,
              const std::string& values, int repeats, int jobs, const std::string& out_dir) {
    pinnlab::ExperimentConfig cfg = resolve_config(config_path, preset_name, overrides);
    pinnlab::SweepTable table = pinnlab::run_sweep(cfg, axis, parse_values(values), repeats, jobs);
    for (std::size_t i = 0; i < table.values.size(); ++i) {
        std::printf("%s=%g  median_final_rmse=%.6g  median_best_rmse=%.6g\n", axis.c_str(),
                    table.values[i], table.median_final_rmse[i], table.median_best_rmse[i]);
    }
    if (!out_dir.empty()) {
        pinnlab::write_sweep(table, out_dir);
        std::printf("wrote %s/sweep.json, sweep.csv\n", out_dir.c_str());
    }
    return kExitOk;
}

int cmd_gen_data(const std::string& system, const std::string& out_path,
                 const std::vector<std::string>& overrides) {
    pinnlab::ExperimentConfig cfg;
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw pinnlab::ConfigError("--set expects key=value, got '" + kv + "'");
        }
        pinnlab::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (system == "pendulum-ideal") {
        pinnlab::save_pendulum_csv(out_path, pinnlab::euler_cromer(cfg.pendulum_sim).series);
    } else if (system == "heat-synthetic") {
        pinnlab::HeatSimConfig sim = cfg.heat_sim;
        sim.initial = pinnlab::gaussian_field(sim.ny, sim.nx, (sim.ny - 1) / 2.0,
                                              (sim.nx - 1) / 2.0, cfg.heat_init_sigma,
                                              cfg.heat_init_amp, cfg.heat_init_base);
        if (cfg.heat_source_power != 0.0) {
            sim.source = pinnlab::HeatSource{cfg.heat_source_row, cfg.heat_source_col,
                                             cfg.heat_source_power};
        }
        pinnlab::save_frames_csv(out_path, pinnlab::fd_heat_solve(sim));
    } else {
        throw pinnlab::ConfigError("gen-data supports pendulum-ideal and heat-synthetic, got '" +
                                   system + "'");
    }
    std::printf("wrote %s\n", out_path.c_str());
    return kExitOk;
}

int cmd_denoise(const std::string& in_path, const std::string& out_path, double threshold,
                int window, int order) {
    pinnlab::FrameStack stack = pinnlab::load_frames_csv(in_path);
    pinnlab::SpikeScan scan = pinnlab::spike_scan(stack, threshold);
    stack = pinnlab::drop_frames(stack, scan.indices);
    int used = window;
    if (used % 2 == 0) ++used;
    stack = pinnlab::savgol_smooth_stack(stack, used, order);
    pinnlab::save_frames_csv(out_path, stack);
    std::printf("dropped %zu spike frames (%.2f%%), %d poisoned pixels, window %d -> %s\n",
                scan.indices.size(), 100.0 * scan.flagged_fraction, scan.poisoned_pixels, used,
                out_path.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physics-informed network training runs over pendulum and heat data"};
    app.require_subcommand(1);

    std::string config_path, preset_name, out_dir;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "Run one training experiment");
    run->add_option("--config", config_path, "key=value config file");
    run->add_option("--preset", preset_name, "built-in preset name");
    run->add_option("--set", overrides, "override single keys (key=value)");
    run->add_option("--out", out_dir, "output directory for report + plot data");

    std::string axis, values;
    int repeats = 5;
    int jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "Run a table of experiments over one axis");
    sweep->add_option("--config", config_path, "key=value config file");
    sweep->add_option("--preset", preset_name, "built-in preset name");
    sweep->add_option("--set", overrides, "override single keys (key=value)");
    sweep->add_option("--axis", axis, "n_data | frame-size | sigma | domain-proportion")
        ->required();
    sweep->add_option("--values", values, "comma-separated axis values")->required();
    sweep->add_option("--repeats", repeats, "seeds per cell (median reported)");
    sweep->add_option("--jobs", jobs, "parallel cells");
    sweep->add_option("--out", out_dir, "output directory for the sweep table");

    std::string system, gen_out;
    auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
    gen->add_option("--system", system, "pendulum-ideal | heat-synthetic")->required();
    gen->add_option("--out", gen_out, "output CSV path")->required();
    gen->add_option("--set", overrides, "simulator overrides (key=value)");

    std::string den_in, den_out;
    double threshold = 100.0;
    int window = 401;
    int order = 3;
    auto* den = app.add_subcommand("denoise", "Spike-filter and smooth a frame CSV");
    den->add_option("--in", den_in, "input frame CSV")->required();
    den->add_option("--out", den_out, "output frame CSV")->required();
    den->add_option("--threshold", threshold, "spike threshold");
    den->add_option("--window", window, "smoothing window (odd; even is bumped)");
    den->add_option("--order", order, "polynomial order");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path, preset_name, overrides, out_dir);
        if (sweep->parsed()) {
            return cmd_sweep(config_path, preset_name, overrides, axis, values, repeats, jobs,
                             out_dir);
        }
        if (gen->parsed()) return cmd_gen_data(system, gen_out, overrides);
        if (den->parsed()) return cmd_denoise(den_in, den_out, threshold, window, order);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    } catch (const pinnlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const pinnlab::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitIo;
    } catch (const pinnlab::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
