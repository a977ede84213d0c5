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

#ifndef PINNLAB_HARNESS_HPP
#define PINNLAB_HARNESS_HPP

#include "pinnlab/datasets.hpp"
#include "pinnlab/mlp.hpp"
#include "pinnlab/optim.hpp"
#include "pinnlab/physics.hpp"
#include "pinnlab/simulate.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace pinnlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SystemKind { pendulum_ideal, pendulum_csv, heat_synthetic, heat_csv };
enum class ModelKind { pinn, nn };
enum class OptimizerKind { lbfgs, adam };
enum class Strategy { linspace, uniform, adjacent };

/// Full description of one training run. Flat key=value text files map onto
/// these fields one to one; see the README for the key list.
struct ExperimentConfig {
    std::string preset_name;

    SystemKind system = SystemKind::pendulum_ideal;
    ModelKind model = ModelKind::pinn;

    std::vector<int> hidden = {5, 5, 5};
    Activation activation = Activation::sine;

    OptimizerKind optimizer = OptimizerKind::lbfgs;
    double learning_rate = 0.01;
    int max_iters = 2000;
    double tol_grad = 1e-7;
    double tol_change = 1e-9;
    int batch_size = 4096;

    double lambda_p = 0.001;
    Strategy strategy = Strategy::linspace;
    int n_data = 150;             // points (pendulum, heat-uniform) or frames (heat-linspace)
    double adjacent_fraction = 0; // used instead of n_data when > 0
    int n_collocation = 100;
    double noise_sigma = 0.0;

    std::uint64_t seed_init = 1;
    std::uint64_t seed_sample = 2;
    std::uint64_t seed_noise = 3;
    int repeats = 5;

    bool b_trainable = false;
    double b_init = 0.0;
    bool coeff_trainable = false;  // heat alpha/beta
    double alpha_init = 10.0;
    double beta_init = 10.0;

    std::string data_path;
    std::string out_dir;
    double domain_proportion = 1.0;
    SplitConfig split;
    bool subtract_offset = false;
    bool denoise = false;
    DenoiseConfig denoise_cfg;
    int frame_size = 0;  // centered crop when > 0
    bool normalize_inputs = false;

    PendulumSimConfig pendulum_sim;
    HeatSimConfig heat_sim;       // initial field is built from the fields below
    double heat_init_amp = 100.0;
    double heat_init_sigma = 2.2;    // column direction
    double heat_init_sigma_y = 0.0;  // row direction; 0 = same as heat_init_sigma
    double heat_init_base = 20.0;
    double heat_init_row = -1.0;     // bump center; -1 = grid center
    double heat_init_col = -1.0;
    double heat_source_power = 0.0;
    int heat_source_row = 0;
    int heat_source_col = 0;
    int heat_frame_stride = 5;    // keep every n-th simulated frame
};

std::string to_string(SystemKind s);
std::string to_string(ModelKind m);
std::string to_string(OptimizerKind o);
std::string to_string(Strategy s);

/// Built-in configurations, one per training-case family; `preset_names()`
/// lists them. Unknown names raise ConfigError.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// key=value text, # comments; a `preset=` line is applied first.
ExperimentConfig load_config(const std::string& path);
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// sqrt((1/N) sum (p_i - t_i)^2); throws on empty or mismatched input.
double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth);

struct TrainReport {
    ExperimentConfig config;
    int savgol_window_used = 0;

    std::vector<IterationRecord> curve;
    std::vector<double> coeff_b;
    std::vector<double> coeff_alpha;
    std::vector<double> coeff_beta;

    std::string stop_reason;
    int iterations_run = 0;
    double final_loss = 0.0;
    double final_rmse = 0.0;
    double best_rmse = 0.0;
    int best_iteration = 0;
    double learned_b = 0.0;
    double learned_alpha = 0.0;
    double learned_beta = 0.0;
    double data_range = 0.0;
    LossBreakdown final_breakdown;
    int spike_frames_dropped = 0;
    int spike_poisoned_pixels = 0;
    double wall_time_s = 0.0;

    // carried in memory for plot-data emission, not serialized
    Eigen::VectorXd final_params;
    Eigen::MatrixXd test_inputs;
    Eigen::VectorXd test_targets;
    Eigen::VectorXd test_predictions;
};

/// Deterministic for fixed seeds; a blow-up is recorded in the report, not
/// thrown. Writes nothing; see write_report / emit_plotdata.
TrainReport run_experiment(const ExperimentConfig& cfg);

nlohmann::ordered_json config_json(const ExperimentConfig& cfg);
nlohmann::ordered_json report_json(const TrainReport& report, bool include_wall_time = true);

/// report.json plus the plot-data CSVs under out_dir.
void write_report(const TrainReport& report, const std::string& out_dir);

/// curve.csv: iteration,train_loss,test_rmse. predictions.csv: inputs,
/// prediction, truth over the test split.
void emit_plotdata(const TrainReport& report, const std::string& out_dir);

struct SweepCell {
    double axis_value = 0.0;
    int repeat = 0;
    double final_rmse = 0.0;
    double best_rmse = 0.0;
    int best_iteration = 0;
    int iterations_run = 0;
    std::string stop_reason;
    double learned_b = 0.0;
    double learned_alpha = 0.0;
    double learned_beta = 0.0;
};

struct SweepTable {
    std::string axis;
    std::vector<double> values;
    int repeats = 1;
    std::vector<SweepCell> cells;            // values-major, repeats-minor
    std::vector<double> median_final_rmse;   // one per axis value
    std::vector<double> median_best_rmse;
};

/// Axes: n_data | frame-size | sigma | domain-proportion. Repeat r offsets
/// every seed by r. Cells run independently (jobs > 1 runs them on threads);
/// the aggregated table is identical either way.
SweepTable run_sweep(const ExperimentConfig& base, const std::string& axis,
                     const std::vector<double>& values, int repeats, int jobs = 1);

nlohmann::ordered_json sweep_json(const SweepTable& table);
void write_sweep(const SweepTable& table, const std::string& out_dir);

double median(std::vector<double> values);

}  // namespace pinnlab

#endif  // PINNLAB_HARNESS_HPP
