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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

namespace pinnlab {

std::string to_string(SystemKind s) {
    switch (s) {
        case SystemKind::pendulum_ideal: return "pendulum-ideal";
        case SystemKind::pendulum_csv: return "pendulum-csv";
        case SystemKind::heat_synthetic: return "heat-synthetic";
        case SystemKind::heat_csv: return "heat-csv";
    }
    return "?";
}

std::string to_string(ModelKind m) { return m == ModelKind::pinn ? "pinn" : "nn"; }
std::string to_string(OptimizerKind o) { return o == OptimizerKind::lbfgs ? "lbfgs" : "adam"; }

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::linspace: return "linspace";
        case Strategy::uniform: return "uniform";
        case Strategy::adjacent: return "adjacent";
    }
    return "?";
}

namespace {

SystemKind system_from_string(const std::string& s) {
    if (s == "pendulum-ideal") return SystemKind::pendulum_ideal;
    if (s == "pendulum-csv") return SystemKind::pendulum_csv;
    if (s == "heat-synthetic") return SystemKind::heat_synthetic;
    if (s == "heat-csv") return SystemKind::heat_csv;
    throw ConfigError("unknown system: " + s);
}

ModelKind model_from_string(const std::string& s) {
    if (s == "pinn") return ModelKind::pinn;
    if (s == "nn") return ModelKind::nn;
    throw ConfigError("unknown model: " + s);
}

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "lbfgs") return OptimizerKind::lbfgs;
    if (s == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer: " + s);
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "linspace") return Strategy::linspace;
    if (s == "uniform") return Strategy::uniform;
    if (s == "adjacent") return Strategy::adjacent;
    throw ConfigError("unknown strategy: " + s);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "on" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "off" || s == "0" || s == "no") return false;
    throw ConfigError("expected a boolean, got '" + s + "'");
}

std::string hidden_to_string(const std::vector<int>& hidden) {
    std::string out;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(hidden[i]);
    }
    return out;
}

}  // namespace

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig cfg;
    cfg.preset_name = name;

    if (name == "ideal-linspace") {
        // pendulum reference setup: small net, sparse linearly-spaced data
        cfg.system = SystemKind::pendulum_ideal;
        cfg.hidden = {5, 5, 5};
        cfg.strategy = Strategy::linspace;
        cfg.n_data = 100;
        cfg.n_collocation = 100;
        cfg.lambda_p = 0.001;
        cfg.learning_rate = 0.01;
        cfg.max_iters = 2000;
        return cfg;
    }
    if (name == "ideal-abundant") {
        cfg = preset("ideal-linspace");
        cfg.preset_name = name;
        cfg.hidden = {32, 32, 32};
        cfg.n_data = 150;
        return cfg;
    }
    if (name == "ideal-uniform") {
        cfg = preset("ideal-linspace");
        cfg.preset_name = name;
        cfg.strategy = Strategy::uniform;
        return cfg;
    }
    if (name == "ideal-adjacent") {
        cfg = preset("ideal-linspace");
        cfg.preset_name = name;
        cfg.strategy = Strategy::adjacent;
        cfg.hidden = {12, 9};
        cfg.max_iters = 8000;
        return cfg;
    }
    if (name == "ideal-noisy") {
        cfg = preset("ideal-linspace");
        cfg.preset_name = name;
        cfg.noise_sigma = 0.5;
        cfg.max_iters = 4000;
        return cfg;
    }
    if (name == "real-pendulum-domain") {
        // inverse problem for b over a domain slice of an ingested capture
        cfg.system = SystemKind::pendulum_csv;
        cfg.hidden = {32, 32, 32};
        cfg.lambda_p = 0.1;
        cfg.learning_rate = 0.05;
        cfg.n_collocation = 8000;
        cfg.n_data = 0;  // train points come from the 7-point stride
        cfg.max_iters = 3000;
        cfg.tol_grad = 0.0;
        cfg.tol_change = 0.0;
        cfg.b_trainable = true;
        cfg.domain_proportion = 0.2;
        cfg.split.kind = SplitConfig::Kind::strided;
        cfg.subtract_offset = true;
        return cfg;
    }
    if (name == "heat-synthetic-inverse") {
        // alpha/beta recovery on generated 8x8 data heated by an off-center
        // point source: gradients persist over the whole window, which keeps
        // both coefficients identifiable; collocation skips the forced cell
        cfg.system = SystemKind::heat_synthetic;
        cfg.hidden = {64, 32};
        cfg.activation = Activation::tanh;
        cfg.lambda_p = 0.5;
        cfg.learning_rate = 0.01;
        cfg.strategy = Strategy::linspace;
        cfg.n_data = 16;  // frames
        cfg.n_collocation = 192;
        cfg.max_iters = 1500;
        cfg.coeff_trainable = true;
        cfg.repeats = 1;
        cfg.normalize_inputs = true;
        cfg.heat_sim.steps = 150;
        cfg.heat_frame_stride = 10;
        cfg.heat_init_amp = 0.0;  // uniform start, source-driven
        cfg.heat_source_power = 800.0;
        cfg.heat_source_row = 2;
        cfg.heat_source_col = 4;
        return cfg;
    }
    if (name == "heat-frame-sweep") {
        cfg = preset("heat-synthetic-inverse");
        cfg.preset_name = name;
        cfg.heat_sim.nx = 32;
        cfg.heat_sim.ny = 24;
        cfg.heat_sim.dt = 0.02;
        cfg.heat_sim.steps = 200;
        cfg.heat_init_sigma = 4.0;
        cfg.heat_frame_stride = 10;
        cfg.frame_size = 8;
        cfg.n_data = 21;
        cfg.n_collocation = 256;
        cfg.max_iters = 300;
        return cfg;
    }
    if (name == "heat-linspace-frames") {
        cfg = preset("heat-synthetic-inverse");
        cfg.preset_name = name;
        cfg.n_data = 20;
        cfg.max_iters = 400;
        return cfg;
    }
    if (name == "heat-uniform-points") {
        cfg = preset("heat-synthetic-inverse");
        cfg.preset_name = name;
        cfg.strategy = Strategy::uniform;
        cfg.n_data = 1024;
        cfg.max_iters = 400;
        return cfg;
    }
    throw ConfigError("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
    return {"ideal-linspace",  "ideal-abundant",       "ideal-uniform",
            "ideal-adjacent",  "ideal-noisy",          "real-pendulum-domain",
            "heat-synthetic-inverse", "heat-frame-sweep", "heat-linspace-frames",
            "heat-uniform-points"};
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "system") cfg.system = system_from_string(value);
        else if (key == "model") cfg.model = model_from_string(value);
        else if (key == "hidden") cfg.hidden = parse_int_list(value);
        else if (key == "activation") cfg.activation = activation_from_string(value);
        else if (key == "optimizer") cfg.optimizer = optimizer_from_string(value);
        else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
        else if (key == "max_iters") cfg.max_iters = std::stoi(value);
        else if (key == "tol_grad") cfg.tol_grad = std::stod(value);
        else if (key == "tol_change") cfg.tol_change = std::stod(value);
        else if (key == "batch_size") cfg.batch_size = std::stoi(value);
        else if (key == "lambda_p") cfg.lambda_p = std::stod(value);
        else if (key == "strategy") cfg.strategy = strategy_from_string(value);
        else if (key == "n_data") cfg.n_data = std::stoi(value);
        else if (key == "adjacent_fraction") cfg.adjacent_fraction = std::stod(value);
        else if (key == "n_collocation") cfg.n_collocation = std::stoi(value);
        else if (key == "noise_sigma") cfg.noise_sigma = std::stod(value);
        else if (key == "seed_init") cfg.seed_init = std::stoull(value);
        else if (key == "seed_sample") cfg.seed_sample = std::stoull(value);
        else if (key == "seed_noise") cfg.seed_noise = std::stoull(value);
        else if (key == "repeats") cfg.repeats = std::stoi(value);
        else if (key == "b_trainable") cfg.b_trainable = parse_bool(value);
        else if (key == "b_init") cfg.b_init = std::stod(value);
        else if (key == "coeff_trainable") cfg.coeff_trainable = parse_bool(value);
        else if (key == "alpha_init") cfg.alpha_init = std::stod(value);
        else if (key == "beta_init") cfg.beta_init = std::stod(value);
        else if (key == "data_path") cfg.data_path = value;
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "domain_proportion") cfg.domain_proportion = std::stod(value);
        else if (key == "split") {
            if (value == "full") cfg.split.kind = SplitConfig::Kind::full;
            else if (value == "strided") cfg.split.kind = SplitConfig::Kind::strided;
            else throw ConfigError("unknown split: " + value);
        }
        else if (key == "train_stride") cfg.split.train_stride = std::stoi(value);
        else if (key == "test_stride") cfg.split.test_stride = std::stoi(value);
        else if (key == "split_offset") cfg.split.offset = std::stoi(value);
        else if (key == "subtract_offset") cfg.subtract_offset = parse_bool(value);
        else if (key == "denoise") cfg.denoise = parse_bool(value);
        else if (key == "spike_threshold") cfg.denoise_cfg.spike_threshold = std::stod(value);
        else if (key == "savgol_window") cfg.denoise_cfg.savgol_window = std::stoi(value);
        else if (key == "savgol_order") cfg.denoise_cfg.savgol_order = std::stoi(value);
        else if (key == "frame_size") cfg.frame_size = std::stoi(value);
        else if (key == "normalize_inputs") cfg.normalize_inputs = parse_bool(value);
        else if (key == "sim_n_points") cfg.pendulum_sim.n_points = std::stoi(value);
        else if (key == "sim_t_end") cfg.pendulum_sim.t_end = std::stod(value);
        else if (key == "sim_phi0") cfg.pendulum_sim.phi0 = std::stod(value);
        else if (key == "sim_omega0") cfg.pendulum_sim.omega0 = std::stod(value);
        else if (key == "sim_g") cfg.pendulum_sim.g = std::stod(value);
        else if (key == "sim_L") cfg.pendulum_sim.L = std::stod(value);
        else if (key == "sim_b") cfg.pendulum_sim.b = std::stod(value);
        else if (key == "heat_nx") cfg.heat_sim.nx = std::stoi(value);
        else if (key == "heat_ny") cfg.heat_sim.ny = std::stoi(value);
        else if (key == "heat_dx") cfg.heat_sim.dx = std::stod(value);
        else if (key == "heat_dy") cfg.heat_sim.dy = std::stod(value);
        else if (key == "heat_dt") cfg.heat_sim.dt = std::stod(value);
        else if (key == "heat_steps") cfg.heat_sim.steps = std::stoi(value);
        else if (key == "heat_alpha") cfg.heat_sim.alpha = std::stod(value);
        else if (key == "heat_beta") cfg.heat_sim.beta = std::stod(value);
        else if (key == "heat_init_amp") cfg.heat_init_amp = std::stod(value);
        else if (key == "heat_init_sigma") cfg.heat_init_sigma = std::stod(value);
        else if (key == "heat_init_sigma_y") cfg.heat_init_sigma_y = std::stod(value);
        else if (key == "heat_init_base") cfg.heat_init_base = std::stod(value);
        else if (key == "heat_init_row") cfg.heat_init_row = std::stod(value);
        else if (key == "heat_init_col") cfg.heat_init_col = std::stod(value);
        else if (key == "heat_source_power") cfg.heat_source_power = std::stod(value);
        else if (key == "heat_source_row") cfg.heat_source_row = std::stoi(value);
        else if (key == "heat_source_col") cfg.heat_source_col = std::stoi(value);
        else if (key == "heat_frame_stride") cfg.heat_frame_stride = std::stoi(value);
        else throw ConfigError("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
        throw ConfigError("bad value for " + key + ": '" + value + "'");
    } catch (const std::out_of_range&) {
        throw ConfigError("value out of range for " + key + ": '" + value + "'");
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }

    ExperimentConfig cfg;
    for (const auto& [k, v] : entries) {
        if (k == "preset") cfg = preset(v);
    }
    for (const auto& [k, v] : entries) {
        if (k != "preset") apply_override(cfg, k, v);
    }
    return cfg;
}

double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth) {
    if (predictions.size() == 0) throw std::invalid_argument("rmse: empty input");
    if (predictions.size() != truth.size()) throw std::invalid_argument("rmse: length mismatch");
    return std::sqrt((predictions - truth).squaredNorm() /
                     static_cast<double>(predictions.size()));
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

struct PreparedData {
    TrainingSet set;
    PhysicsSpec physics;
    int input_dim = 1;
    double data_range = 0.0;
    int savgol_window_used = 0;
    int spike_dropped = 0;
    int spike_poisoned = 0;
};

FrameStack stride_frames(const FrameStack& stack, int stride) {
    if (stride <= 1) return stack;
    FrameStack out;
    const Eigen::Index kept = (stack.size() + stride - 1) / stride;
    out.timestamps.resize(kept);
    Eigen::Index k = 0;
    for (Eigen::Index f = 0; f < stack.size(); f += stride) {
        out.timestamps[k++] = stack.timestamps[f];
        out.frames.push_back(stack.frames[static_cast<std::size_t>(f)]);
    }
    return out;
}

TrainingSet sample_series(const ExperimentConfig& cfg, const Series1D& series) {
    switch (cfg.strategy) {
        case Strategy::linspace:
            if (cfg.n_data <= 0) return sample_strided(series, cfg.split);
            return sample_linspace(series, cfg.n_data, cfg.split);
        case Strategy::uniform:
            if (cfg.n_data <= 0) throw ConfigError("uniform strategy needs n_data >= 1");
            return sample_uniform(series, cfg.n_data, cfg.seed_sample, cfg.split);
        case Strategy::adjacent:
            if (cfg.adjacent_fraction > 0.0) {
                return sample_adjacent_fraction(series, cfg.adjacent_fraction, cfg.split);
            }
            if (cfg.n_data <= 0) throw ConfigError("adjacent strategy needs n_data >= 1");
            return sample_adjacent(series, cfg.n_data, cfg.split);
    }
    throw ConfigError("bad strategy");
}

PreparedData prepare_pendulum(const ExperimentConfig& cfg) {
    PreparedData out;
    out.input_dim = 1;

    Series1D series;
    double coll_lo = 0.0;
    double coll_hi = 0.0;
    if (cfg.system == SystemKind::pendulum_ideal) {
        series = euler_cromer(cfg.pendulum_sim).series;
        coll_lo = series.times[0];
        coll_hi = series.times[series.size() - 1];
    } else {
        series = load_pendulum_csv(cfg.data_path);
        if (cfg.subtract_offset) series = remove_offset(series);
        // collocation spans the full capture even when training is restricted
        coll_lo = series.times[0];
        coll_hi = series.times[series.size() - 1];
        if (cfg.domain_proportion < 1.0) {
            series = restrict_fraction(series, cfg.domain_proportion);
        }
    }

    out.set = sample_series(cfg, series);
    set_collocation_linspace(out.set, coll_lo, coll_hi, cfg.n_collocation);
    out.data_range = series.values.maxCoeff() - series.values.minCoeff();

    out.physics.kind = ResidualKind::pendulum;
    out.physics.pendulum.g = cfg.pendulum_sim.g;
    out.physics.pendulum.L = cfg.pendulum_sim.L;
    out.physics.pendulum.b = cfg.pendulum_sim.b;
    out.physics.pendulum.b_trainable = cfg.b_trainable;
    return out;
}

PreparedData prepare_heat(const ExperimentConfig& cfg) {
    PreparedData out;
    out.input_dim = 3;

    FrameStack stack;
    if (cfg.system == SystemKind::heat_synthetic) {
        HeatSimConfig sim = cfg.heat_sim;
        const double sigma_row =
            cfg.heat_init_sigma_y > 0.0 ? cfg.heat_init_sigma_y : cfg.heat_init_sigma;
        const double row = cfg.heat_init_row >= 0.0 ? cfg.heat_init_row : (sim.ny - 1) / 2.0;
        const double col = cfg.heat_init_col >= 0.0 ? cfg.heat_init_col : (sim.nx - 1) / 2.0;
        sim.initial = gaussian_field(sim.ny, sim.nx, row, col, sigma_row, cfg.heat_init_sigma,
                                     cfg.heat_init_amp, cfg.heat_init_base);
        if (cfg.heat_source_power != 0.0) {
            sim.source = HeatSource{cfg.heat_source_row, cfg.heat_source_col,
                                    cfg.heat_source_power};
        }
        stack = stride_frames(fd_heat_solve(sim), cfg.heat_frame_stride);
    } else {
        stack = load_frames_csv(cfg.data_path);
    }

    if (cfg.denoise) {
        SpikeScan scan = spike_scan(stack, cfg.denoise_cfg.spike_threshold);
        stack = drop_frames(stack, scan.indices);
        out.spike_dropped = static_cast<int>(scan.indices.size());
        out.spike_poisoned = scan.poisoned_pixels;
        int window = cfg.denoise_cfg.savgol_window;
        if (window % 2 == 0) ++window;  // the filter needs a centered window
        out.savgol_window_used = window;
        try {
            stack = savgol_smooth_stack(stack, window, cfg.denoise_cfg.savgol_order);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("denoise: ") + e.what());
        }
    }

    if (cfg.frame_size > 0) {
        try {
            stack = reduce_frame(stack, cfg.frame_size);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }

    if (stack.size() < 1) throw ConfigError("heat data is empty after preprocessing");

    switch (cfg.strategy) {
        case Strategy::linspace:
            out.set = sample_linspace_frames(stack, cfg.n_data, cfg.split);
            break;
        case Strategy::uniform:
            out.set = sample_uniform_points(stack, cfg.n_data, cfg.seed_sample, cfg.split);
            break;
        case Strategy::adjacent:
            throw ConfigError("adjacent sampling is not defined for heat systems");
    }

    Eigen::VectorXd lo(3), hi(3);
    lo << 0.0, 0.0, stack.timestamps[0];
    hi << static_cast<double>(stack.cols() - 1), static_cast<double>(stack.rows() - 1),
        stack.timestamps[stack.size() - 1];
    set_collocation_uniform(out.set, lo, hi, cfg.n_collocation, cfg.seed_sample + 1);
    if (cfg.system == SystemKind::heat_synthetic && cfg.heat_source_power != 0.0 &&
        cfg.frame_size <= 0) {
        // the homogeneous residual does not hold at the forced cell; resample
        // collocation points that fall within 1.5 cells of it
        std::mt19937_64 rng(cfg.seed_sample + 2);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double sx = static_cast<double>(cfg.heat_source_col);
        const double sy = static_cast<double>(cfg.heat_source_row);
        for (Eigen::Index k = 0; k < out.set.collocation.rows(); ++k) {
            while (std::abs(out.set.collocation(k, 0) - sx) < 1.5 &&
                   std::abs(out.set.collocation(k, 1) - sy) < 1.5) {
                for (Eigen::Index d = 0; d < 3; ++d) {
                    out.set.collocation(k, d) = lo[d] + (hi[d] - lo[d]) * unit(rng);
                }
            }
        }
    }

    double mn = stack.frames[0].minCoeff();
    double mx = stack.frames[0].maxCoeff();
    for (const auto& f : stack.frames) {
        mn = std::min(mn, f.minCoeff());
        mx = std::max(mx, f.maxCoeff());
    }
    out.data_range = mx - mn;

    out.physics.kind = ResidualKind::heat2d;
    out.physics.heat.alpha = cfg.heat_sim.alpha;
    out.physics.heat.beta = cfg.heat_sim.beta;
    out.physics.heat.trainable = cfg.coeff_trainable;
    return out;
}

void validate(const ExperimentConfig& cfg) {
    if ((cfg.system == SystemKind::pendulum_csv || cfg.system == SystemKind::heat_csv)) {
        if (cfg.data_path.empty()) throw ConfigError("data_path is required for csv systems");
        if (!std::filesystem::exists(cfg.data_path)) {
            throw ConfigError("data file does not exist: " + cfg.data_path);
        }
    }
    if (cfg.hidden.empty()) throw ConfigError("at least one hidden layer is required");
    for (int h : cfg.hidden) {
        if (h < 1) throw ConfigError("hidden widths must be >= 1");
    }
    if (cfg.max_iters < 0) throw ConfigError("max_iters must be >= 0");
    if (cfg.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (cfg.n_collocation < 0) throw ConfigError("n_collocation must be >= 0");
    if (cfg.noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.repeats < 1) throw ConfigError("repeats must be >= 1");
}

InputTransform make_transform(const PreparedData& data) {
    const Eigen::Index dim = data.set.train_inputs.cols();
    InputTransform tf;
    tf.shift.resize(dim);
    tf.scale.resize(dim);
    for (Eigen::Index d = 0; d < dim; ++d) {
        double lo = data.set.train_inputs.col(d).minCoeff();
        double hi = data.set.train_inputs.col(d).maxCoeff();
        if (data.set.collocation.rows() > 0) {
            lo = std::min(lo, data.set.collocation.col(d).minCoeff());
            hi = std::max(hi, data.set.collocation.col(d).maxCoeff());
        }
        if (data.set.test_inputs.rows() > 0) {
            lo = std::min(lo, data.set.test_inputs.col(d).minCoeff());
            hi = std::max(hi, data.set.test_inputs.col(d).maxCoeff());
        }
        tf.shift[d] = 0.5 * (lo + hi);
        tf.scale[d] = hi > lo ? 2.0 / (hi - lo) : 1.0;
    }
    return tf;
}

Eigen::MatrixXd apply_transform(const InputTransform& tf, const Eigen::MatrixXd& inputs) {
    if (tf.empty()) return inputs;
    Eigen::MatrixXd out = inputs;
    for (Eigen::Index d = 0; d < out.cols(); ++d) {
        out.col(d) = (out.col(d).array() - tf.shift[d]) * tf.scale[d];
    }
    return out;
}

// Shuffled-epoch batch stream for the mini-batch path.
struct BatchStream {
    explicit BatchStream(Eigen::Index n, std::uint64_t seed) : rng(seed) {
        order.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        pos = order.size();  // trigger reshuffle on first use
    }

    std::vector<Eigen::Index> next(std::size_t batch) {
        batch = std::min(batch, order.size());
        if (pos + batch > order.size()) {
            std::shuffle(order.begin(), order.end(), rng);
            pos = 0;
        }
        std::vector<Eigen::Index> out(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                      order.begin() + static_cast<std::ptrdiff_t>(pos + batch));
        pos += batch;
        return out;
    }

    std::vector<Eigen::Index> order;
    std::size_t pos = 0;
    std::mt19937_64 rng;
};

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    }
    return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = v[rows[i]];
    }
    return out;
}

}  // namespace

TrainReport run_experiment(const ExperimentConfig& cfg_in) {
    const auto t_start = std::chrono::steady_clock::now();
    validate(cfg_in);

    ExperimentConfig cfg = cfg_in;
    if (cfg.model == ModelKind::nn) {
        cfg.lambda_p = 0.0;  // the uninformed network drops the physics term
        cfg.n_collocation = 0;
    }

    PreparedData data = cfg.system == SystemKind::pendulum_ideal ||
                                cfg.system == SystemKind::pendulum_csv
                            ? prepare_pendulum(cfg)
                            : prepare_heat(cfg);

    if (cfg.noise_sigma > 0.0) {
        data.set.train_targets =
            add_gaussian_noise(data.set.train_targets, cfg.noise_sigma, cfg.seed_noise);
    }

    const MlpSpec spec{data.input_dim, cfg.hidden, 1, cfg.activation};
    const Mlp net = init_mlp(spec, cfg.seed_init);
    const Eigen::Index n_net = net.params.size();

    const bool train_b = data.physics.kind == ResidualKind::pendulum && cfg.b_trainable;
    const bool train_ab = data.physics.kind == ResidualKind::heat2d && cfg.coeff_trainable;
    const Eigen::Index n_extra = train_b ? 1 : (train_ab ? 2 : 0);

    Eigen::VectorXd flat(n_net + n_extra);
    flat.head(n_net) = net.params;
    if (train_b) flat[n_net] = cfg.b_init;
    if (train_ab) {
        flat[n_net] = cfg.alpha_init;
        flat[n_net + 1] = cfg.beta_init;
    }

    InputTransform tf;
    if (cfg.normalize_inputs) tf = make_transform(data);

    TrainReport report;
    report.config = cfg;
    report.savgol_window_used = data.savgol_window_used;
    report.spike_frames_dropped = data.spike_dropped;
    report.spike_poisoned_pixels = data.spike_poisoned;
    report.data_range = data.data_range;
    report.test_inputs = data.set.test_inputs;
    report.test_targets = data.set.test_targets;

    Tape tape;
    LossBreakdown last_breakdown;

    const auto build_loss = [&](const Eigen::VectorXd& p, Eigen::VectorXd& grad,
                                const Eigen::MatrixXd& din, const Eigen::VectorXd& dtg,
                                const Eigen::MatrixXd& coll) -> double {
        tape.clear();
        std::vector<Var> theta;
        theta.reserve(static_cast<std::size_t>(n_net));
        for (Eigen::Index i = 0; i < n_net; ++i) theta.push_back(tape.parameter(p[i]));
        CoeffVars coeffs;
        if (train_b) coeffs.b = tape.parameter(p[n_net]);
        if (train_ab) {
            coeffs.alpha = tape.parameter(p[n_net]);
            coeffs.beta = tape.parameter(p[n_net + 1]);
        }
        PinnLossVars lv = build_pinn_loss(tape, spec, theta, din, dtg, coll, data.physics,
                                          cfg.lambda_p, coeffs, tf);
        grad = tape.gradient(lv.total);
        last_breakdown = lv.breakdown;
        return lv.breakdown.total;
    };

    LossGradFn eval;
    std::unique_ptr<BatchStream> data_batches;
    std::unique_ptr<BatchStream> coll_batches;
    if (cfg.optimizer == OptimizerKind::adam) {
        data_batches = std::make_unique<BatchStream>(data.set.train_inputs.rows(),
                                                     cfg.seed_sample + 101);
        if (data.set.collocation.rows() > 0) {
            coll_batches = std::make_unique<BatchStream>(data.set.collocation.rows(),
                                                         cfg.seed_sample + 202);
        }
        eval = [&, batch = static_cast<std::size_t>(cfg.batch_size)](const Eigen::VectorXd& p,
                                                                     Eigen::VectorXd& grad) {
            const auto rows = data_batches->next(batch);
            Eigen::MatrixXd coll(0, data.input_dim);
            if (coll_batches) {
                coll = take_rows(data.set.collocation, coll_batches->next(batch));
            }
            return build_loss(p, grad, take_rows(data.set.train_inputs, rows),
                              take_rows(data.set.train_targets, rows), coll);
        };
    } else {
        eval = [&](const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
            return build_loss(p, grad, data.set.train_inputs, data.set.train_targets,
                              data.set.collocation);
        };
    }

    const Eigen::MatrixXd test_net_inputs = apply_transform(tf, data.set.test_inputs);
    Mlp probe{spec, net.params};
    MetricFn metric = [&](const Eigen::VectorXd& p) {
        probe.params = p.head(n_net);
        if (train_b) report.coeff_b.push_back(p[n_net]);
        if (train_ab) {
            report.coeff_alpha.push_back(p[n_net]);
            report.coeff_beta.push_back(p[n_net + 1]);
        }
        return rmse(predict_batch(probe, test_net_inputs).col(0), data.set.test_targets);
    };

    TerminationConfig term;
    term.tol_grad = cfg.tol_grad;
    term.tol_change = cfg.tol_change;
    term.max_iters = cfg.max_iters;

    Optimizer opt = cfg.optimizer == OptimizerKind::lbfgs
                        ? Optimizer{LbfgsState(cfg.learning_rate)}
                        : Optimizer{AdamState(cfg.learning_rate)};
    MinimizeResult result = minimize(term, opt, flat, eval, metric);

    report.curve = std::move(result.curve);
    report.stop_reason = to_string(result.reason);
    report.iterations_run = static_cast<int>(report.curve.size());
    report.final_loss = result.final_loss;
    report.final_params = result.final_params;
    report.final_breakdown = last_breakdown;

    probe.params = result.final_params.head(n_net);
    report.test_predictions = predict_batch(probe, test_net_inputs).col(0);
    report.final_rmse = rmse(report.test_predictions, data.set.test_targets);

    report.best_rmse = std::numeric_limits<double>::infinity();
    report.best_iteration = 0;
    for (const auto& rec : report.curve) {
        if (std::isfinite(rec.test_metric) && rec.test_metric < report.best_rmse) {
            report.best_rmse = rec.test_metric;
            report.best_iteration = rec.iteration;
        }
    }
    if (std::isfinite(report.final_rmse) && report.final_rmse <= report.best_rmse) {
        report.best_rmse = report.final_rmse;
        report.best_iteration = report.iterations_run;
    }
    if (!std::isfinite(report.best_rmse)) {
        report.best_rmse = report.final_rmse;  // nothing finite to report
    }

    if (train_b) report.learned_b = result.final_params[n_net];
    if (train_ab) {
        report.learned_alpha = result.final_params[n_net];
        report.learned_beta = result.final_params[n_net + 1];
    }

    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

nlohmann::ordered_json config_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["preset"] = cfg.preset_name;
    j["system"] = to_string(cfg.system);
    j["model"] = to_string(cfg.model);
    j["hidden"] = hidden_to_string(cfg.hidden);
    j["activation"] = to_string(cfg.activation);
    j["optimizer"] = to_string(cfg.optimizer);
    j["learning_rate"] = cfg.learning_rate;
    j["max_iters"] = cfg.max_iters;
    j["tol_grad"] = cfg.tol_grad;
    j["tol_change"] = cfg.tol_change;
    j["batch_size"] = cfg.batch_size;
    j["lambda_p"] = cfg.lambda_p;
    j["strategy"] = to_string(cfg.strategy);
    j["n_data"] = cfg.n_data;
    j["adjacent_fraction"] = cfg.adjacent_fraction;
    j["n_collocation"] = cfg.n_collocation;
    j["noise_sigma"] = cfg.noise_sigma;
    j["seed_init"] = cfg.seed_init;
    j["seed_sample"] = cfg.seed_sample;
    j["seed_noise"] = cfg.seed_noise;
    j["repeats"] = cfg.repeats;
    j["b_trainable"] = cfg.b_trainable;
    j["b_init"] = cfg.b_init;
    j["coeff_trainable"] = cfg.coeff_trainable;
    j["alpha_init"] = cfg.alpha_init;
    j["beta_init"] = cfg.beta_init;
    j["data_path"] = cfg.data_path;
    j["domain_proportion"] = cfg.domain_proportion;
    j["split"] = cfg.split.kind == SplitConfig::Kind::full ? "full" : "strided";
    j["train_stride"] = cfg.split.train_stride;
    j["test_stride"] = cfg.split.test_stride;
    j["split_offset"] = cfg.split.offset;
    j["subtract_offset"] = cfg.subtract_offset;
    j["denoise"] = cfg.denoise;
    j["spike_threshold"] = cfg.denoise_cfg.spike_threshold;
    j["savgol_window"] = cfg.denoise_cfg.savgol_window;
    j["savgol_order"] = cfg.denoise_cfg.savgol_order;
    j["frame_size"] = cfg.frame_size;
    j["normalize_inputs"] = cfg.normalize_inputs;
    j["sim_n_points"] = cfg.pendulum_sim.n_points;
    j["sim_t_end"] = cfg.pendulum_sim.t_end;
    j["sim_phi0"] = cfg.pendulum_sim.phi0;
    j["sim_omega0"] = cfg.pendulum_sim.omega0;
    j["sim_g"] = cfg.pendulum_sim.g;
    j["sim_L"] = cfg.pendulum_sim.L;
    j["sim_b"] = cfg.pendulum_sim.b;
    j["heat_nx"] = cfg.heat_sim.nx;
    j["heat_ny"] = cfg.heat_sim.ny;
    j["heat_dx"] = cfg.heat_sim.dx;
    j["heat_dy"] = cfg.heat_sim.dy;
    j["heat_dt"] = cfg.heat_sim.dt;
    j["heat_steps"] = cfg.heat_sim.steps;
    j["heat_alpha"] = cfg.heat_sim.alpha;
    j["heat_beta"] = cfg.heat_sim.beta;
    j["heat_init_amp"] = cfg.heat_init_amp;
    j["heat_init_sigma"] = cfg.heat_init_sigma;
    j["heat_init_sigma_y"] = cfg.heat_init_sigma_y;
    j["heat_init_base"] = cfg.heat_init_base;
    j["heat_init_row"] = cfg.heat_init_row;
    j["heat_init_col"] = cfg.heat_init_col;
    j["heat_source_power"] = cfg.heat_source_power;
    j["heat_source_row"] = cfg.heat_source_row;
    j["heat_source_col"] = cfg.heat_source_col;
    j["heat_frame_stride"] = cfg.heat_frame_stride;
    return j;
}

nlohmann::ordered_json report_json(const TrainReport& report, bool include_wall_time) {
    nlohmann::ordered_json j;
    j["config"] = config_json(report.config);
    j["stop_reason"] = report.stop_reason;
    j["iterations_run"] = report.iterations_run;
    j["final_loss"] = report.final_loss;
    j["final_rmse"] = report.final_rmse;
    j["best_rmse"] = report.best_rmse;
    j["best_iteration"] = report.best_iteration;
    j["final_data_loss"] = report.final_breakdown.data_loss;
    j["final_physics_loss"] = report.final_breakdown.physics_loss;
    j["lambda_p_effective"] = report.final_breakdown.lambda_p;
    j["data_range"] = report.data_range;
    if (report.config.denoise) {
        j["savgol_window_used"] = report.savgol_window_used;
        j["spike_frames_dropped"] = report.spike_frames_dropped;
        j["spike_poisoned_pixels"] = report.spike_poisoned_pixels;
    }
    nlohmann::ordered_json learned = nlohmann::ordered_json::object();
    if (report.config.b_trainable) learned["b"] = report.learned_b;
    if (report.config.coeff_trainable) {
        learned["alpha"] = report.learned_alpha;
        learned["beta"] = report.learned_beta;
    }
    j["learned"] = learned;

    nlohmann::ordered_json curve;
    std::vector<int> iters;
    std::vector<double> loss, metric;
    iters.reserve(report.curve.size());
    for (const auto& rec : report.curve) {
        iters.push_back(rec.iteration);
        loss.push_back(rec.train_loss);
        metric.push_back(rec.test_metric);
    }
    curve["iteration"] = iters;
    curve["train_loss"] = loss;
    curve["test_rmse"] = metric;
    j["curve"] = curve;

    nlohmann::ordered_json coeffs = nlohmann::ordered_json::object();
    if (!report.coeff_b.empty()) coeffs["b"] = report.coeff_b;
    if (!report.coeff_alpha.empty()) coeffs["alpha"] = report.coeff_alpha;
    if (!report.coeff_beta.empty()) coeffs["beta"] = report.coeff_beta;
    j["coefficients"] = coeffs;

    if (include_wall_time) j["wall_time_s"] = report.wall_time_s;
    return j;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void emit_plotdata(const TrainReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);

    std::string curve = "iteration,train_loss,test_rmse\n";
    for (const auto& rec : report.curve) {
        curve += std::to_string(rec.iteration);
        curve += ',';
        curve += fmt17(rec.train_loss);
        curve += ',';
        curve += fmt17(rec.test_metric);
        curve += '\n';
    }
    write_text(out_dir + "/curve.csv", curve);

    const bool heat = report.test_inputs.cols() == 3;
    std::string preds = heat ? "x,y,time_s,prediction_c,truth_c\n"
                             : "time_s,prediction_rad,truth_rad\n";
    for (Eigen::Index i = 0; i < report.test_inputs.rows(); ++i) {
        for (Eigen::Index d = 0; d < report.test_inputs.cols(); ++d) {
            preds += fmt17(report.test_inputs(i, d));
            preds += ',';
        }
        preds += fmt17(report.test_predictions[i]);
        preds += ',';
        preds += fmt17(report.test_targets[i]);
        preds += '\n';
    }
    write_text(out_dir + "/predictions.csv", preds);
}

void write_report(const TrainReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir + "/report.json", report_json(report).dump(2) + "\n");
    emit_plotdata(report, out_dir);
}

SweepTable run_sweep(const ExperimentConfig& base, const std::string& axis,
                     const std::vector<double>& values, int repeats, int jobs) {
    if (values.empty()) throw ConfigError("sweep: empty axis");
    if (repeats < 1) throw ConfigError("sweep: repeats must be >= 1");

    const auto apply_axis = [&axis](ExperimentConfig cfg, double v) {
        if (axis == "n_data") cfg.n_data = static_cast<int>(v);
        else if (axis == "frame-size") cfg.frame_size = static_cast<int>(v);
        else if (axis == "sigma") cfg.noise_sigma = v;
        else if (axis == "domain-proportion") cfg.domain_proportion = v;
        else throw ConfigError("unknown sweep axis: " + axis);
        return cfg;
    };

    SweepTable table;
    table.axis = axis;
    table.values = values;
    table.repeats = repeats;
    table.cells.resize(values.size() * static_cast<std::size_t>(repeats));

    const auto run_cell = [&](std::size_t vi, int r) {
        ExperimentConfig cfg = apply_axis(base, values[vi]);
        cfg.seed_init = base.seed_init + static_cast<std::uint64_t>(r);
        cfg.seed_sample = base.seed_sample + static_cast<std::uint64_t>(r);
        cfg.seed_noise = base.seed_noise + static_cast<std::uint64_t>(r);
        TrainReport rep = run_experiment(cfg);
        SweepCell cell;
        cell.axis_value = values[vi];
        cell.repeat = r;
        cell.final_rmse = rep.final_rmse;
        cell.best_rmse = rep.best_rmse;
        cell.best_iteration = rep.best_iteration;
        cell.iterations_run = rep.iterations_run;
        cell.stop_reason = rep.stop_reason;
        cell.learned_b = rep.learned_b;
        cell.learned_alpha = rep.learned_alpha;
        cell.learned_beta = rep.learned_beta;
        table.cells[vi * static_cast<std::size_t>(repeats) + static_cast<std::size_t>(r)] = cell;
    };

    if (jobs <= 1) {
        for (std::size_t vi = 0; vi < values.size(); ++vi) {
            for (int r = 0; r < repeats; ++r) run_cell(vi, r);
        }
    } else {
        std::vector<std::pair<std::size_t, int>> work;
        for (std::size_t vi = 0; vi < values.size(); ++vi) {
            for (int r = 0; r < repeats; ++r) work.emplace_back(vi, r);
        }
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> pool;
        for (int t = 0; t < jobs; ++t) {
            pool.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next.fetch_add(1); i < work.size(); i = next.fetch_add(1)) {
                    run_cell(work[i].first, work[i].second);
                }
            }));
        }
        for (auto& f : pool) f.get();
    }

    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        std::vector<double> finals, bests;
        for (int r = 0; r < repeats; ++r) {
            const auto& cell =
                table.cells[vi * static_cast<std::size_t>(repeats) + static_cast<std::size_t>(r)];
            finals.push_back(cell.final_rmse);
            bests.push_back(cell.best_rmse);
        }
        table.median_final_rmse.push_back(median(finals));
        table.median_best_rmse.push_back(median(bests));
    }
    return table;
}

nlohmann::ordered_json sweep_json(const SweepTable& table) {
    nlohmann::ordered_json j;
    j["axis"] = table.axis;
    j["values"] = table.values;
    j["repeats"] = table.repeats;
    j["median_final_rmse"] = table.median_final_rmse;
    j["median_best_rmse"] = table.median_best_rmse;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& cell : table.cells) {
        nlohmann::ordered_json c;
        c["axis_value"] = cell.axis_value;
        c["repeat"] = cell.repeat;
        c["final_rmse"] = cell.final_rmse;
        c["best_rmse"] = cell.best_rmse;
        c["best_iteration"] = cell.best_iteration;
        c["iterations_run"] = cell.iterations_run;
        c["stop_reason"] = cell.stop_reason;
        c["learned_b"] = cell.learned_b;
        c["learned_alpha"] = cell.learned_alpha;
        c["learned_beta"] = cell.learned_beta;
        cells.push_back(c);
    }
    j["cells"] = cells;
    return j;
}

void write_sweep(const SweepTable& table, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir + "/sweep.json", sweep_json(table).dump(2) + "\n");

    std::string csv = "axis_value,repeat,final_rmse,best_rmse,best_iteration,stop_reason\n";
    for (const auto& cell : table.cells) {
        csv += fmt17(cell.axis_value);
        csv += ',' + std::to_string(cell.repeat);
        csv += ',' + fmt17(cell.final_rmse);
        csv += ',' + fmt17(cell.best_rmse);
        csv += ',' + std::to_string(cell.best_iteration);
        csv += ',' + cell.stop_reason;
        csv += '\n';
    }
    write_text(out_dir + "/sweep.csv", csv);
}

}  // namespace pinnlab
