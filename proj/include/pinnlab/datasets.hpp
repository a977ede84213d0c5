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

#ifndef PINNLAB_DATASETS_HPP
#define PINNLAB_DATASETS_HPP

#include "pinnlab/series.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinnlab {

/// How the test split is taken from the source data. `full` evaluates against
/// every source point (the reference-solution convention); `strided` takes
/// every test_stride-th index, minus any index already used for training.
struct SplitConfig {
    enum class Kind { full, strided };
    Kind kind = Kind::full;
    int train_stride = 7;
    int test_stride = 23;
    int offset = 0;
};

struct Provenance {
    std::string strategy;
    std::uint64_t seed = 0;
    int n_train = 0;
    int n_collocation = 0;
    int n_test = 0;
    std::string split = "full";
};

/// Labeled train/test points plus unlabeled collocation inputs. For strided
/// splits, train and test index sets over the source are disjoint.
struct TrainingSet {
    Eigen::MatrixXd train_inputs;
    Eigen::VectorXd train_targets;
    Eigen::MatrixXd collocation;
    Eigen::MatrixXd test_inputs;
    Eigen::VectorXd test_targets;
    std::vector<Eigen::Index> train_indices;
    std::vector<Eigen::Index> test_indices;
    Provenance provenance;
};

// --- sampling strategies ------------------------------------------------

/// Evenly strided indices including both endpoints.
TrainingSet sample_linspace(const Series1D& series, int n, const SplitConfig& split = {});

/// n distinct indices drawn without replacement, sorted ascending.
TrainingSet sample_uniform(const Series1D& series, int n, std::uint64_t seed,
                           const SplitConfig& split = {});

/// The first n points of the domain.
TrainingSet sample_adjacent(const Series1D& series, int n, const SplitConfig& split = {});

/// The first round(fraction * size) points.
TrainingSet sample_adjacent_fraction(const Series1D& series, double fraction,
                                     const SplitConfig& split = {});

/// Train = every train_stride-th index, test = every test_stride-th index
/// minus the train set.
TrainingSet sample_strided(const Series1D& series, const SplitConfig& split);

/// Frame-stack variants; points are (x=col, y=row, t) with the value as target.
TrainingSet sample_linspace_frames(const FrameStack& stack, int n_frames,
                                   const SplitConfig& split = {});
TrainingSet sample_uniform_points(const FrameStack& stack, int n_points, std::uint64_t seed,
                                  const SplitConfig& split = {});

void set_collocation_linspace(TrainingSet& set, double lo, double hi, int n);
void set_collocation_uniform(TrainingSet& set, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, int n, std::uint64_t seed);

/// Keep the first round(fraction * size) samples (domain-proportion studies).
Series1D restrict_fraction(const Series1D& series, double fraction);

/// target_i + N(0, sigma^2), seeded draw per entry.
Eigen::VectorXd add_gaussian_noise(const Eigen::VectorXd& targets, double sigma,
                                   std::uint64_t seed);

// --- denoising ------------------------------------------------------------

struct DenoiseConfig {
    double spike_threshold = 100.0;
    int savgol_window = 401;  // must be odd; an even request is bumped up by one
    int savgol_order = 3;
};

/// Per pixel: anchor at the first measurement; flag a frame when the current
/// measurement deviates from the anchor by more than the threshold, otherwise
/// move the anchor. Returns the sorted union of flagged frame indices.
std::vector<int> spike_indices(const FrameStack& stack, double threshold);

struct SpikeScan {
    std::vector<int> indices;
    int poisoned_pixels = 0;  // anchor never advanced past the first frame
    double flagged_fraction = 0.0;
};

SpikeScan spike_scan(const FrameStack& stack, double threshold);

/// Remove the given frame indices (and their timestamps), preserving order.
FrameStack drop_frames(const FrameStack& stack, const std::vector<int>& indices);

/// Least-squares polynomial smoothing over centered windows; the first/last
/// window is fit once and evaluated across the edge region.
Eigen::VectorXd savgol_smooth(const Eigen::VectorXd& values, int window, int order);

/// Savitzky-Golay along time for every pixel of the stack.
FrameStack savgol_smooth_stack(const FrameStack& stack, int window, int order);

/// Centered k x k crop; odd remainders bias toward the top-left.
FrameStack reduce_frame(const FrameStack& stack, int k);

/// Subtract (max + min) / 2 of the value column.
Series1D remove_offset(const Series1D& series);

// --- files ------------------------------------------------------------------
// Pendulum CSV: header `time_s,angle_rad`, one sample per line.
// Frame CSV (long form): header `time_s,row,col,value_c`, rows grouped by
// timestamp, row-major within a frame. Floats carry 17 significant digits.

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, int line_number)
        : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
          line(line_number) {}
    int line;
};

void save_pendulum_csv(const std::string& path, const Series1D& series);
Series1D load_pendulum_csv(const std::string& path);
void save_frames_csv(const std::string& path, const FrameStack& stack);
FrameStack load_frames_csv(const std::string& path);

}  // namespace pinnlab

#endif  // PINNLAB_DATASETS_HPP
