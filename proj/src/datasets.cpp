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

#include "pinnlab/datasets.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace pinnlab {

namespace {

std::vector<Eigen::Index> linspace_indices(Eigen::Index size, int n) {
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(n));
    if (n == 1) {
        idx.push_back(0);
        return idx;
    }
    for (int k = 0; k < n; ++k) {
        idx.push_back(static_cast<Eigen::Index>(
            std::llround(static_cast<double>(k) * static_cast<double>(size - 1) / (n - 1))));
    }
    return idx;
}

void check_count(Eigen::Index size, int n, const char* who) {
    if (n < 1 || static_cast<Eigen::Index>(n) > size) {
        throw std::invalid_argument(std::string(who) + ": point count out of range");
    }
}

std::vector<Eigen::Index> strided_test_indices(Eigen::Index size, const SplitConfig& split,
                                               const std::vector<Eigen::Index>& train) {
    std::set<Eigen::Index> taken(train.begin(), train.end());
    std::vector<Eigen::Index> test;
    for (Eigen::Index i = split.offset; i < size; i += split.test_stride) {
        if (!taken.count(i)) test.push_back(i);
    }
    return test;
}

TrainingSet assemble_series(const Series1D& series, std::vector<Eigen::Index> train,
                            const SplitConfig& split, const std::string& strategy,
                            std::uint64_t seed) {
    TrainingSet set;
    set.train_indices = std::move(train);
    if (split.kind == SplitConfig::Kind::full) {
        set.test_indices.resize(static_cast<std::size_t>(series.size()));
        for (Eigen::Index i = 0; i < series.size(); ++i) {
            set.test_indices[static_cast<std::size_t>(i)] = i;
        }
    } else {
        set.test_indices = strided_test_indices(series.size(), split, set.train_indices);
    }

    const auto gather = [&](const std::vector<Eigen::Index>& idx, Eigen::MatrixXd& inputs,
                            Eigen::VectorXd& targets) {
        inputs.resize(static_cast<Eigen::Index>(idx.size()), 1);
        targets.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            inputs(static_cast<Eigen::Index>(k), 0) = series.times[idx[k]];
            targets[static_cast<Eigen::Index>(k)] = series.values[idx[k]];
        }
    };
    gather(set.train_indices, set.train_inputs, set.train_targets);
    gather(set.test_indices, set.test_inputs, set.test_targets);

    set.provenance.strategy = strategy;
    set.provenance.seed = seed;
    set.provenance.n_train = static_cast<int>(set.train_indices.size());
    set.provenance.n_test = static_cast<int>(set.test_indices.size());
    set.provenance.split = split.kind == SplitConfig::Kind::full ? "full" : "strided";
    return set;
}

}  // namespace

TrainingSet sample_linspace(const Series1D& series, int n, const SplitConfig& split) {
    check_count(series.size(), n, "sample_linspace");
    return assemble_series(series, linspace_indices(series.size(), n), split, "linspace", 0);
}

TrainingSet sample_uniform(const Series1D& series, int n, std::uint64_t seed,
                           const SplitConfig& split) {
    check_count(series.size(), n, "sample_uniform");
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(series.size()));
    for (Eigen::Index i = 0; i < series.size(); ++i) pool[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n; ++i) {  // partial Fisher-Yates, then sort the head
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i),
                                                        pool.size() - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
    }
    std::vector<Eigen::Index> idx(pool.begin(), pool.begin() + n);
    std::sort(idx.begin(), idx.end());
    return assemble_series(series, std::move(idx), split, "uniform", seed);
}

TrainingSet sample_adjacent(const Series1D& series, int n, const SplitConfig& split) {
    check_count(series.size(), n, "sample_adjacent");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    return assemble_series(series, std::move(idx), split, "adjacent", 0);
}

TrainingSet sample_adjacent_fraction(const Series1D& series, double fraction,
                                     const SplitConfig& split) {
    const int n = static_cast<int>(std::llround(fraction * static_cast<double>(series.size())));
    return sample_adjacent(series, std::clamp<int>(n, 1, static_cast<int>(series.size())), split);
}

TrainingSet sample_strided(const Series1D& series, const SplitConfig& split) {
    if (split.train_stride < 1) throw std::invalid_argument("sample_strided: bad train stride");
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = split.offset; i < series.size(); i += split.train_stride) {
        idx.push_back(i);
    }
    SplitConfig strided = split;
    strided.kind = SplitConfig::Kind::strided;
    return assemble_series(series, std::move(idx), strided, "strided", 0);
}

namespace {

// Points of one frame in row-major order: (x=col, y=row, t).
void append_frame_points(const FrameStack& stack, Eigen::Index frame, Eigen::MatrixXd& inputs,
                         Eigen::VectorXd& targets, Eigen::Index& row_out) {
    const Eigen::MatrixXd& f = stack.frames[static_cast<std::size_t>(frame)];
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
        for (Eigen::Index c = 0; c < f.cols(); ++c) {
            inputs(row_out, 0) = static_cast<double>(c);
            inputs(row_out, 1) = static_cast<double>(r);
            inputs(row_out, 2) = stack.timestamps[frame];
            targets[row_out] = f(r, c);
            ++row_out;
        }
    }
}

TrainingSet assemble_frames(const FrameStack& stack, std::vector<Eigen::Index> train_frames,
                            const SplitConfig& split, const std::string& strategy,
                            std::uint64_t seed) {
    TrainingSet set;
    set.train_indices = std::move(train_frames);
    std::vector<Eigen::Index> test_frames;
    if (split.kind == SplitConfig::Kind::full) {
        test_frames.resize(static_cast<std::size_t>(stack.size()));
        for (Eigen::Index i = 0; i < stack.size(); ++i) {
            test_frames[static_cast<std::size_t>(i)] = i;
        }
    } else {
        test_frames = strided_test_indices(stack.size(), split, set.train_indices);
    }
    set.test_indices = test_frames;

    const Eigen::Index px = stack.rows() * stack.cols();
    const auto gather = [&](const std::vector<Eigen::Index>& frames, Eigen::MatrixXd& inputs,
                            Eigen::VectorXd& targets) {
        inputs.resize(static_cast<Eigen::Index>(frames.size()) * px, 3);
        targets.resize(static_cast<Eigen::Index>(frames.size()) * px);
        Eigen::Index row = 0;
        for (Eigen::Index f : frames) append_frame_points(stack, f, inputs, targets, row);
    };
    gather(set.train_indices, set.train_inputs, set.train_targets);
    gather(set.test_indices, set.test_inputs, set.test_targets);

    set.provenance.strategy = strategy;
    set.provenance.seed = seed;
    set.provenance.n_train = static_cast<int>(set.train_targets.size());
    set.provenance.n_test = static_cast<int>(set.test_targets.size());
    set.provenance.split = split.kind == SplitConfig::Kind::full ? "full" : "strided";
    return set;
}

}  // namespace

TrainingSet sample_linspace_frames(const FrameStack& stack, int n_frames,
                                   const SplitConfig& split) {
    check_count(stack.size(), n_frames, "sample_linspace_frames");
    return assemble_frames(stack, linspace_indices(stack.size(), n_frames), split,
                           "linspace-frames", 0);
}

TrainingSet sample_uniform_points(const FrameStack& stack, int n_points, std::uint64_t seed,
                                  const SplitConfig& split) {
    const Eigen::Index px = stack.rows() * stack.cols();
    const Eigen::Index total = stack.size() * px;
    if (n_points < 1 || static_cast<Eigen::Index>(n_points) > total) {
        throw std::invalid_argument("sample_uniform_points: point count out of range");
    }

    std::vector<Eigen::Index> pool(static_cast<std::size_t>(total));
    for (Eigen::Index i = 0; i < total; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n_points; ++i) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i),
                                                        pool.size() - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
    }
    std::vector<Eigen::Index> flat(pool.begin(), pool.begin() + n_points);
    std::sort(flat.begin(), flat.end());

    TrainingSet set = assemble_frames(stack, {}, split, "uniform-points", seed);
    set.train_inputs.resize(n_points, 3);
    set.train_targets.resize(n_points);
    set.train_indices = flat;
    for (int k = 0; k < n_points; ++k) {
        const Eigen::Index frame = flat[static_cast<std::size_t>(k)] / px;
        const Eigen::Index cell = flat[static_cast<std::size_t>(k)] % px;
        const Eigen::Index r = cell / stack.cols();
        const Eigen::Index c = cell % stack.cols();
        set.train_inputs(k, 0) = static_cast<double>(c);
        set.train_inputs(k, 1) = static_cast<double>(r);
        set.train_inputs(k, 2) = stack.timestamps[frame];
        set.train_targets[k] = stack.frames[static_cast<std::size_t>(frame)](r, c);
    }
    set.provenance.n_train = n_points;
    return set;
}

void set_collocation_linspace(TrainingSet& set, double lo, double hi, int n) {
    if (n < 0) throw std::invalid_argument("set_collocation_linspace: negative count");
    set.collocation.resize(n, 1);
    for (int k = 0; k < n; ++k) {
        set.collocation(k, 0) = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
    }
    set.provenance.n_collocation = n;
}

void set_collocation_uniform(TrainingSet& set, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, int n, std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("set_collocation_uniform: negative count");
    if (lo.size() != hi.size()) throw std::invalid_argument("set_collocation_uniform: bad box");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    set.collocation.resize(n, lo.size());
    for (int k = 0; k < n; ++k) {
        for (Eigen::Index d = 0; d < lo.size(); ++d) {
            set.collocation(k, d) = lo[d] + (hi[d] - lo[d]) * unit(rng);
        }
    }
    set.provenance.n_collocation = n;
}

Series1D restrict_fraction(const Series1D& series, double fraction) {
    const auto n = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(series.size()))), 1,
        series.size());
    Series1D out;
    out.times = series.times.head(n);
    out.values = series.values.head(n);
    return out;
}

Eigen::VectorXd add_gaussian_noise(const Eigen::VectorXd& targets, double sigma,
                                   std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("add_gaussian_noise: negative sigma");
    if (sigma == 0.0) return targets;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    Eigen::VectorXd out = targets;
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += noise(rng);
    return out;
}

SpikeScan spike_scan(const FrameStack& stack, double threshold) {
    if (threshold <= 0.0) throw std::invalid_argument("spike_scan: threshold must be positive");
    if (stack.frames.empty()) throw std::invalid_argument("spike_scan: empty stack");
    const Eigen::Index n = stack.size();
    std::vector<char> flagged(static_cast<std::size_t>(n), 0);
    SpikeScan scan;
    for (Eigen::Index r = 0; r < stack.rows(); ++r) {
        for (Eigen::Index c = 0; c < stack.cols(); ++c) {
            double anchor = stack.frames[0](r, c);
            bool advanced = false;
            bool flagged_any = false;
            for (Eigen::Index f = 0; f < n; ++f) {
                const double m = stack.frames[static_cast<std::size_t>(f)](r, c);
                if (std::abs(anchor - m) > threshold) {
                    flagged[static_cast<std::size_t>(f)] = 1;
                    flagged_any = true;
                } else {
                    anchor = m;
                    if (f > 0) advanced = true;
                }
            }
            if (!advanced && flagged_any) ++scan.poisoned_pixels;
        }
    }
    for (Eigen::Index f = 0; f < n; ++f) {
        if (flagged[static_cast<std::size_t>(f)]) scan.indices.push_back(static_cast<int>(f));
    }
    scan.flagged_fraction = static_cast<double>(scan.indices.size()) / static_cast<double>(n);
    return scan;
}

std::vector<int> spike_indices(const FrameStack& stack, double threshold) {
    return spike_scan(stack, threshold).indices;
}

FrameStack drop_frames(const FrameStack& stack, const std::vector<int>& indices) {
    std::vector<char> drop(static_cast<std::size_t>(stack.size()), 0);
    for (int i : indices) {
        if (i < 0 || i >= stack.size()) throw std::out_of_range("drop_frames: index out of range");
        drop[static_cast<std::size_t>(i)] = 1;
    }
    FrameStack out;
    const auto kept = stack.size() - static_cast<Eigen::Index>(indices.size());
    out.timestamps.resize(kept);
    out.frames.reserve(static_cast<std::size_t>(kept));
    Eigen::Index k = 0;
    for (Eigen::Index f = 0; f < stack.size(); ++f) {
        if (drop[static_cast<std::size_t>(f)]) continue;
        out.timestamps[k++] = stack.timestamps[f];
        out.frames.push_back(stack.frames[static_cast<std::size_t>(f)]);
    }
    return out;
}

namespace {

// Vandermonde over the window with x scaled to [-1, 1]; decent conditioning
// even at window 401.
Eigen::MatrixXd savgol_design(int window, int order) {
    const int h = window / 2;
    Eigen::MatrixXd a(window, order + 1);
    for (int i = 0; i < window; ++i) {
        const double x = static_cast<double>(i - h) / h;
        double p = 1.0;
        for (int k = 0; k <= order; ++k) {
            a(i, k) = p;
            p *= x;
        }
    }
    return a;
}

}  // namespace

Eigen::VectorXd savgol_smooth(const Eigen::VectorXd& values, int window, int order) {
    if (window % 2 == 0) throw std::invalid_argument("savgol_smooth: window must be odd");
    if (window <= order) throw std::invalid_argument("savgol_smooth: window must exceed order");
    if (order < 0) throw std::invalid_argument("savgol_smooth: negative order");
    if (values.size() < window) {
        throw std::invalid_argument("savgol_smooth: series shorter than window");
    }

    const int h = window / 2;
    const Eigen::Index n = values.size();
    const Eigen::MatrixXd a = savgol_design(window, order);

    // Center weights: w = A (A^T A)^{-1} e0, so smoothed center = w . window.
    const Eigen::MatrixXd ata = a.transpose() * a;
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(order + 1);
    e0[0] = 1.0;
    const Eigen::VectorXd w = a * ata.ldlt().solve(e0);

    Eigen::VectorXd out(n);
    for (Eigen::Index i = h; i < n - h; ++i) {
        out[i] = w.dot(values.segment(i - h, window));
    }

    // One polynomial fit per edge, evaluated across the edge region.
    const auto qr = a.colPivHouseholderQr();
    const Eigen::VectorXd c_head = qr.solve(values.head(window));
    const Eigen::VectorXd c_tail = qr.solve(values.tail(window));
    const auto eval_poly = [&](const Eigen::VectorXd& c, double x) {
        double v = 0.0, p = 1.0;
        for (Eigen::Index k = 0; k < c.size(); ++k) {
            v += c[k] * p;
            p *= x;
        }
        return v;
    };
    for (Eigen::Index i = 0; i < h; ++i) {
        out[i] = eval_poly(c_head, static_cast<double>(i - h) / h);
        out[n - 1 - i] = eval_poly(c_tail, static_cast<double>(h - i) / h);
    }
    return out;
}

FrameStack savgol_smooth_stack(const FrameStack& stack, int window, int order) {
    FrameStack out = stack;
    const Eigen::Index n = stack.size();
    Eigen::VectorXd series(n);
    for (Eigen::Index r = 0; r < stack.rows(); ++r) {
        for (Eigen::Index c = 0; c < stack.cols(); ++c) {
            for (Eigen::Index f = 0; f < n; ++f) {
                series[f] = stack.frames[static_cast<std::size_t>(f)](r, c);
            }
            const Eigen::VectorXd smooth = savgol_smooth(series, window, order);
            for (Eigen::Index f = 0; f < n; ++f) {
                out.frames[static_cast<std::size_t>(f)](r, c) = smooth[f];
            }
        }
    }
    return out;
}

FrameStack reduce_frame(const FrameStack& stack, int k) {
    if (k < 1 || k > std::min(stack.rows(), stack.cols())) {
        throw std::invalid_argument("reduce_frame: crop size out of range");
    }
    const Eigen::Index r0 = (stack.rows() - k) / 2;
    const Eigen::Index c0 = (stack.cols() - k) / 2;
    FrameStack out;
    out.timestamps = stack.timestamps;
    out.frames.reserve(stack.frames.size());
    for (const auto& f : stack.frames) {
        out.frames.push_back(f.block(r0, c0, k, k));
    }
    return out;
}

Series1D remove_offset(const Series1D& series) {
    Series1D out = series;
    if (series.size() == 0) return out;
    const double mid = (series.values.maxCoeff() + series.values.minCoeff()) / 2.0;
    out.values.array() -= mid;
    return out;
}

namespace {

double parse_double(const std::string& field, int line) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0') {
        throw ParseError("malformed number '" + field + "'", line);
    }
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream s(line);
    while (std::getline(s, cur, ',')) fields.push_back(cur);
    return fields;
}

void write_float(std::ofstream& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

}  // namespace

void save_pendulum_csv(const std::string& path, const Series1D& series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_pendulum_csv: cannot open " + path);
    out << "time_s,angle_rad\n";
    for (Eigen::Index i = 0; i < series.size(); ++i) {
        write_float(out, series.times[i]);
        out << ',';
        write_float(out, series.values[i]);
        out << '\n';
    }
    if (!out) throw std::runtime_error("save_pendulum_csv: write failed for " + path);
}

Series1D load_pendulum_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_pendulum_csv: cannot open " + path);
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line) || line != "time_s,angle_rad") {
        throw ParseError("expected header 'time_s,angle_rad'", 1);
    }
    ++line_no;
    std::vector<double> times, values;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 2) throw ParseError("expected 2 fields", line_no);
        times.push_back(parse_double(fields[0], line_no));
        values.push_back(parse_double(fields[1], line_no));
        if (times.size() > 1 && times[times.size() - 2] >= times.back()) {
            throw ParseError("times must be strictly increasing", line_no);
        }
    }
    if (times.empty()) throw ParseError("no samples in file", line_no);
    Series1D series;
    series.times = Eigen::Map<Eigen::VectorXd>(times.data(), static_cast<Eigen::Index>(times.size()));
    series.values =
        Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    return series;
}

void save_frames_csv(const std::string& path, const FrameStack& stack) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_frames_csv: cannot open " + path);
    out << "time_s,row,col,value_c\n";
    for (Eigen::Index f = 0; f < stack.size(); ++f) {
        const Eigen::MatrixXd& frame = stack.frames[static_cast<std::size_t>(f)];
        for (Eigen::Index r = 0; r < frame.rows(); ++r) {
            for (Eigen::Index c = 0; c < frame.cols(); ++c) {
                write_float(out, stack.timestamps[f]);
                out << ',' << r << ',' << c << ',';
                write_float(out, frame(r, c));
                out << '\n';
            }
        }
    }
    if (!out) throw std::runtime_error("save_frames_csv: write failed for " + path);
}

FrameStack load_frames_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_frames_csv: cannot open " + path);
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line) || line != "time_s,row,col,value_c") {
        throw ParseError("expected header 'time_s,row,col,value_c'", 1);
    }
    ++line_no;

    struct Cell {
        double t;
        long r, c;
        double v;
    };
    std::vector<Cell> cells;
    long max_r = -1, max_c = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 4) throw ParseError("expected 4 fields", line_no);
        Cell cell{parse_double(fields[0], line_no), 0, 0, parse_double(fields[3], line_no)};
        cell.r = static_cast<long>(parse_double(fields[1], line_no));
        cell.c = static_cast<long>(parse_double(fields[2], line_no));
        if (cell.r < 0 || cell.c < 0) throw ParseError("negative pixel index", line_no);
        max_r = std::max(max_r, cell.r);
        max_c = std::max(max_c, cell.c);
        cells.push_back(cell);
    }
    if (cells.empty()) throw ParseError("no samples in file", line_no);

    const Eigen::Index ny = max_r + 1;
    const Eigen::Index nx = max_c + 1;
    const std::size_t px = static_cast<std::size_t>(ny * nx);
    if (cells.size() % px != 0) {
        throw ParseError("cell count is not a whole number of frames", line_no);
    }
    const std::size_t n_frames = cells.size() / px;

    FrameStack stack;
    stack.timestamps.resize(static_cast<Eigen::Index>(n_frames));
    stack.frames.assign(n_frames, Eigen::MatrixXd::Zero(ny, nx));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::size_t f = i / px;
        const Cell& cell = cells[i];
        if (cell.t != cells[f * px].t) {
            throw ParseError("rows of one frame must share a timestamp", static_cast<int>(i) + 2);
        }
        stack.timestamps[static_cast<Eigen::Index>(f)] = cell.t;
        stack.frames[f](cell.r, cell.c) = cell.v;
    }
    for (Eigen::Index f = 1; f < stack.size(); ++f) {
        if (stack.timestamps[f] < stack.timestamps[f - 1]) {
            throw ParseError("timestamps must be non-decreasing", 0);
        }
    }
    return stack;
}

}  // namespace pinnlab
