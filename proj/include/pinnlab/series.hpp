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

#ifndef PINNLAB_SERIES_HPP
#define PINNLAB_SERIES_HPP

#include <Eigen/Core>
#include <vector>

namespace pinnlab {

/// Scalar time series: strictly increasing times, one value per time.
struct Series1D {
    Eigen::VectorXd times;
    Eigen::VectorXd values;

    Eigen::Index size() const { return times.size(); }
};

/// Stack of equally-shaped 2D frames with non-decreasing timestamps.
/// Frames are row-major grids: frame(row, col).
struct FrameStack {
    Eigen::VectorXd timestamps;
    std::vector<Eigen::MatrixXd> frames;

    Eigen::Index size() const { return timestamps.size(); }
    Eigen::Index rows() const { return frames.empty() ? 0 : frames.front().rows(); }
    Eigen::Index cols() const { return frames.empty() ? 0 : frames.front().cols(); }
};

}  // namespace pinnlab

#endif  // PINNLAB_SERIES_HPP
