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

#ifndef PINNLAB_SIMULATE_HPP
#define PINNLAB_SIMULATE_HPP

#include "pinnlab/series.hpp"

#include <Eigen/Core>
#include <optional>

namespace pinnlab {

/// Euler-Cromer pendulum run: n linearly spaced time points over [0, t_end],
/// so dt = t_end / (n - 1). b is the per-step damping factor applied to the
/// angular velocity.
struct PendulumSimConfig {
    int n_points = 1500;
    double t_end = 6.0;
    double phi0 = -1.5707963267948966;  // -pi/2
    double omega0 = 0.0;
    double g = 9.8;
    double L = 0.325;
    double b = 0.001;
};

struct PendulumSolution {
    Series1D series;        // angular displacement phi(t)
    Eigen::VectorXd omega;  // angular velocity, kept for the energy oracle
    PendulumSimConfig config;
};

/// omega_{i+1} = omega_i - b*omega_i - (g/L) sin(phi_i) dt
/// phi_{i+1}   = phi_i + omega_{i+1} dt   (updated velocity in the position step)
PendulumSolution euler_cromer(const PendulumSimConfig& config);

/// E_i = 1/2 L^2 omega_i^2 + g L (1 - cos phi_i), per unit mass.
Eigen::VectorXd pendulum_energy(const PendulumSolution& solution);

struct HeatSource {
    int row = 0;
    int col = 0;
    double power = 0.0;  // added to the cell as power*dt per step
};

/// Explicit 5-point-stencil solver with insulated (zero-flux) boundaries via
/// mirrored ghost cells. The initial field must be ny x nx; stability requires
/// dt <= 1 / (2 (alpha/dx^2 + beta/dy^2)).
struct HeatSimConfig {
    int nx = 8;
    int ny = 8;
    double dx = 1.0;
    double dy = 1.0;
    double dt = 0.02;
    int steps = 250;
    double alpha = 10.0;
    double beta = 10.0;
    std::optional<HeatSource> source;
    Eigen::MatrixXd initial;
};

/// Gaussian bump on a base level; convenience initial condition. The
/// anisotropic overload takes separate row/column widths.
Eigen::MatrixXd gaussian_field(int ny, int nx, double center_row, double center_col, double sigma,
                               double amplitude, double base);
Eigen::MatrixXd gaussian_field(int ny, int nx, double center_row, double center_col,
                               double sigma_row, double sigma_col, double amplitude, double base);

/// Returns steps+1 frames (the initial field plus one per step), timestamps
/// i*dt. Throws std::invalid_argument on a CFL violation before stepping.
FrameStack fd_heat_solve(const HeatSimConfig& config);

}  // namespace pinnlab

#endif  // PINNLAB_SIMULATE_HPP
