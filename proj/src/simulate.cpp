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

#include "pinnlab/simulate.hpp"

#include <cmath>
#include <stdexcept>

namespace pinnlab {

PendulumSolution euler_cromer(const PendulumSimConfig& config) {
    if (config.n_points < 2) throw std::invalid_argument("euler_cromer: need n_points >= 2");
    if (config.t_end <= 0.0) throw std::invalid_argument("euler_cromer: t_end must be positive");
    if (config.g <= 0.0 || config.L <= 0.0) {
        throw std::invalid_argument("euler_cromer: g and L must be positive");
    }
    const int n = config.n_points;
    const double dt = config.t_end / (n - 1);
    const double g_over_l = config.g / config.L;

    PendulumSolution sol;
    sol.config = config;
    sol.series.times.resize(n);
    sol.series.values.resize(n);
    sol.omega.resize(n);

    double phi = config.phi0;
    double omega = config.omega0;
    sol.series.times[0] = 0.0;
    sol.series.values[0] = phi;
    sol.omega[0] = omega;
    for (int i = 1; i < n; ++i) {
        omega = omega - config.b * omega - g_over_l * std::sin(phi) * dt;
        phi = phi + omega * dt;
        sol.series.times[i] = i * dt;
        sol.series.values[i] = phi;
        sol.omega[i] = omega;
    }
    return sol;
}

Eigen::VectorXd pendulum_energy(const PendulumSolution& solution) {
    const double L = solution.config.L;
    const double g = solution.config.g;
    const Eigen::ArrayXd omega = solution.omega.array();
    const Eigen::ArrayXd phi = solution.series.values.array();
    return (0.5 * L * L * omega.square() + g * L * (1.0 - phi.cos())).matrix();
}

Eigen::MatrixXd gaussian_field(int ny, int nx, double center_row, double center_col, double sigma,
                               double amplitude, double base) {
    return gaussian_field(ny, nx, center_row, center_col, sigma, sigma, amplitude, base);
}

Eigen::MatrixXd gaussian_field(int ny, int nx, double center_row, double center_col,
                               double sigma_row, double sigma_col, double amplitude,
                               double base) {
    Eigen::MatrixXd field(ny, nx);
    const double inv_r = 1.0 / (2.0 * sigma_row * sigma_row);
    const double inv_c = 1.0 / (2.0 * sigma_col * sigma_col);
    for (int r = 0; r < ny; ++r) {
        for (int c = 0; c < nx; ++c) {
            const double dr = r - center_row;
            const double dc = c - center_col;
            field(r, c) = base + amplitude * std::exp(-(dr * dr * inv_r + dc * dc * inv_c));
        }
    }
    return field;
}

FrameStack fd_heat_solve(const HeatSimConfig& config) {
    if (config.nx < 2 || config.ny < 2) {
        throw std::invalid_argument("fd_heat_solve: grid must be at least 2x2");
    }
    if (config.initial.rows() != config.ny || config.initial.cols() != config.nx) {
        throw std::invalid_argument("fd_heat_solve: initial field shape does not match grid");
    }
    const double cfl_limit =
        1.0 / (2.0 * (config.alpha / (config.dx * config.dx) + config.beta / (config.dy * config.dy)));
    if (config.dt > cfl_limit) {
        throw std::invalid_argument("fd_heat_solve: dt violates the explicit-scheme CFL limit");
    }
    if (config.source) {
        if (config.source->row < 0 || config.source->row >= config.ny || config.source->col < 0 ||
            config.source->col >= config.nx) {
            throw std::invalid_argument("fd_heat_solve: source cell outside the grid");
        }
    }

    const double lx = config.alpha * config.dt / (config.dx * config.dx);
    const double ly = config.beta * config.dt / (config.dy * config.dy);
    const int nx = config.nx;
    const int ny = config.ny;

    FrameStack stack;
    stack.timestamps.resize(config.steps + 1);
    stack.frames.reserve(static_cast<std::size_t>(config.steps) + 1);
    Eigen::MatrixXd u = config.initial;
    Eigen::MatrixXd next(ny, nx);
    stack.timestamps[0] = 0.0;
    stack.frames.push_back(u);

    auto at = [&](const Eigen::MatrixXd& f, int r, int c) {
        // ghost cell mirrored across the face: zero flux, sum conserved exactly
        if (r < 0) r = 0;
        if (r >= ny) r = ny - 1;
        if (c < 0) c = 0;
        if (c >= nx) c = nx - 1;
        return f(r, c);
    };

    for (int step = 1; step <= config.steps; ++step) {
        for (int r = 0; r < ny; ++r) {
            for (int c = 0; c < nx; ++c) {
                const double center = u(r, c);
                const double d2x = at(u, r, c - 1) - 2.0 * center + at(u, r, c + 1);
                const double d2y = at(u, r - 1, c) - 2.0 * center + at(u, r + 1, c);
                next(r, c) = center + lx * d2x + ly * d2y;
            }
        }
        if (config.source) {
            next(config.source->row, config.source->col) += config.source->power * config.dt;
        }
        u.swap(next);
        stack.timestamps[step] = step * config.dt;
        stack.frames.push_back(u);
    }
    return stack;
}

}  // namespace pinnlab
