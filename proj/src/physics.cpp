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

#include "pinnlab/physics.hpp"

#include <stdexcept>
#include <vector>

namespace pinnlab {

double data_loss(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets) {
    if (predictions.size() == 0) throw std::invalid_argument("data_loss: empty input");
    if (predictions.size() != targets.size()) {
        throw std::invalid_argument("data_loss: length mismatch");
    }
    return (predictions - targets).squaredNorm() / static_cast<double>(predictions.size());
}

Var data_loss(std::span<const Var> predictions, const Eigen::VectorXd& targets) {
    if (predictions.empty()) throw std::invalid_argument("data_loss: empty input");
    if (static_cast<Eigen::Index>(predictions.size()) != targets.size()) {
        throw std::invalid_argument("data_loss: length mismatch");
    }
    Var sum = square(addc(predictions[0], -targets[0]));
    for (std::size_t i = 1; i < predictions.size(); ++i) {
        sum = sum + square(addc(predictions[i], -targets[static_cast<Eigen::Index>(i)]));
    }
    return mulc(sum, 1.0 / static_cast<double>(predictions.size()));
}

PinnLossVars build_pinn_loss(Tape& tape, const MlpSpec& spec, std::span<const Var> theta,
                             const Eigen::MatrixXd& data_inputs,
                             const Eigen::VectorXd& data_targets,
                             const Eigen::MatrixXd& collocation, const PhysicsSpec& physics,
                             double lambda_p, const CoeffVars& coeffs,
                             const InputTransform& transform) {
    if (spec.output_dim != 1) {
        throw std::invalid_argument("build_pinn_loss: scalar-output networks only");
    }
    if (data_inputs.rows() == 0) {
        throw std::invalid_argument("build_pinn_loss: need at least one data point");
    }
    if (data_inputs.rows() != data_targets.size()) {
        throw std::invalid_argument("build_pinn_loss: data point/target count mismatch");
    }

    std::vector<double> x(static_cast<std::size_t>(data_inputs.cols()));
    const auto load_row = [&](const Eigen::MatrixXd& m, Eigen::Index i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            double v = m(i, j);
            if (!transform.empty()) v = (v - transform.shift[j]) * transform.scale[j];
            x[static_cast<std::size_t>(j)] = v;
        }
    };
    const auto seed_scale = [&](int dir) {
        return transform.empty() ? 1.0 : transform.scale[dir];
    };

    Var dsum;
    for (Eigen::Index i = 0; i < data_inputs.rows(); ++i) {
        load_row(data_inputs, i);
        const Var pred = forward(spec, theta, x)[0];
        const Var sq = square(addc(pred, -data_targets[i]));
        dsum = i == 0 ? sq : dsum + sq;
    }
    const Var data = mulc(dsum, 1.0 / static_cast<double>(data_inputs.rows()));

    PinnLossVars out;
    out.breakdown.lambda_p = lambda_p;
    const Eigen::Index n_p = collocation.rows();
    if (lambda_p == 0.0 || n_p == 0) {
        out.total = data;
        out.breakdown.data_loss = data.value();
        out.breakdown.physics_loss = 0.0;
        out.breakdown.total = out.total.value();
        return out;
    }

    Var psum;
    for (Eigen::Index i = 0; i < n_p; ++i) {
        load_row(collocation, i);
        Var residual;
        if (physics.kind == ResidualKind::pendulum) {
            const Jet2 jet = forward_jet(spec, tape, theta, x, 0, seed_scale(0))[0];
            const double g_over_l = physics.pendulum.g / physics.pendulum.L;
            residual = coeffs.b ? pendulum_residual(jet, *coeffs.b, g_over_l)
                                : pendulum_residual(jet, physics.pendulum.b, g_over_l);
        } else {
            // inputs ordered (x, y, t)
            const Jet2 jx = forward_jet(spec, tape, theta, x, 0, seed_scale(0))[0];
            const Jet2 jy = forward_jet(spec, tape, theta, x, 1, seed_scale(1))[0];
            const Jet2 jt = forward_jet(spec, tape, theta, x, 2, seed_scale(2))[0];
            if (coeffs.alpha && coeffs.beta) {
                residual = heat_residual(jt, jx, jy, *coeffs.alpha, *coeffs.beta);
            } else {
                residual = heat_residual(jt, jx, jy, physics.heat.alpha, physics.heat.beta);
            }
        }
        const Var sq = square(residual);
        psum = i == 0 ? sq : psum + sq;
    }
    const Var phys = mulc(psum, 1.0 / static_cast<double>(n_p));

    out.total = data + mulc(phys, lambda_p);
    out.breakdown.data_loss = data.value();
    out.breakdown.physics_loss = phys.value();
    out.breakdown.total = out.total.value();
    return out;
}

LossBreakdown pinn_loss(const Mlp& net, const Eigen::MatrixXd& data_inputs,
                        const Eigen::VectorXd& data_targets, const Eigen::MatrixXd& collocation,
                        const PhysicsSpec& physics, double lambda_p) {
    Tape tape;
    const std::vector<Var> theta = register_params(tape, net.params);
    CoeffVars coeffs;
    if (physics.kind == ResidualKind::pendulum && physics.pendulum.b_trainable) {
        coeffs.b = tape.parameter(physics.pendulum.b);
    }
    if (physics.kind == ResidualKind::heat2d && physics.heat.trainable) {
        coeffs.alpha = tape.parameter(physics.heat.alpha);
        coeffs.beta = tape.parameter(physics.heat.beta);
    }
    return build_pinn_loss(tape, net.spec, theta, data_inputs, data_targets, collocation, physics,
                           lambda_p, coeffs)
        .breakdown;
}

}  // namespace pinnlab
