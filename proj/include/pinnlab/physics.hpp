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

#ifndef PINNLAB_PHYSICS_HPP
#define PINNLAB_PHYSICS_HPP

#include "pinnlab/jet.hpp"
#include "pinnlab/mlp.hpp"
#include "pinnlab/tape.hpp"

#include <Eigen/Core>
#include <optional>
#include <span>

namespace pinnlab {

struct PendulumParams {
    double g = 9.8;
    double L = 0.325;
    double b = 0.001;
    bool b_trainable = false;
};

struct HeatParams {
    double alpha = 10.0;
    double beta = 10.0;
    bool trainable = false;
};

enum class ResidualKind { pendulum, heat2d };

/// Which governing equation to enforce, its coefficients and whether the
/// coefficients are trainable (inverse problem).
struct PhysicsSpec {
    ResidualKind kind = ResidualKind::pendulum;
    PendulumParams pendulum;
    HeatParams heat;
};

struct LossBreakdown {
    double data_loss = 0.0;
    double physics_loss = 0.0;
    double total = 0.0;
    double lambda_p = 0.0;
};

/// (1/N) sum |pred_i - target_i|^2. Throws on empty or mismatched input.
double data_loss(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets);

/// Tape version of the mean squared data loss.
Var data_loss(std::span<const Var> predictions, const Eigen::VectorXd& targets);

inline double coeff_mul(double c, double x) { return c * x; }
inline Var coeff_mul(double c, const Var& x) { return mulc(x, c); }
inline Var coeff_mul(const Var& c, const Var& x) { return c * x; }

/// f_tt + b f_t + (g/L) sin f, from a jet of f over time. b may be a plain
/// value or a trainable Var.
template <class S, class B>
S pendulum_residual(const Jet2T<S>& jet, const B& b, double g_over_l) {
    return jet.d2 + coeff_mul(b, jet.d1) + mulc(sin(jet.v), g_over_l);
}

template <class S>
S pendulum_residual(const Jet2T<S>& jet, const PendulumParams& p) {
    return pendulum_residual(jet, p.b, p.g / p.L);
}

/// u_t - alpha u_xx - beta u_yy from jets over t, x and y at one point.
template <class S, class C>
S heat_residual(const Jet2T<S>& t_jet, const Jet2T<S>& x_jet, const Jet2T<S>& y_jet,
                const C& alpha, const C& beta) {
    return t_jet.d1 - coeff_mul(alpha, x_jet.d2) - coeff_mul(beta, y_jet.d2);
}

template <class S>
S heat_residual(const Jet2T<S>& t_jet, const Jet2T<S>& x_jet, const Jet2T<S>& y_jet,
                const HeatParams& p) {
    return heat_residual(t_jet, x_jet, y_jet, p.alpha, p.beta);
}

/// Trainable coefficients living on the tape; unset entries fall back to the
/// values in PhysicsSpec.
struct CoeffVars {
    std::optional<Var> b;
    std::optional<Var> alpha;
    std::optional<Var> beta;
};

/// Optional affine input map x_net = (x - shift) .* scale. Residual
/// derivatives stay with respect to the physical coordinates (the jet seed
/// carries the scale).
struct InputTransform {
    Eigen::VectorXd shift;
    Eigen::VectorXd scale;
    bool empty() const { return shift.size() == 0; }
};

struct PinnLossVars {
    Var total;
    LossBreakdown breakdown;
};

/// Assembles data loss + lambda_p * physics loss on the tape. Collocation
/// rows carry inputs only; with lambda_p = 0 or no collocation points the
/// total is the data loss exactly (the uninformed-network objective).
PinnLossVars build_pinn_loss(Tape& tape, const MlpSpec& spec, std::span<const Var> theta,
                             const Eigen::MatrixXd& data_inputs,
                             const Eigen::VectorXd& data_targets,
                             const Eigen::MatrixXd& collocation, const PhysicsSpec& physics,
                             double lambda_p, const CoeffVars& coeffs = {},
                             const InputTransform& transform = {});

/// Loss values for a concrete network (scratch tape under the hood).
LossBreakdown pinn_loss(const Mlp& net, const Eigen::MatrixXd& data_inputs,
                        const Eigen::VectorXd& data_targets, const Eigen::MatrixXd& collocation,
                        const PhysicsSpec& physics, double lambda_p);

}  // namespace pinnlab

#endif  // PINNLAB_PHYSICS_HPP
