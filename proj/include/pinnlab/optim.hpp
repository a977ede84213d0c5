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

#ifndef PINNLAB_OPTIM_HPP
#define PINNLAB_OPTIM_HPP

#include <Eigen/Core>
#include <deque>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace pinnlab {

/// Evaluates loss and gradient at a parameter point. Mini-batch optimizers
/// may be handed an evaluator that draws a fresh batch on every call.
using LossGradFn = std::function<double(const Eigen::VectorXd& params, Eigen::VectorXd& grad)>;

/// Setting both tolerances to 0 disables early termination.
struct TerminationConfig {
    double tol_grad = 1e-7;    // infinity norm of the gradient
    double tol_change = 1e-9;  // both |delta loss| and max |delta param|
    int max_iters = 2000;
};

enum class StopReason { max_iters, tolerance, blow_up };

std::string to_string(StopReason r);

struct LbfgsState {
    explicit LbfgsState(double lr, int history = 10) : learning_rate(lr), history_size(history) {}

    double learning_rate;
    int history_size;
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> history;  // (s, y) pairs
    Eigen::VectorXd prev_params;
    Eigen::VectorXd prev_grad;
    double prev_loss = 0.0;
    bool has_prev = false;
    bool has_prev_loss = false;
};

struct AdamState {
    explicit AdamState(double lr) : learning_rate(lr) {}

    double learning_rate;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long step_count = 0;
};

struct StepOutcome {
    Eigen::VectorXd params;
    double loss = 0.0;
    double grad_inf_norm = 0.0;
    bool terminated = false;
    bool blown = false;
};

/// Two-loop recursion with gamma scaling from the newest stored pair.
/// Empty history returns the bare negative gradient.
Eigen::VectorXd lbfgs_direction(
    const Eigen::VectorXd& grad,
    const std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& history);

/// One quasi-Newton update with fixed step length = learning rate (no line
/// search). Curvature pairs with s.y <= 1e-10 are skipped. Termination per
/// TerminationConfig; non-finite loss or gradient reports a blow-up instead
/// of throwing.
StepOutcome lbfgs_step(LbfgsState& state, const Eigen::VectorXd& params, const LossGradFn& eval,
                       const TerminationConfig& term);

/// Standard Adam update with bias correction.
StepOutcome adam_step(AdamState& state, const Eigen::VectorXd& params, const LossGradFn& eval);

using Optimizer = std::variant<LbfgsState, AdamState>;

struct IterationRecord {
    int iteration = 0;
    double train_loss = 0.0;
    double test_metric = 0.0;
};

struct MinimizeResult {
    Eigen::VectorXd final_params;
    std::vector<IterationRecord> curve;
    StopReason reason = StopReason::max_iters;
    double final_loss = 0.0;
};

using MetricFn = std::function<double(const Eigen::VectorXd& params)>;
using IterCallback = std::function<void(const IterationRecord&)>;

/// Drives the optimizer until termination, blow-up or max_iters. `metric`
/// (typically test RMSE at the updated parameters) fills each record's
/// test_metric; on blow-up the curve keeps only the valid iterations.
MinimizeResult minimize(const TerminationConfig& term, Optimizer& opt, Eigen::VectorXd params,
                        const LossGradFn& eval, const MetricFn& metric = {},
                        const IterCallback& callback = {});

}  // namespace pinnlab

#endif  // PINNLAB_OPTIM_HPP
