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

#include "pinnlab/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace pinnlab {

namespace {
constexpr double kCurvatureFloor = 1e-10;
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::max_iters: return "max-iters";
        case StopReason::tolerance: return "tolerance";
        case StopReason::blow_up: return "blow-up";
    }
    return "unknown";
}

Eigen::VectorXd lbfgs_direction(
    const Eigen::VectorXd& grad,
    const std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& history) {
    if (history.empty()) {
        return -grad;
    }
    const std::size_t m = history.size();
    std::vector<double> rho(m), alpha(m);
    Eigen::VectorXd q = grad;
    for (std::size_t k = m; k-- > 0;) {  // newest is at the back
        const auto& [s, y] = history[k];
        rho[k] = 1.0 / y.dot(s);
        alpha[k] = rho[k] * s.dot(q);
        q -= alpha[k] * y;
    }
    const auto& [s_new, y_new] = history.back();
    q *= s_new.dot(y_new) / y_new.squaredNorm();
    for (std::size_t k = 0; k < m; ++k) {
        const auto& [s, y] = history[k];
        const double beta = rho[k] * y.dot(q);
        q += (alpha[k] - beta) * s;
    }
    return -q;
}

StepOutcome lbfgs_step(LbfgsState& state, const Eigen::VectorXd& params, const LossGradFn& eval,
                       const TerminationConfig& term) {
    StepOutcome out;
    Eigen::VectorXd grad;
    const double loss = eval(params, grad);

    if (!std::isfinite(loss) || !grad.allFinite()) {
        out.params = params;
        out.loss = loss;
        out.blown = true;
        return out;
    }
    out.loss = loss;
    out.grad_inf_norm = grad.size() > 0 ? grad.lpNorm<Eigen::Infinity>() : 0.0;

    if (state.has_prev) {
        Eigen::VectorXd s = params - state.prev_params;
        Eigen::VectorXd y = grad - state.prev_grad;
        if (s.dot(y) > kCurvatureFloor) {
            state.history.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(state.history.size()) > state.history_size) {
                state.history.pop_front();
            }
        }
    }

    if (term.tol_grad > 0.0 && out.grad_inf_norm <= term.tol_grad) {
        out.params = params;
        out.terminated = true;
        return out;
    }

    const Eigen::VectorXd step = state.learning_rate * lbfgs_direction(grad, state.history);
    out.params = params + step;

    if (term.tol_change > 0.0 && state.has_prev_loss) {
        const double max_dparam = step.lpNorm<Eigen::Infinity>();
        const double dloss = std::abs(loss - state.prev_loss);
        if (max_dparam <= term.tol_change && dloss <= term.tol_change) {
            out.terminated = true;
        }
    }

    state.prev_params = params;
    state.prev_grad = std::move(grad);
    state.prev_loss = loss;
    state.has_prev = true;
    state.has_prev_loss = true;
    return out;
}

StepOutcome adam_step(AdamState& state, const Eigen::VectorXd& params, const LossGradFn& eval) {
    StepOutcome out;
    Eigen::VectorXd grad;
    const double loss = eval(params, grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
        out.params = params;
        out.loss = loss;
        out.blown = true;
        return out;
    }
    if (state.m.size() != params.size()) {
        state.m = Eigen::VectorXd::Zero(params.size());
        state.v = Eigen::VectorXd::Zero(params.size());
        state.step_count = 0;
    }
    ++state.step_count;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    const Eigen::VectorXd m_hat = state.m / c1;
    const Eigen::VectorXd v_hat = state.v / c2;
    out.params = params -
                 state.learning_rate *
                     (m_hat.array() / (v_hat.array().sqrt() + state.eps)).matrix();
    out.loss = loss;
    out.grad_inf_norm = grad.size() > 0 ? grad.lpNorm<Eigen::Infinity>() : 0.0;
    return out;
}

MinimizeResult minimize(const TerminationConfig& term, Optimizer& opt, Eigen::VectorXd params,
                        const LossGradFn& eval, const MetricFn& metric,
                        const IterCallback& callback) {
    MinimizeResult result;
    result.curve.reserve(static_cast<std::size_t>(std::max(term.max_iters, 0)));
    for (int iter = 1; iter <= term.max_iters; ++iter) {
        StepOutcome step = std::visit(
            [&](auto& state) -> StepOutcome {
                using State = std::decay_t<decltype(state)>;
                if constexpr (std::is_same_v<State, LbfgsState>) {
                    return lbfgs_step(state, params, eval, term);
                } else {
                    return adam_step(state, params, eval);
                }
            },
            opt);
        if (step.blown || !step.params.allFinite()) {
            result.reason = StopReason::blow_up;
            result.final_params = params;  // last valid point
            return result;
        }
        params = std::move(step.params);
        IterationRecord rec;
        rec.iteration = iter;
        rec.train_loss = step.loss;
        rec.test_metric = metric ? metric(params) : std::numeric_limits<double>::quiet_NaN();
        result.curve.push_back(rec);
        result.final_loss = step.loss;
        if (callback) callback(rec);
        if (step.terminated) {
            result.reason = StopReason::tolerance;
            result.final_params = std::move(params);
            return result;
        }
    }
    result.reason = StopReason::max_iters;
    result.final_params = std::move(params);
    return result;
}

}  // namespace pinnlab
