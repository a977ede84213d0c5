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

#ifndef PINNLAB_MLP_HPP
#define PINNLAB_MLP_HPP

#include "pinnlab/jet.hpp"
#include "pinnlab/tape.hpp"

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

namespace pinnlab {

enum class Activation { sine, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct MlpSpec {
    int input_dim = 1;
    std::vector<int> hidden;
    int output_dim = 1;
    Activation activation = Activation::sine;
};

/// Flat parameter length: per layer, fan_in*fan_out weights then fan_out biases.
std::size_t param_count(const MlpSpec& spec);

/// Multilayer perceptron over a flat parameter vector. Hidden layers get the
/// activation, the output layer is linear. Layout per layer: weights row-major
/// by output unit, then biases.
struct Mlp {
    MlpSpec spec;
    Eigen::VectorXd params;
};

/// Glorot-uniform weights, zero biases; deterministic per seed.
Mlp init_mlp(const MlpSpec& spec, std::uint64_t seed);

// --- shared evaluation core -------------------------------------------------
// One code path instantiated for plain doubles, tape Vars and jets, so the
// value components of all three agree by construction.

inline double in_term(double w, double x) { return w * x; }
inline Var in_term(const Var& w, double x) { return mulc(w, x); }
inline Var in_term(const Var& w, const Var& x) { return w * x; }
inline Jet2 in_term(const Var& w, const Jet2& x) { return w * x; }
inline Jet2d in_term(double w, const Jet2d& x) { return w * x; }

inline double in_fmadd(double w, double x, double acc) { return w * x + acc; }
inline Var in_fmadd(const Var& w, double x, const Var& acc) { return fmaddc(w, x, acc); }
inline Var in_fmadd(const Var& w, const Var& x, const Var& acc) { return fmadd(w, x, acc); }
inline Jet2 in_fmadd(const Var& w, const Jet2& x, const Jet2& acc) { return fmadd(w, x, acc); }
inline Jet2d in_fmadd(double w, const Jet2d& x, const Jet2d& acc) { return fmadd(w, x, acc); }

inline double add_b(double acc, double b) { return acc + b; }
inline Var add_b(const Var& acc, const Var& b) { return acc + b; }
inline Jet2 add_b(const Jet2& acc, const Var& b) { return add_bias(acc, b); }
inline Jet2d add_b(const Jet2d& acc, double b) { return add_bias(acc, b); }

template <class A>
A activate(Activation act, const A& x) {
    return act == Activation::sine ? sin(x) : tanh(x);
}
inline double activate(Activation act, double x) {
    return act == Activation::sine ? std::sin(x) : std::tanh(x);
}

template <class W, class In>
using LayerOut = decltype(in_term(std::declval<const W&>(), std::declval<const In&>()));

/// z_u = sum_j w[u,j] * in[j] + b[u], accumulated left to right, activation on
/// hidden layers only.
template <class W, class In>
std::vector<LayerOut<W, In>> eval_layer(const W* weights, const W* biases, int fan_in, int fan_out,
                                        std::span<const In> in, Activation act, bool hidden) {
    using A = LayerOut<W, In>;
    std::vector<A> out;
    out.reserve(static_cast<std::size_t>(fan_out));
    for (int u = 0; u < fan_out; ++u) {
        const W* w = weights + static_cast<std::ptrdiff_t>(u) * fan_in;
        A acc = in_term(w[0], in[0]);
        for (int j = 1; j < fan_in; ++j) {
            acc = in_fmadd(w[j], in[static_cast<std::size_t>(j)], acc);
        }
        acc = add_b(acc, biases[u]);
        out.push_back(hidden ? activate(act, acc) : acc);
    }
    return out;
}

template <class W, class X>
std::vector<LayerOut<W, X>> mlp_eval(const MlpSpec& spec, const W* p, std::span<const X> x) {
    using A = LayerOut<W, X>;
    const int n_hidden = static_cast<int>(spec.hidden.size());
    int fan_in = spec.input_dim;
    int fan_out = n_hidden > 0 ? spec.hidden[0] : spec.output_dim;
    std::vector<A> cur = eval_layer<W, X>(p, p + static_cast<std::ptrdiff_t>(fan_in) * fan_out,
                                          fan_in, fan_out, x, spec.activation, n_hidden > 0);
    p += static_cast<std::ptrdiff_t>(fan_in) * fan_out + fan_out;
    for (int l = 1; l <= n_hidden; ++l) {
        fan_in = spec.hidden[static_cast<std::size_t>(l - 1)];
        fan_out = l < n_hidden ? spec.hidden[static_cast<std::size_t>(l)] : spec.output_dim;
        cur = eval_layer<W, A>(p, p + static_cast<std::ptrdiff_t>(fan_in) * fan_out, fan_in,
                               fan_out, std::span<const A>(cur), spec.activation, l < n_hidden);
        p += static_cast<std::ptrdiff_t>(fan_in) * fan_out + fan_out;
    }
    return cur;
}

// --- public evaluation paths ------------------------------------------------

/// Plain forward pass on reals.
Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& x);

/// Batched forward pass (rows are samples); used for test-set evaluation.
Eigen::MatrixXd predict_batch(const Mlp& net, const Eigen::MatrixXd& inputs);

/// Register every entry of the flat vector as a tape parameter, in order.
std::vector<Var> register_params(Tape& tape, const Eigen::VectorXd& params);

/// Forward pass with parameters on the tape; inputs are plain constants.
std::vector<Var> forward(const MlpSpec& spec, std::span<const Var> theta,
                         std::span<const double> x);

/// Forward pass on jets seeded along input coordinate `direction`; returns
/// per-output (f, df/dx_dir, d2f/dx_dir^2) with coefficients on the tape.
/// `d1_seed` is the chain-rule seed (the per-dim scale when the network sees
/// affinely transformed inputs; 1 otherwise).
std::vector<Jet2> forward_jet(const MlpSpec& spec, Tape& tape, std::span<const Var> theta,
                              std::span<const double> x, int direction, double d1_seed = 1.0);

/// Tape-free jet pass over plain doubles (cross-checks and oracles).
std::vector<Jet2d> forward_jet(const Mlp& net, std::span<const double> x, int direction);

// --- checkpoint file --------------------------------------------------------
// Header line `mlp input=<n> hidden=<a,b,..> output=<n> activation=<name>
// params=<count>`, then one parameter per line at 17 significant digits.

void save_mlp(const std::string& path, const Mlp& net);
Mlp load_mlp(const std::string& path);

}  // namespace pinnlab

#endif  // PINNLAB_MLP_HPP
