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

#include "pinnlab/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pinnlab {

std::string to_string(Activation a) { return a == Activation::sine ? "sine" : "tanh"; }

Activation activation_from_string(const std::string& s) {
    if (s == "sine") return Activation::sine;
    if (s == "tanh") return Activation::tanh;
    throw std::invalid_argument("unknown activation: " + s);
}

namespace {

std::vector<int> layer_dims(const MlpSpec& spec) {
    std::vector<int> dims;
    dims.push_back(spec.input_dim);
    dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
    dims.push_back(spec.output_dim);
    return dims;
}

void validate(const MlpSpec& spec) {
    if (spec.input_dim < 1 || spec.output_dim < 1) {
        throw std::invalid_argument("mlp: input and output dims must be >= 1");
    }
    for (int h : spec.hidden) {
        if (h < 1) throw std::invalid_argument("mlp: hidden widths must be >= 1");
    }
}

}  // namespace

std::size_t param_count(const MlpSpec& spec) {
    const auto dims = layer_dims(spec);
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        n += static_cast<std::size_t>(dims[l]) * static_cast<std::size_t>(dims[l + 1]) +
             static_cast<std::size_t>(dims[l + 1]);
    }
    return n;
}

Mlp init_mlp(const MlpSpec& spec, std::uint64_t seed) {
    validate(spec);
    Mlp net;
    net.spec = spec;
    net.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(param_count(spec)));
    std::mt19937_64 rng(seed);
    const auto dims = layer_dims(spec);
    Eigen::Index off = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int ni = dims[l];
        const int no = dims[l + 1];
        const double r = std::sqrt(6.0 / (ni + no));
        std::uniform_real_distribution<double> dist(-r, r);
        for (int k = 0; k < ni * no; ++k) {
            net.params[off + k] = dist(rng);
        }
        off += static_cast<Eigen::Index>(ni) * no + no;  // biases stay zero
    }
    return net;
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& x) {
    if (x.size() != net.spec.input_dim) {
        throw std::invalid_argument("forward: input dimension mismatch");
    }
    const auto out = mlp_eval<double, double>(net.spec, net.params.data(),
                                              std::span<const double>(x.data(),
                                                                      static_cast<std::size_t>(x.size())));
    return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Eigen::MatrixXd predict_batch(const Mlp& net, const Eigen::MatrixXd& inputs) {
    if (inputs.cols() != net.spec.input_dim) {
        throw std::invalid_argument("predict_batch: input dimension mismatch");
    }
    const auto dims = layer_dims(net.spec);
    Eigen::MatrixXd cur = inputs;
    const double* p = net.params.data();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int ni = dims[l];
        const int no = dims[l + 1];
        using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        Eigen::Map<const RowMajor> w(p, no, ni);
        Eigen::Map<const Eigen::VectorXd> b(p + static_cast<std::ptrdiff_t>(ni) * no, no);
        Eigen::MatrixXd z = (cur * w.transpose()).rowwise() + b.transpose();
        if (l + 2 < dims.size()) {
            if (net.spec.activation == Activation::sine) {
                cur = z.array().sin().matrix();
            } else {
                cur = z.array().tanh().matrix();
            }
        } else {
            cur = std::move(z);
        }
        p += static_cast<std::ptrdiff_t>(ni) * no + no;
    }
    return cur;
}

std::vector<Var> register_params(Tape& tape, const Eigen::VectorXd& params) {
    std::vector<Var> theta;
    theta.reserve(static_cast<std::size_t>(params.size()));
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        theta.push_back(tape.parameter(params[i]));
    }
    return theta;
}

std::vector<Var> forward(const MlpSpec& spec, std::span<const Var> theta,
                         std::span<const double> x) {
    if (static_cast<int>(x.size()) != spec.input_dim) {
        throw std::invalid_argument("forward: input dimension mismatch");
    }
    return mlp_eval<Var, double>(spec, theta.data(), x);
}

std::vector<Jet2> forward_jet(const MlpSpec& spec, Tape& tape, std::span<const Var> theta,
                              std::span<const double> x, int direction, double d1_seed) {
    if (static_cast<int>(x.size()) != spec.input_dim) {
        throw std::invalid_argument("forward_jet: input dimension mismatch");
    }
    auto seeds = jet_seed(tape, x, direction);
    if (d1_seed != 1.0) {
        seeds[static_cast<std::size_t>(direction)].d1 = tape.leaf(d1_seed);
    }
    return mlp_eval<Var, Jet2>(spec, theta.data(), std::span<const Jet2>(seeds));
}

std::vector<Jet2d> forward_jet(const Mlp& net, std::span<const double> x, int direction) {
    if (static_cast<int>(x.size()) != net.spec.input_dim) {
        throw std::invalid_argument("forward_jet: input dimension mismatch");
    }
    const auto seeds = jet_seed(x, direction);
    return mlp_eval<double, Jet2d>(net.spec, net.params.data(), std::span<const Jet2d>(seeds));
}

void save_mlp(const std::string& path, const Mlp& net) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_mlp: cannot open " + path);
    out << "mlp input=" << net.spec.input_dim << " hidden=";
    for (std::size_t i = 0; i < net.spec.hidden.size(); ++i) {
        out << (i ? "," : "") << net.spec.hidden[i];
    }
    out << " output=" << net.spec.output_dim << " activation=" << to_string(net.spec.activation)
        << " params=" << net.params.size() << "\n";
    char buf[64];
    for (Eigen::Index i = 0; i < net.params.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", net.params[i]);
        out << buf << "\n";
    }
    if (!out) throw std::runtime_error("save_mlp: write failed for " + path);
}

Mlp load_mlp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_mlp: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("load_mlp: empty file " + path);

    Mlp net;
    long declared = -1;
    std::istringstream hs(header);
    std::string tok;
    hs >> tok;
    if (tok != "mlp") throw std::runtime_error("load_mlp: bad header in " + path);
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::runtime_error("load_mlp: bad header field " + tok);
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "input") {
            net.spec.input_dim = std::stoi(val);
        } else if (key == "hidden") {
            net.spec.hidden.clear();
            std::istringstream vs(val);
            std::string w;
            while (std::getline(vs, w, ',')) {
                if (!w.empty()) net.spec.hidden.push_back(std::stoi(w));
            }
        } else if (key == "output") {
            net.spec.output_dim = std::stoi(val);
        } else if (key == "activation") {
            net.spec.activation = activation_from_string(val);
        } else if (key == "params") {
            declared = std::stol(val);
        } else {
            throw std::runtime_error("load_mlp: unknown header field " + key);
        }
    }
    const auto expected = param_count(net.spec);
    if (declared >= 0 && static_cast<std::size_t>(declared) != expected) {
        throw std::runtime_error("load_mlp: parameter count does not match spec in " + path);
    }
    net.params.resize(static_cast<Eigen::Index>(expected));
    for (Eigen::Index i = 0; i < net.params.size(); ++i) {
        if (!(in >> net.params[i])) {
            throw std::runtime_error("load_mlp: truncated parameter list in " + path);
        }
    }
    return net;
}

}  // namespace pinnlab
