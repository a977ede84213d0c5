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

#ifndef PINNLAB_TAPE_HPP
#define PINNLAB_TAPE_HPP

#include <Eigen/Core>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinnlab {

enum class OpKind : std::uint8_t {
    leaf,
    add,
    sub,
    mul,
    div,
    neg,
    sin,
    cos,
    tanh,
    exp,
    square,
    sech2,
    add_const,
    mul_const,
    fma,   // a*b + c, three parents
    fmac,  // a*x + c with constant x, two parents
};

/// Recording failed at a specific node (e.g. division by zero).
struct TapeError : std::runtime_error {
    TapeError(const std::string& what, std::int32_t node)
        : std::runtime_error(what + " (node " + std::to_string(node) + ")"), node_id(node) {}
    std::int32_t node_id;
};

/// API misuse, e.g. sweeping a Var that does not live on this tape.
struct TapeUsageError : std::logic_error {
    using std::logic_error::logic_error;
};

class Tape;

/// Handle to one recorded scalar. Copies are cheap; the node itself lives
/// on the owning tape and becomes invalid when the tape is cleared.
class Var {
  public:
    Var() = default;

    double value() const { return v_; }
    std::int32_t id() const { return id_; }
    std::int32_t generation() const { return gen_; }
    Tape* tape() const { return tape_; }

  private:
    friend class Tape;
    Var(Tape* tape, std::int32_t id, std::int32_t gen, double v)
        : tape_(tape), id_(id), gen_(gen), v_(v) {}

    Tape* tape_ = nullptr;
    std::int32_t id_ = -1;
    std::int32_t gen_ = 0;
    double v_ = 0.0;
};

/// Append-only record of scalar operations. Node order is topological by
/// construction, so one reverse pass visits nodes in anti-topological order.
/// Single-threaded; independent runs each own a tape.
class Tape {
  public:
    struct Node {
        std::int32_t p0 = -1;
        std::int32_t p1 = -1;
        std::int32_t p2 = -1;  // implicit partial 1 (fma accumulator)
        OpKind kind = OpKind::leaf;
        double d0 = 0.0;
        double d1 = 0.0;
    };
    static_assert(sizeof(Node) == 32);

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    std::size_t size() const { return nodes_.size(); }
    std::int32_t generation() const { return gen_; }
    const Node& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }
    std::size_t parameter_count() const { return param_ids_.size(); }

    /// Drop every node and registered parameter; capacity is kept so the
    /// next recording pass does not reallocate. Outstanding Vars die.
    void clear() {
        nodes_.clear();
        param_ids_.clear();
        ++gen_;
    }

    /// Checkpoint for rewind().
    std::size_t mark() const { return nodes_.size(); }

    /// Truncate back to a checkpoint. Vars recorded before the mark stay
    /// valid; anything recorded after it must not be used again.
    void rewind(std::size_t checkpoint) {
        assert(checkpoint <= nodes_.size());
        nodes_.resize(checkpoint);
        while (!param_ids_.empty() &&
               param_ids_.back() >= static_cast<std::int32_t>(checkpoint)) {
            param_ids_.pop_back();
        }
    }

    Var leaf(double v) {
        nodes_.push_back(Node{});
        return Var(this, next_id(), gen_, v);
    }

    /// Leaf that backward() reports a gradient entry for, in registration order.
    Var parameter(double v) {
        Var p = leaf(v);
        param_ids_.push_back(p.id());
        return p;
    }

    Var add(const Var& a, const Var& b) { return binary(OpKind::add, a, b, a.v_ + b.v_, 1.0, 1.0); }
    Var sub(const Var& a, const Var& b) { return binary(OpKind::sub, a, b, a.v_ - b.v_, 1.0, -1.0); }
    Var mul(const Var& a, const Var& b) { return binary(OpKind::mul, a, b, a.v_ * b.v_, b.v_, a.v_); }

    Var div(const Var& a, const Var& b) {
        if (b.v_ == 0.0) {
            throw TapeError("division by zero", static_cast<std::int32_t>(nodes_.size()));
        }
        const double inv = 1.0 / b.v_;
        return binary(OpKind::div, a, b, a.v_ * inv, inv, -a.v_ * inv * inv);
    }

    Var neg(const Var& a) { return unary(OpKind::neg, a, -a.v_, -1.0); }
    Var sin(const Var& a) { return unary(OpKind::sin, a, std::sin(a.v_), std::cos(a.v_)); }
    Var cos(const Var& a) { return unary(OpKind::cos, a, std::cos(a.v_), -std::sin(a.v_)); }

    Var tanh(const Var& a) {
        const double t = std::tanh(a.v_);
        return unary(OpKind::tanh, a, t, 1.0 - t * t);
    }

    Var exp(const Var& a) {
        const double e = std::exp(a.v_);
        return unary(OpKind::exp, a, e, e);
    }

    Var square(const Var& a) { return unary(OpKind::square, a, a.v_ * a.v_, 2.0 * a.v_); }

    /// sech^2(x) = 1 - tanh^2(x); shows up as the first tanh derivative
    /// when it has to stay differentiable itself (jet propagation).
    Var sech2(const Var& a) {
        const double t = std::tanh(a.v_);
        const double s = 1.0 - t * t;
        return unary(OpKind::sech2, a, s, -2.0 * t * s);
    }

    Var add_const(const Var& a, double c) { return unary(OpKind::add_const, a, a.v_ + c, 1.0); }
    Var mul_const(const Var& a, double c) { return unary(OpKind::mul_const, a, a.v_ * c, c); }

    /// a*b + c in one node.
    Var fma(const Var& a, const Var& b, const Var& c) {
        assert(owns(a) && owns(b) && owns(c));
        nodes_.push_back(Node{a.id_, b.id_, c.id_, OpKind::fma, b.v_, a.v_});
        return Var(this, next_id(), gen_, a.v_ * b.v_ + c.v_);
    }

    /// a*x + c with x a plain constant (network inputs carry no gradient).
    Var fmac(const Var& a, double x, const Var& c) {
        assert(owns(a) && owns(c));
        nodes_.push_back(Node{a.id_, c.id_, -1, OpKind::fmac, x, 1.0});
        return Var(this, next_id(), gen_, a.v_ * x + c.v_);
    }

    Var record_unary(OpKind kind, const Var& a, double c = 0.0) {
        switch (kind) {
            case OpKind::neg: return neg(a);
            case OpKind::sin: return sin(a);
            case OpKind::cos: return cos(a);
            case OpKind::tanh: return tanh(a);
            case OpKind::exp: return exp(a);
            case OpKind::square: return square(a);
            case OpKind::sech2: return sech2(a);
            case OpKind::add_const: return add_const(a, c);
            case OpKind::mul_const: return mul_const(a, c);
            default: throw TapeUsageError("record_unary: not a unary op kind");
        }
    }

    Var record_binary(OpKind kind, const Var& a, const Var& b) {
        switch (kind) {
            case OpKind::add: return add(a, b);
            case OpKind::sub: return sub(a, b);
            case OpKind::mul: return mul(a, b);
            case OpKind::div: return div(a, b);
            default: throw TapeUsageError("record_binary: not a binary op kind");
        }
    }

    /// Reverse sweep from `loss`; returns d loss / d p for every registered
    /// parameter, in registration order. Nodes unreachable from the loss get
    /// adjoint exactly 0.
    Eigen::VectorXd gradient(const Var& loss) {
        if (loss.tape_ != this || loss.gen_ != gen_ || loss.id_ < 0 ||
            loss.id_ >= static_cast<std::int32_t>(nodes_.size())) {
            throw TapeUsageError("gradient: loss is not on the active tape");
        }
        adjoints_.assign(nodes_.size(), 0.0);
        adjoints_[static_cast<std::size_t>(loss.id_)] = 1.0;
        for (std::int32_t i = loss.id_; i >= 0; --i) {
            const double a = adjoints_[static_cast<std::size_t>(i)];
            if (a == 0.0) continue;
            const Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.p0 >= 0) adjoints_[static_cast<std::size_t>(n.p0)] += a * n.d0;
            if (n.p1 >= 0) adjoints_[static_cast<std::size_t>(n.p1)] += a * n.d1;
            if (n.p2 >= 0) adjoints_[static_cast<std::size_t>(n.p2)] += a;
        }
        Eigen::VectorXd grad(static_cast<Eigen::Index>(param_ids_.size()));
        for (std::size_t k = 0; k < param_ids_.size(); ++k) {
            grad[static_cast<Eigen::Index>(k)] = adjoints_[static_cast<std::size_t>(param_ids_[k])];
        }
        return grad;
    }

    /// Adjoint of any node from the most recent gradient() sweep.
    double adjoint(const Var& v) const {
        if (v.tape_ != this || v.gen_ != gen_ ||
            static_cast<std::size_t>(v.id_) >= adjoints_.size()) {
            throw TapeUsageError("adjoint: Var is not covered by the last sweep");
        }
        return adjoints_[static_cast<std::size_t>(v.id_)];
    }

  private:
    std::int32_t next_id() const { return static_cast<std::int32_t>(nodes_.size()) - 1; }

    bool owns(const Var& v) const {
        return v.tape_ == this && v.gen_ == gen_ && v.id_ >= 0 &&
               v.id_ < static_cast<std::int32_t>(nodes_.size());
    }

    Var unary(OpKind kind, const Var& a, double value, double partial) {
        assert(owns(a));
        nodes_.push_back(Node{a.id_, -1, -1, kind, partial, 0.0});
        return Var(this, next_id(), gen_, value);
    }

    Var binary(OpKind kind, const Var& a, const Var& b, double value, double da, double db) {
        assert(owns(a) && owns(b));
        nodes_.push_back(Node{a.id_, b.id_, -1, kind, da, db});
        return Var(this, next_id(), gen_, value);
    }

    std::vector<Node> nodes_;
    std::vector<std::int32_t> param_ids_;
    std::vector<double> adjoints_;
    std::int32_t gen_ = 0;
};

inline Var operator+(const Var& a, const Var& b) { return a.tape()->add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return a.tape()->sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return a.tape()->mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return a.tape()->div(a, b); }
inline Var operator-(const Var& a) { return a.tape()->neg(a); }

inline Var operator+(const Var& a, double c) { return a.tape()->add_const(a, c); }
inline Var operator+(double c, const Var& a) { return a.tape()->add_const(a, c); }
inline Var operator-(const Var& a, double c) { return a.tape()->add_const(a, -c); }
inline Var operator-(double c, const Var& a) { return a.tape()->add_const(a.tape()->neg(a), c); }
inline Var operator*(const Var& a, double c) { return a.tape()->mul_const(a, c); }
inline Var operator*(double c, const Var& a) { return a.tape()->mul_const(a, c); }
inline Var operator/(const Var& a, double c) { return a.tape()->mul_const(a, 1.0 / c); }

inline Var sin(const Var& a) { return a.tape()->sin(a); }
inline Var cos(const Var& a) { return a.tape()->cos(a); }
inline Var tanh(const Var& a) { return a.tape()->tanh(a); }
inline Var exp(const Var& a) { return a.tape()->exp(a); }
inline Var square(const Var& a) { return a.tape()->square(a); }
inline Var sech2(const Var& a) { return a.tape()->sech2(a); }
inline Var fmadd(const Var& a, const Var& b, const Var& c) { return a.tape()->fma(a, b, c); }
inline Var fmaddc(const Var& a, double x, const Var& c) { return a.tape()->fmac(a, x, c); }
inline Var mulc(const Var& a, double c) { return a.tape()->mul_const(a, c); }
inline Var addc(const Var& a, double c) { return a.tape()->add_const(a, c); }

// Plain-double twins so generic code (jets, network evaluation) can be
// instantiated on either scalar.
inline double sin(double a) { return std::sin(a); }
inline double cos(double a) { return std::cos(a); }
inline double tanh(double a) { return std::tanh(a); }
inline double exp(double a) { return std::exp(a); }
inline double square(double a) { return a * a; }
inline double sech2(double a) {
    const double t = std::tanh(a);
    return 1.0 - t * t;
}
inline double fmadd(double a, double b, double c) { return a * b + c; }
inline double fmaddc(double a, double x, double c) { return a * x + c; }
inline double mulc(double a, double c) { return a * c; }
inline double addc(double a, double c) { return a + c; }

/// Gradient of `loss` with respect to every registered parameter.
inline Eigen::VectorXd backward(const Var& loss) { return loss.tape()->gradient(loss); }

}  // namespace pinnlab

#endif  // PINNLAB_TAPE_HPP
