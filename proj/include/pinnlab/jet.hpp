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

#ifndef PINNLAB_JET_HPP
#define PINNLAB_JET_HPP

#include "pinnlab/tape.hpp"

#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace pinnlab {

/// Second-order Taylor record along one designated input direction:
/// value, first and second directional derivative. With S = Var every
/// coefficient stays on the tape, so a reverse sweep through an expression
/// of jet coefficients yields parameter gradients of input derivatives.
template <class S>
struct Jet2T {
    S v;
    S d1;
    S d2;
};

using Jet2 = Jet2T<Var>;
using Jet2d = Jet2T<double>;

template <class S>
Jet2T<S> operator+(const Jet2T<S>& a, const Jet2T<S>& b) {
    return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}

template <class S>
Jet2T<S> operator-(const Jet2T<S>& a, const Jet2T<S>& b) {
    return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}

template <class S>
Jet2T<S> operator-(const Jet2T<S>& a) {
    return {-a.v, -a.d1, -a.d2};
}

template <class S>
Jet2T<S> operator*(const Jet2T<S>& a, const Jet2T<S>& b) {
    // (ab)'' = a''b + 2a'b' + ab''
    S cross = mulc(a.d1 * b.d1, 2.0);
    return {a.v * b.v,
            fmadd(a.d1, b.v, a.v * b.d1),
            fmadd(a.d2, b.v, fmadd(a.v, b.d2, cross))};
}

/// Scale by a quantity that does not depend on the jet direction
/// (network weight, trainable coefficient).
template <class S>
    requires(!std::is_same_v<S, double>)
Jet2T<S> operator*(const S& c, const Jet2T<S>& a) {
    return {c * a.v, c * a.d1, c * a.d2};
}

template <class S>
Jet2T<S> operator*(const Jet2T<S>& a, double c) {
    return {mulc(a.v, c), mulc(a.d1, c), mulc(a.d2, c)};
}

template <class S>
Jet2T<S> operator*(double c, const Jet2T<S>& a) {
    return a * c;
}

template <class S>
Jet2T<S> operator+(const Jet2T<S>& a, double c) {
    return {addc(a.v, c), a.d1, a.d2};
}

template <class S>
Jet2T<S> sin(const Jet2T<S>& a) {
    S s = sin(a.v);
    S c = cos(a.v);
    return {s, c * a.d1, c * a.d2 - s * square(a.d1)};
}

template <class S>
Jet2T<S> cos(const Jet2T<S>& a) {
    S c = cos(a.v);
    S s = sin(a.v);
    return {c, -(s * a.d1), -(s * a.d2) - c * square(a.d1)};
}

template <class S>
Jet2T<S> tanh(const Jet2T<S>& a) {
    S t = tanh(a.v);
    S g = sech2(a.v);  // tanh' ; tanh'' = -2 t g
    return {t, g * a.d1, g * a.d2 - mulc(t * (g * square(a.d1)), 2.0)};
}

template <class S>
Jet2T<S> exp(const Jet2T<S>& a) {
    S e = exp(a.v);
    return {e, e * a.d1, e * (a.d2 + square(a.d1))};
}

template <class S>
Jet2T<S> square(const Jet2T<S>& a) {
    return {square(a.v), mulc(a.v * a.d1, 2.0), mulc(fmadd(a.v, a.d2, square(a.d1)), 2.0)};
}

// Accumulation helpers used by the network evaluation: weight times jet.
inline Jet2 fmadd(const Var& w, const Jet2& x, const Jet2& acc) {
    return {fmadd(w, x.v, acc.v), fmadd(w, x.d1, acc.d1), fmadd(w, x.d2, acc.d2)};
}

inline Jet2d fmadd(double w, const Jet2d& x, const Jet2d& acc) {
    return {w * x.v + acc.v, w * x.d1 + acc.d1, w * x.d2 + acc.d2};
}

/// Add a direction-independent bias to the value coefficient.
inline Jet2 add_bias(const Jet2& a, const Var& b) { return {a.v + b, a.d1, a.d2}; }
inline Jet2d add_bias(const Jet2d& a, double b) { return {a.v + b, a.d1, a.d2}; }

/// Seed one jet per input coordinate: coordinate `direction` gets (v, 1, 0),
/// every other coordinate (v, 0, 0).
inline std::vector<Jet2> jet_seed(Tape& tape, std::span<const double> values, int direction) {
    if (direction < 0 || direction >= static_cast<int>(values.size())) {
        throw std::out_of_range("jet_seed: direction index out of range");
    }
    std::vector<Jet2> jets;
    jets.reserve(values.size());
    for (int k = 0; k < static_cast<int>(values.size()); ++k) {
        jets.push_back(Jet2{tape.leaf(values[static_cast<std::size_t>(k)]),
                            tape.leaf(k == direction ? 1.0 : 0.0), tape.leaf(0.0)});
    }
    return jets;
}

inline std::vector<Jet2d> jet_seed(std::span<const double> values, int direction) {
    if (direction < 0 || direction >= static_cast<int>(values.size())) {
        throw std::out_of_range("jet_seed: direction index out of range");
    }
    std::vector<Jet2d> jets;
    jets.reserve(values.size());
    for (int k = 0; k < static_cast<int>(values.size()); ++k) {
        jets.push_back(Jet2d{values[static_cast<std::size_t>(k)], k == direction ? 1.0 : 0.0, 0.0});
    }
    return jets;
}

}  // namespace pinnlab

#endif  // PINNLAB_JET_HPP
