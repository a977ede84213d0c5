#include "pinnlab/optim.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace pinnlab;

namespace {

double rosenbrock(const Eigen::VectorXd& p, Eigen::VectorXd& g) {
    const double x = p[0];
    const double y = p[1];
    g.resize(2);
    g[0] = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
    g[1] = 200.0 * (y - x * x);
    return (1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x);
}

// Straightforward transcription of the two-loop recursion, kept independent
// of the library implementation on purpose.
Eigen::VectorXd reference_two_loop(
    const Eigen::VectorXd& grad,
    const std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& hist) {
    Eigen::VectorXd q = grad;
    const int m = static_cast<int>(hist.size());
    std::vector<double> alpha(static_cast<std::size_t>(m));
    for (int i = m - 1; i >= 0; --i) {
        const double rho = 1.0 / hist[static_cast<std::size_t>(i)].second.dot(
                                     hist[static_cast<std::size_t>(i)].first);
        alpha[static_cast<std::size_t>(i)] =
            rho * hist[static_cast<std::size_t>(i)].first.dot(q);
        q -= alpha[static_cast<std::size_t>(i)] * hist[static_cast<std::size_t>(i)].second;
    }
    if (m > 0) {
        const auto& [s, y] = hist.back();
        q *= s.dot(y) / y.dot(y);
    }
    for (int i = 0; i < m; ++i) {
        const double rho = 1.0 / hist[static_cast<std::size_t>(i)].second.dot(
                                     hist[static_cast<std::size_t>(i)].first);
        const double beta = rho * hist[static_cast<std::size_t>(i)].second.dot(q);
        q += (alpha[static_cast<std::size_t>(i)] - beta) * hist[static_cast<std::size_t>(i)].first;
    }
    return -q;
}

}  // namespace

TEST_CASE("empty history reduces to steepest descent, exactly") {
    LbfgsState state(0.5);
    TerminationConfig term;
    Eigen::VectorXd x(2);
    x << 1.0, 1.0;
    auto quad = [](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        g = p;
        return 0.5 * p.squaredNorm();
    };
    StepOutcome out = lbfgs_step(state, x, quad, term);
    CHECK(out.params[0] == 0.5);
    CHECK(out.params[1] == 0.5);
    CHECK(out.loss == doctest::Approx(1.0));
    CHECK_FALSE(out.terminated);
}

TEST_CASE("two-loop recursion matches an independent transcription") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist(0.0, 1.0);
    const int n = 12;
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> hist;
    for (int k = 0; k < 6; ++k) {
        Eigen::VectorXd s(n), y(n);
        for (int i = 0; i < n; ++i) {
            s[i] = dist(rng);
            y[i] = dist(rng);
        }
        if (s.dot(y) <= 1e-10) y = s;  // keep the pair admissible
        hist.emplace_back(s, y);
    }
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = dist(rng);

    Eigen::VectorXd d1 = lbfgs_direction(g, hist);
    Eigen::VectorXd d2 = reference_two_loop(g, hist);
    CHECK((d1 - d2).lpNorm<Eigen::Infinity>() <= 1e-12 * d2.lpNorm<Eigen::Infinity>());
}

TEST_CASE("scalar quadratic converges in a few steps") {
    LbfgsState state(1.0);
    TerminationConfig term;
    term.max_iters = 10;
    Eigen::VectorXd x(1);
    x << 0.0;
    auto f = [](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        g.resize(1);
        g[0] = p[0] - 3.0;
        return 0.5 * (p[0] - 3.0) * (p[0] - 3.0);
    };
    Optimizer opt{state};
    MinimizeResult res = minimize(term, opt, x, f);
    CHECK(std::abs(res.final_params[0] - 3.0) <= 1e-7);
    CHECK(res.reason == StopReason::tolerance);
}

TEST_CASE("Rosenbrock from (-1.2, 1) reaches 1e-6 within 200 iterations") {
    LbfgsState state(1.0, 10);
    TerminationConfig term;
    term.max_iters = 200;
    Eigen::VectorXd x(2);
    x << -1.2, 1.0;
    Optimizer opt{state};
    MinimizeResult res = minimize(term, opt, x, rosenbrock);
    CHECK(res.final_loss <= 1e-6);
}

TEST_CASE("stored curvature pairs respect the floor") {
    LbfgsState state(0.1);
    TerminationConfig term;
    term.tol_grad = 0.0;
    term.tol_change = 0.0;
    Eigen::VectorXd x(2);
    x << 2.0, -1.0;
    auto f = [](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        g = 2.0 * p;
        return p.squaredNorm();
    };
    for (int i = 0; i < 30; ++i) {
        StepOutcome out = lbfgs_step(state, x, f, term);
        x = out.params;
    }
    for (const auto& [s, y] : state.history) {
        CHECK(s.dot(y) > 1e-10);
    }
    CHECK(state.history.size() <= 10);
}

TEST_CASE("gradient tolerance stops without moving") {
    LbfgsState state(0.5);
    TerminationConfig term;
    Eigen::VectorXd x(1);
    x << 1e-9;
    auto f = [](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        g = p;
        return 0.5 * p.squaredNorm();
    };
    StepOutcome out = lbfgs_step(state, x, f, term);
    CHECK(out.terminated);
    CHECK(out.params[0] == x[0]);
}

TEST_CASE("zero tolerances disable termination") {
    LbfgsState state(0.1);
    TerminationConfig term;
    term.tol_grad = 0.0;
    term.tol_change = 0.0;
    term.max_iters = 50;
    Eigen::VectorXd x(1);
    x << 1.0;
    auto f = [](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        g.resize(1);
        g[0] = p[0] - 3.0;
        return 0.5 * (p[0] - 3.0) * (p[0] - 3.0);
    };
    Optimizer opt{state};
    MinimizeResult res = minimize(term, opt, x, f);
    CHECK(res.reason == StopReason::max_iters);
    CHECK(res.curve.size() == 50);
}

TEST_CASE("adam first step") {
    SUBCASE("unit gradient moves by lr/(1+eps)") {
        AdamState state(0.01);
        Eigen::VectorXd x(1);
        x << 5.0;
        auto f = [](const Eigen::VectorXd&, Eigen::VectorXd& g) {
            g.resize(1);
            g[0] = 1.0;
            return 0.0;
        };
        StepOutcome out = adam_step(state, x, f);
        CHECK(out.params[0] == doctest::Approx(5.0 - 0.01 / (1.0 + 1e-8)).epsilon(1e-15));
    }

    SUBCASE("zero gradient leaves parameters unchanged") {
        AdamState state(0.1);
        Eigen::VectorXd x(3);
        x << 1.0, -2.0, 0.5;
        auto f = [](const Eigen::VectorXd&, Eigen::VectorXd& g) {
            g = Eigen::VectorXd::Zero(3);
            return 0.0;
        };
        StepOutcome out = adam_step(state, x, f);
        CHECK((out.params.array() == x.array()).all());
    }

    SUBCASE("first-step magnitude is bounded by lr for any gradient") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> dist(-1e3, 1e3);
        for (int trial = 0; trial < 100; ++trial) {
            AdamState state(0.01);
            Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
            Eigen::VectorXd grad(4);
            for (int i = 0; i < 4; ++i) grad[i] = dist(rng);
            auto f = [&](const Eigen::VectorXd&, Eigen::VectorXd& g) {
                g = grad;
                return 0.0;
            };
            StepOutcome out = adam_step(state, x, f);
            CHECK(out.params.lpNorm<Eigen::Infinity>() <= 0.01 * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("deterministic replay") {
    auto run = [] {
        AdamState state(0.05);
        TerminationConfig term;
        term.max_iters = 40;
        Eigen::VectorXd x(2);
        x << 1.0, -1.0;
        std::mt19937_64 rng(9);
        std::normal_distribution<double> noise(0.0, 0.1);
        auto f = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
            g = p;
            g[0] += noise(rng);  // seeded stochastic gradient
            return 0.5 * p.squaredNorm();
        };
        Optimizer opt{state};
        return minimize(term, opt, x, f);
    };
    MinimizeResult a = run();
    MinimizeResult b = run();
    REQUIRE(a.curve.size() == b.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
        CHECK(a.curve[i].train_loss == b.curve[i].train_loss);
    }
    CHECK((a.final_params.array() == b.final_params.array()).all());
}

TEST_CASE("blow-up is reported with the last valid iteration") {
    LbfgsState state(1.0);
    TerminationConfig term;
    term.max_iters = 100;
    Eigen::VectorXd x(1);
    x << 1.0;
    int calls = 0;
    auto f = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        ++calls;
        g.resize(1);
        if (calls >= 4) {
            g[0] = std::numeric_limits<double>::quiet_NaN();
            return std::numeric_limits<double>::quiet_NaN();
        }
        g[0] = 1.0;  // linear slope, never converges on its own
        return p[0];
    };
    Optimizer opt{state};
    MinimizeResult res = minimize(term, opt, x, f);
    CHECK(res.reason == StopReason::blow_up);
    CHECK(res.curve.size() == 3);  // iterations 1..3 were valid
}

TEST_CASE("zero-iteration budget yields an empty curve") {
    LbfgsState state(0.1);
    TerminationConfig term;
    term.max_iters = 0;
    Eigen::VectorXd x(1);
    x << 1.0;
    auto f = [](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        g = p;
        return 0.5 * p.squaredNorm();
    };
    Optimizer opt{state};
    MinimizeResult res = minimize(term, opt, x, f);
    CHECK(res.curve.empty());
    CHECK(res.reason == StopReason::max_iters);
    CHECK(res.final_params[0] == 1.0);
}
