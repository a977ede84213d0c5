#include "pinnlab/physics.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

#include "pinnlab/simulate.hpp"
#include "test_util.hpp"

using namespace pinnlab;

TEST_CASE("data loss") {
    SUBCASE("perfect fit") {
        Eigen::VectorXd v(3);
        v << 1.0, -2.0, 0.5;
        CHECK(data_loss(v, v) == 0.0);
    }

    SUBCASE("hand arithmetic") {
        Eigen::VectorXd pred(2), truth(2);
        pred << 1.0, 3.0;
        truth << 0.0, 0.0;
        CHECK(data_loss(pred, truth) == doctest::Approx(5.0));
    }

    SUBCASE("quadratic homogeneity") {
        Eigen::VectorXd pred(3), truth(3);
        pred << 0.5, -1.25, 3.0;
        truth << 0.0, 0.0, 0.0;
        // residual scale of 2 is exact in floating point
        CHECK(data_loss(2.0 * pred, truth) == 4.0 * data_loss(pred, truth));
    }

    SUBCASE("empty input") {
        Eigen::VectorXd empty;
        CHECK_THROWS_AS(data_loss(empty, empty), std::invalid_argument);
    }

    SUBCASE("tape version agrees") {
        Tape tape;
        Eigen::VectorXd truth(2);
        truth << 0.25, -1.0;
        std::vector<Var> preds{tape.leaf(1.25), tape.leaf(0.5)};
        Eigen::VectorXd pv(2);
        pv << 1.25, 0.5;
        CHECK(data_loss(preds, truth).value() == doctest::Approx(data_loss(pv, truth)).epsilon(1e-15));
    }
}

TEST_CASE("pendulum residual") {
    SUBCASE("equilibrium") {
        Jet2d jet{0.0, 0.0, 0.0};
        CHECK(pendulum_residual(jet, 0.5, 9.8 / 0.325) == 0.0);
    }

    SUBCASE("constant pi/2") {
        Jet2d jet{M_PI / 2.0, 0.0, 0.0};
        CHECK(pendulum_residual(jet, 0.0, 9.8 / 0.325) ==
              doctest::Approx(30.153846153846153).epsilon(1e-14));
    }

    SUBCASE("simulator output approximately satisfies the equation") {
        // b = 0, f_t from the stored velocity and f_tt from its central
        // difference: the residual is pure discretization error and must
        // shrink with the step.
        auto mean_sq_residual = [](int n_points) {
            PendulumSimConfig cfg;
            cfg.b = 0.0;
            cfg.n_points = n_points;
            PendulumSolution sol = euler_cromer(cfg);
            const double dt = cfg.t_end / (n_points - 1);
            double acc = 0.0;
            int count = 0;
            for (Eigen::Index i = 1; i + 1 < sol.series.size(); ++i) {
                const double f_tt = (sol.omega[i + 1] - sol.omega[i - 1]) / (2.0 * dt);
                const double r = f_tt + (cfg.g / cfg.L) * std::sin(sol.series.values[i]);
                acc += r * r;
                ++count;
            }
            return acc / count;
        };
        const double coarse = mean_sq_residual(201);  // dt = 0.03
        const double fine = mean_sq_residual(401);    // dt = 0.015
        CHECK(coarse > 1e-6);
        CHECK(fine < coarse);
    }
}

TEST_CASE("heat residual") {
    SUBCASE("constant field") {
        Jet2d jt{5.0, 0.0, 0.0}, jx{5.0, 0.0, 0.0}, jy{5.0, 0.0, 0.0};
        CHECK(heat_residual(jt, jx, jy, 10.0, 10.0) == 0.0);
    }

    SUBCASE("u = 2t") {
        Jet2d jt{2.0, 2.0, 0.0}, jx{2.0, 0.0, 0.0}, jy{2.0, 0.0, 0.0};
        CHECK(heat_residual(jt, jx, jy, 10.0, 10.0) == 2.0);
    }

    SUBCASE("u = x^2 with alpha 10") {
        Jet2d jt{4.0, 0.0, 0.0}, jx{4.0, 4.0, 2.0}, jy{4.0, 0.0, 0.0};
        CHECK(heat_residual(jt, jx, jy, 10.0, 0.0) == -20.0);
    }

    SUBCASE("linear in alpha, exactly") {
        Jet2d jt{1.0, 0.5, 0.0}, jx{1.0, 0.0, 3.0}, jy{1.0, 0.0, -2.0};
        const double delta = 0.5;
        const double r0 = heat_residual(jt, jx, jy, 10.0, 4.0);
        const double r1 = heat_residual(jt, jx, jy, 10.0 + delta, 4.0);
        CHECK(r1 - r0 == -delta * jx.d2);
    }
}

TEST_CASE("pinn loss composition") {
    MlpSpec spec{1, {4}, 1, Activation::sine};
    Mlp net = init_mlp(spec, 3);
    Eigen::MatrixXd data(3, 1);
    data << 0.0, 0.5, 1.0;
    Eigen::VectorXd targets(3);
    targets << 0.1, -0.2, 0.3;
    Eigen::MatrixXd coll(5, 1);
    coll << 0.0, 0.25, 0.5, 0.75, 1.0;
    PhysicsSpec phys;
    phys.kind = ResidualKind::pendulum;

    SUBCASE("lambda 0 reduces to the data loss") {
        LossBreakdown lb = pinn_loss(net, data, targets, coll, phys, 0.0);
        CHECK(lb.total == lb.data_loss);
        CHECK(lb.physics_loss == 0.0);
    }

    SUBCASE("no collocation points reduces to the data loss") {
        LossBreakdown lb = pinn_loss(net, data, targets, Eigen::MatrixXd(0, 1), phys, 0.5);
        CHECK(lb.total == lb.data_loss);
    }

    SUBCASE("total composes exactly") {
        const double lambda = 0.001;
        LossBreakdown lb = pinn_loss(net, data, targets, coll, phys, lambda);
        CHECK(lb.total == lb.data_loss + lambda * lb.physics_loss);
        CHECK(lb.physics_loss > 0.0);
    }

    SUBCASE("zero network on equilibrium targets gives zero loss") {
        Mlp zero{spec, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(param_count(spec)))};
        LossBreakdown lb = pinn_loss(zero, data, Eigen::VectorXd::Zero(3), coll, phys, 0.001);
        CHECK(lb.total == 0.0);
    }
}

TEST_CASE("gradient of the full pendulum pinn loss matches finite differences") {
    MlpSpec spec{1, {5, 4}, 1, Activation::sine};
    Mlp net = init_mlp(spec, 8);
    Eigen::MatrixXd data(4, 1);
    data << 0.0, 0.4, 0.8, 1.2;
    Eigen::VectorXd targets(4);
    targets << -1.0, -0.8, -0.2, 0.4;
    Eigen::MatrixXd coll(6, 1);
    coll << 0.1, 0.3, 0.5, 0.7, 0.9, 1.1;
    PhysicsSpec phys;
    phys.kind = ResidualKind::pendulum;
    phys.pendulum.b = 0.001;
    phys.pendulum.b_trainable = true;
    const double lambda = 0.001;
    const double b0 = 0.3;

    const Eigen::Index n_net = net.params.size();
    auto loss_at = [&](const Eigen::VectorXd& theta) {
        Mlp probe = net;
        probe.params = theta.head(n_net);
        PhysicsSpec p = phys;
        p.pendulum.b = theta[n_net];
        p.pendulum.b_trainable = false;
        return pinn_loss(probe, data, targets, coll, p, lambda).total;
    };

    Tape tape;
    auto theta = register_params(tape, net.params);
    CoeffVars coeffs;
    coeffs.b = tape.parameter(b0);
    PinnLossVars lv = build_pinn_loss(tape, spec, theta, data, targets, coll, phys, lambda, coeffs);
    Eigen::VectorXd grad = tape.gradient(lv.total);

    Eigen::VectorXd full(n_net + 1);
    full.head(n_net) = net.params;
    full[n_net] = b0;
    Eigen::VectorXd fd = testutil::fd_gradient(loss_at, full);
    CHECK(testutil::grad_matches(grad, fd, 1e-4, 1e-7));
}

TEST_CASE("gradient of the heat pinn loss matches finite differences") {
    MlpSpec spec{3, {6}, 1, Activation::tanh};
    Mlp net = init_mlp(spec, 15);
    Eigen::MatrixXd data(4, 3);
    data << 0.0, 0.0, 0.0, 1.0, 2.0, 0.1, 3.0, 1.0, 0.2, 2.0, 3.0, 0.3;
    Eigen::VectorXd targets(4);
    targets << 20.0, 21.0, 22.0, 23.0;
    Eigen::MatrixXd coll(3, 3);
    coll << 0.5, 0.5, 0.05, 1.5, 2.5, 0.15, 2.5, 1.5, 0.25;
    PhysicsSpec phys;
    phys.kind = ResidualKind::heat2d;
    phys.heat.trainable = true;
    const double lambda = 0.5;
    const double a0 = 10.0, be0 = 5.0;

    const Eigen::Index n_net = net.params.size();
    auto loss_at = [&](const Eigen::VectorXd& theta) {
        Mlp probe = net;
        probe.params = theta.head(n_net);
        PhysicsSpec p = phys;
        p.heat.alpha = theta[n_net];
        p.heat.beta = theta[n_net + 1];
        p.heat.trainable = false;
        return pinn_loss(probe, data, targets, coll, p, lambda).total;
    };

    Tape tape;
    auto theta = register_params(tape, net.params);
    CoeffVars coeffs;
    coeffs.alpha = tape.parameter(a0);
    coeffs.beta = tape.parameter(be0);
    PinnLossVars lv = build_pinn_loss(tape, spec, theta, data, targets, coll, phys, lambda, coeffs);
    Eigen::VectorXd grad = tape.gradient(lv.total);

    Eigen::VectorXd full(n_net + 2);
    full.head(n_net) = net.params;
    full[n_net] = a0;
    full[n_net + 1] = be0;
    Eigen::VectorXd fd = testutil::fd_gradient(loss_at, full);
    CHECK(testutil::grad_matches(grad, fd, 1e-4, 1e-6));
}

TEST_CASE("gradient with an input transform matches finite differences") {
    // normalized inputs: the jet seeds carry the scale so residual derivatives
    // stay with respect to the physical coordinates
    MlpSpec spec{3, {5}, 1, Activation::tanh};
    Mlp net = init_mlp(spec, 77);
    Eigen::MatrixXd data(3, 3);
    data << 0.0, 1.0, 0.0, 3.0, 5.0, 0.4, 7.0, 7.0, 1.0;
    Eigen::VectorXd targets(3);
    targets << 25.0, 30.0, 28.0;
    Eigen::MatrixXd coll(3, 3);
    coll << 1.0, 2.0, 0.1, 4.0, 3.0, 0.5, 6.0, 6.0, 0.9;
    PhysicsSpec phys;
    phys.kind = ResidualKind::heat2d;
    phys.heat.alpha = 10.0;
    phys.heat.beta = 10.0;
    const double lambda = 0.5;

    InputTransform tf;
    tf.shift.resize(3);
    tf.scale.resize(3);
    tf.shift << 3.5, 3.5, 0.5;
    tf.scale << 2.0 / 7.0, 2.0 / 7.0, 2.0;

    Tape tape;
    auto theta = register_params(tape, net.params);
    PinnLossVars lv =
        build_pinn_loss(tape, spec, theta, data, targets, coll, phys, lambda, {}, tf);
    Eigen::VectorXd grad = tape.gradient(lv.total);

    auto loss_at = [&](const Eigen::VectorXd& p) {
        Tape t2;
        std::vector<Var> th;
        for (Eigen::Index i = 0; i < p.size(); ++i) th.push_back(t2.parameter(p[i]));
        return build_pinn_loss(t2, spec, th, data, targets, coll, phys, lambda, {}, tf)
            .breakdown.total;
    };
    Eigen::VectorXd fd = testutil::fd_gradient(loss_at, net.params);
    CHECK(testutil::grad_matches(grad, fd, 1e-4, 1e-6));

    // and the transform is equivalent to hand-scaling the network inputs
    std::vector<double> raw{4.0, 2.0, 0.3};
    std::vector<double> scaled{(4.0 - 3.5) * 2.0 / 7.0, (2.0 - 3.5) * 2.0 / 7.0,
                               (0.3 - 0.5) * 2.0};
    Eigen::VectorXd sx(3);
    sx << scaled[0], scaled[1], scaled[2];
    Eigen::MatrixXd one_point(1, 3);
    one_point << raw[0], raw[1], raw[2];
    Tape t3;
    auto th3 = register_params(t3, net.params);
    PinnLossVars direct = build_pinn_loss(t3, spec, th3, one_point, targets.head(1),
                                          Eigen::MatrixXd(0, 3), phys, 0.0, {}, tf);
    const double pred = forward(net, sx)[0];
    CHECK(direct.breakdown.data_loss ==
          doctest::Approx((pred - targets[0]) * (pred - targets[0])).epsilon(1e-12));
}

TEST_CASE("random small networks pass the gradient check") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::uniform_int_distribution<int> units(2, 8);
    std::uniform_int_distribution<int> layers(1, 3);

    for (int trial = 0; trial < 20; ++trial) {
        MlpSpec spec;
        spec.input_dim = 1;
        spec.output_dim = 1;
        spec.activation = trial % 2 ? Activation::sine : Activation::tanh;
        const int L = layers(rng);
        for (int l = 0; l < L; ++l) spec.hidden.push_back(units(rng));
        Mlp net = init_mlp(spec, 1000 + static_cast<std::uint64_t>(trial));

        Eigen::MatrixXd data(3, 1);
        data << dist(rng), dist(rng), dist(rng);
        Eigen::VectorXd targets(3);
        targets << dist(rng), dist(rng), dist(rng);
        Eigen::MatrixXd coll(2, 1);
        coll << dist(rng), dist(rng);
        PhysicsSpec phys;
        phys.kind = ResidualKind::pendulum;
        const double lambda = 0.01;

        Tape tape;
        auto theta = register_params(tape, net.params);
        PinnLossVars lv = build_pinn_loss(tape, spec, theta, data, targets, coll, phys, lambda, {});
        Eigen::VectorXd grad = tape.gradient(lv.total);

        auto loss_at = [&](const Eigen::VectorXd& p) {
            Mlp probe = net;
            probe.params = p;
            return pinn_loss(probe, data, targets, coll, phys, lambda).total;
        };
        Eigen::VectorXd fd = testutil::fd_gradient(loss_at, net.params);
        CHECK(testutil::grad_matches(grad, fd, 1e-4, 1e-7));
    }
}

TEST_CASE("untrained b stays bit-constant") {
    PhysicsSpec phys;
    phys.kind = ResidualKind::pendulum;
    phys.pendulum.b = 0.001;
    phys.pendulum.b_trainable = false;
    const double before = phys.pendulum.b;

    MlpSpec spec{1, {3}, 1, Activation::sine};
    Mlp net = init_mlp(spec, 2);
    Eigen::MatrixXd data(2, 1);
    data << 0.0, 1.0;
    Eigen::VectorXd targets(2);
    targets << 0.0, 0.1;
    Eigen::MatrixXd coll(2, 1);
    coll << 0.2, 0.8;
    for (int i = 0; i < 3; ++i) {
        (void)pinn_loss(net, data, targets, coll, phys, 0.001);
    }
    CHECK(phys.pendulum.b == before);
}
