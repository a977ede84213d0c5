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

// End-to-end acceptance suite: one line per criterion, exit 0 iff all pass.
// `--only N` (repeatable) restricts the run while debugging.

#include "pinnlab/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.hpp"

using namespace pinnlab;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// --- 1: ideal pendulum, abundant data ---------------------------------------

Outcome criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = preset("ideal-abundant");
    SweepTable table = run_sweep(cfg, "n_data", {150.0}, 5, /*jobs=*/1);
    const double med = table.median_final_rmse[0];
    const double secs = elapsed_s(t0);
    Outcome out;
    out.pass = med <= 0.02 && secs <= 300.0;
    out.detail = "median final RMSE " + fmt(med) + " (<= 0.02), " + fmt(secs) + "s (<= 300)";
    return out;
}

// --- 2/3: sparse-data gaps ---------------------------------------------------

Outcome sparse_gap(Strategy strategy, int n_data, double pinn_max, double nn_min,
                   double min_ratio) {
    ExperimentConfig base =
        preset(strategy == Strategy::linspace ? "ideal-linspace" : "ideal-uniform");
    base.max_iters = 20000;  // paper iterations count the optimizer's inner loop

    ExperimentConfig pinn = base;
    pinn.model = ModelKind::pinn;
    SweepTable pt = run_sweep(pinn, "n_data", {static_cast<double>(n_data)}, 5, 2);

    ExperimentConfig nn = base;
    nn.model = ModelKind::nn;
    SweepTable nt = run_sweep(nn, "n_data", {static_cast<double>(n_data)}, 5, 2);

    const double p = pt.median_final_rmse[0];
    const double n = nt.median_final_rmse[0];
    Outcome out;
    out.pass = p <= pinn_max && n >= nn_min;
    out.detail = "PINN " + fmt(p) + " (<= " + fmt(pinn_max) + "), NN " + fmt(n) +
                 " (>= " + fmt(nn_min) + ")";
    if (min_ratio > 0.0) {
        out.pass = out.pass && n / p >= min_ratio;
        out.detail += ", ratio " + fmt(n / p) + " (>= " + fmt(min_ratio) + ")";
    }
    return out;
}

Outcome criterion2() { return sparse_gap(Strategy::linspace, 5, 0.10, 0.5, 5.0); }
Outcome criterion3() { return sparse_gap(Strategy::uniform, 10, 0.25, 0.6, 0.0); }

// --- 4: noisy-data ordering --------------------------------------------------

Outcome criterion4() {
    const std::vector<double> sigmas = {0.5, 0.3, 0.1};
    ExperimentConfig base = preset("ideal-noisy");

    ExperimentConfig pinn = base;
    pinn.model = ModelKind::pinn;
    SweepTable pt = run_sweep(pinn, "sigma", sigmas, 5, 2);

    ExperimentConfig nn = base;
    nn.model = ModelKind::nn;
    SweepTable nt = run_sweep(nn, "sigma", sigmas, 5, 2);

    Outcome out;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        const double p = pt.median_best_rmse[i];
        const double n = nt.median_best_rmse[i];
        if (!(p <= n)) out.pass = false;
        out.detail += (i ? "; " : "") + std::string("sigma ") + fmt(sigmas[i]) + ": PINN " +
                      fmt(p) + " vs NN " + fmt(n);
    }
    return out;
}

// --- 5: Euler-Cromer correctness ---------------------------------------------

Outcome criterion5() {
    Outcome out;
    PendulumSimConfig cfg;
    cfg.b = 0.0;
    PendulumSolution sol = euler_cromer(cfg);

    const double dt = 6.0 / 1499.0;
    const double omega2 = -(9.8 / 0.325) * std::sin(-M_PI / 2.0) * dt;
    const double phi2 = -M_PI / 2.0 + omega2 * dt;
    const double step_err = std::max(std::abs(sol.omega[1] - omega2),
                                     std::abs(sol.series.values[1] - phi2));

    Eigen::VectorXd e = pendulum_energy(sol);
    double energy_dev = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        energy_dev = std::max(energy_dev, std::abs(e[i] / e[0] - 1.0));
    }

    PendulumSimConfig fine_cfg = cfg;
    fine_cfg.n_points = (cfg.n_points - 1) * 20 + 1;
    PendulumSolution fine = euler_cromer(fine_cfg);
    double traj_err = 0.0;
    for (Eigen::Index i = 0; i < sol.series.size(); ++i) {
        traj_err =
            std::max(traj_err, std::abs(sol.series.values[i] - fine.series.values[i * 20]));
    }

    out.pass = step_err <= 1e-12 && energy_dev <= 0.05 && traj_err <= 0.02;
    out.detail = "first-step err " + fmt(step_err) + " (<= 1e-12), energy dev " +
                 fmt(energy_dev) + " (<= 0.05), dt/20 traj err " + fmt(traj_err) + " (<= 0.02)";
    return out;
}

// --- 6: differentiation ------------------------------------------------------

Outcome criterion6() {
    Outcome out;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::uniform_int_distribution<int> units(2, 8);
    std::uniform_int_distribution<int> n_layers(1, 3);

    int grad_failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        MlpSpec spec;
        spec.input_dim = 1;
        spec.output_dim = 1;
        spec.activation = trial % 2 ? Activation::sine : Activation::tanh;
        const int L = n_layers(rng);
        for (int l = 0; l < L; ++l) spec.hidden.push_back(units(rng));
        Mlp net = init_mlp(spec, 5000 + static_cast<std::uint64_t>(trial));

        Eigen::MatrixXd data(3, 1), coll(2, 1);
        data << dist(rng), dist(rng), dist(rng);
        coll << dist(rng), dist(rng);
        Eigen::VectorXd targets(3);
        targets << dist(rng), dist(rng), dist(rng);
        PhysicsSpec phys;
        phys.kind = ResidualKind::pendulum;
        const double lambda = 0.001;

        Tape tape;
        auto theta = register_params(tape, net.params);
        PinnLossVars lv =
            build_pinn_loss(tape, spec, theta, data, targets, coll, phys, lambda, {});
        Eigen::VectorXd grad = tape.gradient(lv.total);

        auto loss_at = [&](const Eigen::VectorXd& p) {
            Mlp probe = net;
            probe.params = p;
            return pinn_loss(probe, data, targets, coll, phys, lambda).total;
        };
        Eigen::VectorXd fd = testutil::fd_gradient(loss_at, net.params);
        if (!testutil::grad_matches(grad, fd, 1e-4, 1e-7)) ++grad_failures;
    }

    double jet_err = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const double x = dist(rng) * 1.5;
        const double xs[] = {x};
        // f(x) = tanh(sin(2x)) + x^2 sin(x)
        Jet2d j = jet_seed(xs, 0)[0];
        Jet2d f = tanh(sin(j * 2.0)) + square(j) * sin(j);
        const double s = std::sin(2.0 * x), c = std::cos(2.0 * x);
        const double t = std::tanh(s), g = 1.0 - t * t;
        const double d1 = g * 2.0 * c + 2.0 * x * std::sin(x) + x * x * std::cos(x);
        const double d2 = -2.0 * t * g * 4.0 * c * c + g * -4.0 * s + 2.0 * std::sin(x) +
                          4.0 * x * std::cos(x) - x * x * std::sin(x);
        jet_err = std::max(jet_err, std::abs(f.d1 - d1));
        jet_err = std::max(jet_err, std::abs(f.d2 - d2));
    }

    out.pass = grad_failures == 0 && jet_err <= 1e-10;
    out.detail = std::to_string(100 - grad_failures) +
                 "/100 gradient checks within 1e-4, jet max err " + fmt(jet_err) + " (<= 1e-10)";
    return out;
}

// --- 7: optimizers -----------------------------------------------------------

Outcome criterion7() {
    Outcome out;

    LbfgsState ros_state(1.0, 10);
    TerminationConfig term;
    term.max_iters = 200;
    Eigen::VectorXd x(2);
    x << -1.2, 1.0;
    auto rosenbrock = [](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        g.resize(2);
        g[0] = -2.0 * (1.0 - p[0]) - 400.0 * p[0] * (p[1] - p[0] * p[0]);
        g[1] = 200.0 * (p[1] - p[0] * p[0]);
        return (1.0 - p[0]) * (1.0 - p[0]) +
               100.0 * (p[1] - p[0] * p[0]) * (p[1] - p[0] * p[0]);
    };
    Optimizer opt{ros_state};
    MinimizeResult ros = minimize(term, opt, x, rosenbrock);

    LbfgsState fresh(0.5);
    Eigen::VectorXd start(3);
    start << 1.0, -2.0, 4.0;
    auto quad = [](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        g = p;
        return 0.5 * p.squaredNorm();
    };
    StepOutcome first = lbfgs_step(fresh, start, quad, TerminationConfig{});
    const bool empty_exact = (first.params.array() == (start - 0.5 * start).array()).all();

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1e4, 1e4);
    bool adam_ok = true;
    for (int trial = 0; trial < 200; ++trial) {
        AdamState adam(0.01);
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
        Eigen::VectorXd grad(3);
        for (int i = 0; i < 3; ++i) grad[i] = dist(rng);
        auto f = [&](const Eigen::VectorXd&, Eigen::VectorXd& g) {
            g = grad;
            return 0.0;
        };
        StepOutcome step = adam_step(adam, zero, f);
        if (step.params.lpNorm<Eigen::Infinity>() > 0.01 * (1.0 + 1e-9)) adam_ok = false;
    }

    out.pass = ros.final_loss <= 1e-6 && empty_exact && adam_ok;
    out.detail = "Rosenbrock loss " + fmt(ros.final_loss) + " after " +
                 std::to_string(ros.curve.size()) + " iters (<= 1e-6), empty-history step " +
                 (empty_exact ? "exact" : "NOT exact") + ", Adam first-step bound " +
                 (adam_ok ? "holds" : "violated");
    return out;
}

// --- 8: heat synthetic inverse problem ---------------------------------------

Outcome criterion8() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = preset("heat-synthetic-inverse");

    ExperimentConfig paper_start = cfg;  // alpha/beta at the reference init 10.0
    TrainReport ref = run_experiment(paper_start);

    ExperimentConfig perturbed = cfg;
    perturbed.alpha_init = 5.0;
    perturbed.beta_init = 5.0;
    TrainReport rep = run_experiment(perturbed);

    const double secs = elapsed_s(t0);
    const double alpha_err = std::abs(rep.learned_alpha - 10.0) / 10.0;
    const double beta_err = std::abs(rep.learned_beta - 10.0) / 10.0;
    const double rel_rmse = rep.final_rmse / rep.data_range;

    Outcome out;
    out.pass = alpha_err <= 0.20 && beta_err <= 0.20 && rel_rmse <= 0.05 && secs <= 900.0;
    out.detail = "perturbed start: alpha " + fmt(rep.learned_alpha) + ", beta " +
                 fmt(rep.learned_beta) + " (each within 20% of 10), RMSE " +
                 fmt(rep.final_rmse) + " = " + fmt(100.0 * rel_rmse) +
                 "% of range (<= 5%), ref-start alpha " + fmt(ref.learned_alpha) + ", " +
                 fmt(secs) + "s (<= 900)";
    return out;
}

// --- 9: denoising ------------------------------------------------------------

Outcome criterion9() {
    Outcome out;

    const int n = 1000;
    Eigen::VectorXd cubic(n);
    for (int i = 0; i < n; ++i) {
        const double x = i * 0.01;
        cubic[i] = 1.5 - 0.8 * x + 0.2 * x * x - 0.03 * x * x * x;
    }
    const double savgol_err =
        (savgol_smooth(cubic, 401, 3) - cubic).lpNorm<Eigen::Infinity>();

    HeatSimConfig sim;
    sim.steps = 1200;
    sim.initial = gaussian_field(8, 8, 3.5, 3.5, 2.0, 80.0, 20.0);
    FrameStack stack = fd_heat_solve(sim);

    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> frame_pick(1, static_cast<int>(stack.size()) - 1);
    std::uniform_int_distribution<int> pixel_pick(0, 63);
    std::set<int> injected;
    while (injected.size() < 100) injected.insert(frame_pick(rng));
    for (int f : injected) {
        const int px = pixel_pick(rng);
        stack.frames[static_cast<std::size_t>(f)](px / 8, px % 8) += 200.0;
    }

    const std::vector<int> found = spike_indices(stack, 100.0);
    const std::set<int> found_set(found.begin(), found.end());
    const bool spikes_exact = found_set == injected;

    out.pass = savgol_err <= 1e-8 && spikes_exact;
    out.detail = "cubic reproduction err " + fmt(savgol_err) + " (<= 1e-8), spike recovery " +
                 std::to_string(found.size()) + "/100 flagged, " +
                 (spikes_exact ? "exact match" : "MISMATCH");
    return out;
}

// --- 10: determinism ---------------------------------------------------------

Outcome criterion10() {
    Outcome out;

    ExperimentConfig pend = preset("ideal-linspace");
    pend.n_data = 20;
    pend.max_iters = 300;
    const std::string a = report_json(run_experiment(pend), false).dump();
    const std::string b = report_json(run_experiment(pend), false).dump();

    ExperimentConfig heat = preset("heat-synthetic-inverse");
    heat.max_iters = 25;
    heat.n_data = 8;
    heat.n_collocation = 64;
    const std::string c = report_json(run_experiment(heat), false).dump();
    const std::string d = report_json(run_experiment(heat), false).dump();

    out.pass = a == b && c == d;
    out.detail = std::string("pendulum payloads ") + (a == b ? "identical" : "DIFFER") +
                 ", heat payloads " + (c == d ? "identical" : "DIFFER");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            only.insert(std::atoi(argv[++i]));
        }
    }

    struct Entry {
        int id;
        const char* name;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {1, "ideal pendulum, abundant data", criterion1},
        {2, "sparse linspace gap (N_d = 5)", criterion2},
        {3, "sparse uniform-random gap (N_d = 10)", criterion3},
        {4, "noisy data ordering", criterion4},
        {5, "Euler-Cromer correctness", criterion5},
        {6, "differentiation", criterion6},
        {7, "optimizers", criterion7},
        {8, "heat synthetic inverse problem", criterion8},
        {9, "denoising", criterion9},
        {10, "determinism", criterion10},
    };

    int failures = 0;
    for (const Entry& e : entries) {
        if (!only.empty() && !only.count(e.id)) continue;
        Outcome r;
        try {
            r = e.fn();
        } catch (const std::exception& ex) {
            r.pass = false;
            r.detail = std::string("exception: ") + ex.what();
        }
        std::printf("[%s] criterion %d: %s — %s\n", r.pass ? "PASS" : "FAIL", e.id, e.name,
                    r.detail.c_str());
        std::fflush(stdout);
        if (!r.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
