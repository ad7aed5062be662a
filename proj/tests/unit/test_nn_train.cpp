#include "ntklab/error.hpp"
#include "ntklab/experiments/generators.hpp"
#include "ntklab/nn_train.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ntklab;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no ntklab::Error thrown";
    return ErrorCode::IoError;
}

Dataset noisy_dataset(int n, int d, Rng& rng) {
    Dataset data;
    data.x.resize(n, d);
    for (int i = 0; i < n * d; ++i) data.x.data()[i] = rng.uniform(-1, 1);
    data.y = normal(rng, n);
    return data;
}

/// Breaks the antisymmetric pairing so gradients are generic.
TwoLayerNet perturbed(int m, int d, Rng& rng) {
    TwoLayerNet net = init_net(m, d, rng);
    for (int r = 0; r < 2 * m; ++r) net.a[r] += 0.3 * rng.normal();
    return net;
}

double min_abs_preactivation(const TwoLayerNet& net, const PointSet& x) {
    double out = INFINITY;
    for (int i = 0; i < x.rows(); ++i)
        for (int r = 0; r < 2 * net.m; ++r)
            out = std::min(out, std::abs(net.w.row(r).dot(x.row(i)) + net.b_hidden[r]));
    return out;
}

}  // namespace

TEST(InitNet, ZeroOutputAndPairing) {
    Rng rng(1);
    for (int d : {1, 3}) {
        const TwoLayerNet net = init_net(50, d, rng);
        for (int r = 0; r < 50; ++r) {
            EXPECT_EQ(net.a[r + 50], -net.a[r]);
            EXPECT_EQ(net.w.row(r + 50), net.w.row(r));
            EXPECT_EQ(net.b_hidden[r + 50], net.b_hidden[r]);
        }
        for (int i = 0; i < 100; ++i) {
            const Point x = normal(rng, d);
            EXPECT_NEAR(forward(net, x), 0.0, 1e-12);
            EXPECT_GE(nnk_eval(net, x, x), 1.0);
        }
    }
    Rng r1(99), r2(99);
    const TwoLayerNet a = init_net(7, 2, r1), b = init_net(7, 2, r2);
    EXPECT_EQ(a.a, b.a);
    EXPECT_EQ(a.w, b.w);
    EXPECT_EQ(a.b_hidden, b.b_hidden);
}

TEST(Forward, HandExamples) {
    TwoLayerNet net;
    net.m = 1;
    net.d = 1;
    net.a = (Vector(2) << 1, 0).finished();
    net.w = Matrix::Ones(2, 1);
    net.b_hidden = Vector::Zero(2);
    EXPECT_DOUBLE_EQ(forward(net, Point::Constant(1, 2.0)), 2.0);
    net.b_hidden.setConstant(-1e6);
    EXPECT_EQ(forward(net, Point::Constant(1, 0.5)), 0.0);
    EXPECT_EQ(code_of([&] { forward(net, Point::Zero(2)); }), ErrorCode::DimensionMismatch);
    Rng rng(2);
    const TwoLayerNet g = perturbed(5, 3, rng);
    PointSet x(4, 3);
    for (int i = 0; i < 12; ++i) x.data()[i] = rng.normal();
    const Vector fb = forward_batch(g, x);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(fb[i], forward(g, x.row(i).transpose()), 1e-13);
}

TEST(ParamGrad, ZeroResidualGivesZeroGradient) {
    Rng rng(3);
    const TwoLayerNet net = perturbed(6, 2, rng);
    Dataset d = noisy_dataset(9, 2, rng);
    d.y = forward_batch(net, d.x);
    const ParamGrad g = param_grad(net, d);
    EXPECT_LE(g.a.cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE(g.w.cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE(g.b_hidden.cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE(std::abs(g.b_out), 1e-15);
}

TEST(ParamGrad, SingleActiveNeuronByHand) {
    TwoLayerNet net;
    net.m = 1;
    net.d = 1;
    net.a = (Vector(2) << 2, 0.5).finished();
    net.w = (Matrix(2, 1) << 1.5, -1).finished();
    net.b_hidden = (Vector(2) << 0.25, -3).finished();
    Dataset d;
    d.x = PointSet::Constant(1, 1, 0.5);
    d.y = Vector::Constant(1, 0.1);
    // h_0 = 1, h_1 = -3.5 (inactive); f = 2 * 1 = 2; u = 1.9; loss = u^2 / 2.
    const ParamGrad g = param_grad(net, d);
    EXPECT_NEAR(g.a[0], 1.9 * 1.0, 1e-14);
    EXPECT_EQ(g.a[1], 0.0);
    EXPECT_NEAR(g.w(0, 0), 1.9 * 2 * 0.5, 1e-14);
    EXPECT_NEAR(g.b_hidden[0], 1.9 * 2, 1e-14);
    EXPECT_EQ(g.w(1, 0), 0.0);
    EXPECT_EQ(g.b_hidden[1], 0.0);
    EXPECT_NEAR(g.b_out, 1.9, 1e-14);
}

TEST(ParamGrad, CentralDifferences) {
    Rng rng(4);
    int checked = 0;
    while (checked < 10) {
        const int m = 1 + static_cast<int>(rng.below(32));
        const int d = 1 + static_cast<int>(rng.below(3));
        TwoLayerNet net = perturbed(m, d, rng);
        const Dataset data = noisy_dataset(7, d, rng);
        if (min_abs_preactivation(net, data.x) < 1e-4) continue;
        ++checked;
        const ParamGrad g = param_grad(net, data);
        const double h = 1e-6;
        auto check = [&](double& param, double analytic) {
            const double keep = param;
            param = keep + h;
            const double up = training_loss(net, data);
            param = keep - h;
            const double down = training_loss(net, data);
            param = keep;
            const double fd = (up - down) / (2 * h);
            EXPECT_LE(std::abs(fd - analytic), 1e-5 * std::max(std::abs(analytic), 1e-3));
        };
        for (int r = 0; r < 2 * m; ++r) {
            check(net.a[r], g.a[r]);
            check(net.b_hidden[r], g.b_hidden[r]);
            for (int j = 0; j < d; ++j) check(net.w(r, j), g.w(r, j));
        }
        check(net.b_out, g.b_out);
    }
}

TEST(ParamGrad, DimensionMismatch) {
    Rng rng(5);
    const TwoLayerNet net = init_net(3, 2, rng);
    const Dataset d = noisy_dataset(4, 3, rng);
    EXPECT_EQ(code_of([&] { param_grad(net, d); }), ErrorCode::DimensionMismatch);
}

TEST(TrainStep, ZeroGradientLeavesNet) {
    Rng rng(6);
    const TwoLayerNet net = perturbed(4, 1, rng);
    Dataset d = noisy_dataset(5, 1, rng);
    d.y = forward_batch(net, d.x);
    const TwoLayerNet next = train_step(net, d, 0.1);
    EXPECT_EQ(next.a, net.a);
    EXPECT_EQ(next.w, net.w);
}

TEST(TrainStep, SmallStepDescends) {
    Rng rng(7);
    TwoLayerNet net = init_net(64, 2, rng);
    const Dataset d = noisy_dataset(20, 2, rng);
    for (int i = 0; i < 20; ++i) {
        const double before = training_loss(net, d);
        net = train_step(net, d, 1e-3);
        EXPECT_LE(training_loss(net, d), before);
    }
}

TEST(TrainStep, TwoHalfStepsOnLinearRegion) {
    // No activation changes sign over the step, so one step of eta and two of
    // eta/2 differ only by the O(eta^2) curvature term.
    Rng rng(19);
    const TwoLayerNet net = perturbed(8, 2, rng);
    const Dataset d = noisy_dataset(6, 2, rng);
    ASSERT_GT(min_abs_preactivation(net, d.x), 1e-3);
    const double eta = 1e-6;
    const TwoLayerNet one = train_step(net, d, eta);
    const TwoLayerNet two = train_step(train_step(net, d, eta / 2), d, eta / 2);
    EXPECT_LE((one.a - two.a).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((one.w - two.w).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((one.b_hidden - two.b_hidden).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Nnk, SymmetryPsdAndGradientInnerProduct) {
    Rng rng(8);
    const TwoLayerNet net = perturbed(10, 2, rng);
    PointSet x(12, 2);
    for (int i = 0; i < 24; ++i) x.data()[i] = rng.uniform(-1, 1);
    const SymMatrix g = nnk_gram(net, x);
    EXPECT_GE(oracle::jacobi_min_eigenvalue(g.entries()), -1e-10);
    for (int i = 0; i < 12; ++i) {
        for (int j = 0; j < 12; ++j) {
            const Point xi = x.row(i).transpose(), xj = x.row(j).transpose();
            EXPECT_EQ(nnk_eval(net, xi, xj), nnk_eval(net, xj, xi));
            EXPECT_NEAR(g(i, j), nnk_eval(net, xi, xj), 1e-12);
            // Gradient of f at one point from param_grad on pseudo-data with residual -1.
            auto grad_f = [&](const Point& p) {
                Dataset one;
                one.x = p.transpose();
                one.y = Vector::Constant(1, forward(net, p) - 1.0);
                return param_grad(net, one);
            };
            const ParamGrad gi = grad_f(xi), gj = grad_f(xj);
            const double inner = gi.a.dot(gj.a) + (gi.w.array() * gj.w.array()).sum() +
                                 gi.b_hidden.dot(gj.b_hidden) + gi.b_out * gj.b_out;
            EXPECT_NEAR(nnk_eval(net, xi, xj), inner, 1e-10);
        }
    }
}

TEST(Nnk, WideInitCloseToNtk) {
    Rng rng(9);
    const TwoLayerNet net = init_net(4096, 1, rng);
    const PointSet grid = as_points(Vector::LinSpaced(32, 0, 1));
    EXPECT_LE(kernel_deviation(net, Ntk1{}, grid), 0.2);
}

TEST(KernelDeviation, SelfAndSinglePoint) {
    Rng rng(10);
    const TwoLayerNet net = init_net(16, 1, rng);
    const PointSet grid = as_points(Vector::LinSpaced(9, 0, 1));
    EXPECT_EQ(kernel_deviation(net, net, grid), 0.0);
    const PointSet one = as_points(Vector::Constant(1, 0.3));
    const Point p = Point::Constant(1, 0.3);
    EXPECT_NEAR(kernel_deviation(net, Ntk1{}, one), std::abs(nnk_eval(net, p, p) - ntk1_eval(0.3, 0.3)), 1e-14);
}

TEST(KernelDeviation, DecreasesWithWidth) {
    const PointSet grid = as_points(Vector::LinSpaced(16, 0, 1));
    double narrow = 0, wide = 0;
    for (int s = 0; s < 5; ++s) {
        Rng a = Rng(11).split(s), b = Rng(11).split(s);
        narrow += kernel_deviation(init_net(64, 1, a), Ntk1{}, grid);
        wide += kernel_deviation(init_net(4096, 1, b), Ntk1{}, grid);
    }
    EXPECT_LE(wide, narrow);
}

TEST(Labels, RoundAndClamp) {
    const Vector f = (Vector(5) << -0.7, 0.49, 2.5, 9.0, 3.2).finished();
    const Vector l = predicted_labels(f, 0, 7);
    EXPECT_EQ(l, (Vector(5) << 0, 0, 3, 7, 3).finished());
    const Vector y = (Vector(5) << 0, 0, 3, 7, 2).finished();
    EXPECT_DOUBLE_EQ(label_error_rate(f, y), 0.2);
}

TEST(TrainUntil, FixedTimeZero) {
    Rng rng(12);
    TwoLayerNet net = init_net(8, 1, rng);
    const Dataset d = gen_regression(gen_equispaced(6, 0, 1), "kernel_mix", 0.0, rng);
    const TrainTrajectory t = train_until(net, d, FixedTime{0.0});
    EXPECT_EQ(t.stop_reason, StopReason::FixedTime);
    EXPECT_EQ(t.last().step, 0);
}

TEST(TrainUntil, FixedTimeStopsAtFirstReach) {
    Rng rng(13);
    TwoLayerNet net = init_net(32, 1, rng);
    const Dataset d = gen_regression(gen_equispaced(6, 0, 1), "kernel_mix", 0.0, rng);
    TrainOptions opt;
    opt.eta = 0.03;
    opt.snapshot_times = {0.0, 0.1, 1.0};
    const TrainTrajectory t = train_until(net, d, FixedTime{1.0}, opt);
    EXPECT_EQ(t.stop_reason, StopReason::FixedTime);
    EXPECT_GE(t.last().time, 1.0);
    EXPECT_LT(t.last().time - 0.03, 1.0);
    ASSERT_EQ(t.snapshots.size(), 3u);
    EXPECT_EQ(t.snapshots[0].step, 0);
    for (std::size_t i = 1; i < t.steps.size(); ++i) {
        EXPECT_GT(t.steps[i].time, t.steps[i - 1].time);
        EXPECT_TRUE(std::isfinite(t.steps[i].loss));
    }
}

TEST(TrainUntil, LabelZeroBeforeLossTol) {
    Dataset d;
    d.x = as_points((Vector(4) << 0, 1.0 / 3, 2.0 / 3, 1).finished());
    d.y = (Vector(4) << 0, 1, 0, 1).finished();
    Rng r1(14), r2(14);
    TwoLayerNet n1 = init_net(1000, 1, r1), n2 = init_net(1000, 1, r2);
    TrainOptions opt;
    opt.max_steps = 200000;
    opt.record_every = 1000;
    const TrainTrajectory label = train_until(n1, d, LabelZero{}, opt);
    const TrainTrajectory loss = train_until(n2, d, LossTol{1e-6}, opt);
    EXPECT_EQ(label.stop_reason, StopReason::LabelZero);
    EXPECT_EQ(loss.stop_reason, StopReason::LossTol);
    EXPECT_LT(label.last().time, loss.last().time);
}

TEST(TrainUntil, DivergenceDetected) {
    Rng rng(15);
    TwoLayerNet net = init_net(16, 1, rng);
    const Dataset d = gen_regression(gen_equispaced(8, 0, 1), "sin_mix", 0.1, rng);
    TrainOptions opt;
    opt.eta = 1e4;
    opt.halve_on_increase = false;
    EXPECT_EQ(code_of([&] { train_until(net, d, FixedTime{1e6}, opt); }), ErrorCode::DivergenceDetected);
}

TEST(TrainUntil, DefaultEtaMonotoneLoss) {
    for (int s = 0; s < 20; ++s) {
        Rng rng = Rng(16).split(s);
        TwoLayerNet net = init_net(128, 1, rng);
        const Dataset d = gen_regression(gen_equispaced(12, 0, 1), "kernel_mix", 0.2, rng);
        TrainOptions opt;
        opt.halve_on_increase = false;
        const TrainTrajectory t = train_until(net, d, FixedTime{20.0}, opt);
        EXPECT_LE(t.eta, 0.1);
        for (std::size_t i = 1; i < t.steps.size(); ++i) EXPECT_LE(t.steps[i].loss, t.steps[i - 1].loss + 1e-15) << s;
    }
}

TEST(FunctionDeviation, ZeroAtStartAndZeroData) {
    Rng rng(17);
    TwoLayerNet net = init_net(64, 1, rng);
    const Dataset d = gen_regression(gen_equispaced(8, 0, 1), "kernel_mix", 0.0, rng);
    TrainOptions opt;
    opt.snapshot_times = {0.0, 2.0};
    const TrainTrajectory t = train_until(net, d, FixedTime{2.0}, opt);
    const NtkFlowModel flow = fit(Ntk1{}, d);
    const PointSet grid = as_points(Vector::LinSpaced(33, 0, 1));
    const std::vector<double> gaps = function_deviation(t, flow, grid, {0.0, 2.0});
    EXPECT_NEAR(gaps[0], 0.0, 1e-12);
    EXPECT_GT(gaps[1], 0.0);
    EXPECT_EQ(code_of([&] { function_deviation(t, flow, grid, {1.0}); }), ErrorCode::MissingSnapshot);

    Dataset zero = d;
    zero.y.setZero();
    Rng rng2(18);
    TwoLayerNet z = init_net(64, 1, rng2);
    const TrainTrajectory tz = train_until(z, zero, FixedTime{2.0}, opt);
    const std::vector<double> gz = function_deviation(tz, fit(Ntk1{}, zero), grid, {0.0, 2.0});
    EXPECT_NEAR(gz[1], 0.0, 1e-12);
}
