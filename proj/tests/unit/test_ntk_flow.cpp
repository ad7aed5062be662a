#include "ntklab/error.hpp"
#include "ntklab/experiments/generators.hpp"
#include "ntklab/ntk_flow.hpp"
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

Dataset make(const Vector& x, const Vector& y) {
    Dataset d;
    d.x = as_points(x);
    d.y = y;
    return d;
}

Dataset random_pm1(int n, std::uint64_t seed) {
    Rng rng(seed);
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.below(2) ? 1.0 : -1.0;
    return make(Vector::LinSpaced(n, 0, 1), y);
}

/// (I - exp(-K t / n)) y from the Jacobi oracle.
Vector oracle_nodes(const Dataset& d, double t) {
    const Matrix k = oracle::ntk1_matrix(d.x.col(0));
    Matrix q;
    const std::vector<double> lam = oracle::jacobi_eigenvalues(k, &q);
    Vector decay(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i) decay[i] = 1 - std::exp(-lam[i] * t / d.n());
    return q * decay.asDiagonal() * q.transpose() * d.y;
}

}  // namespace

TEST(Fit, Examples) {
    const NtkFlowModel one = fit(Ntk1{}, make(Vector::Zero(1), Vector::Constant(1, 2)));
    EXPECT_DOUBLE_EQ(one.basis().eigen.values[0], 3.0);
    const Dataset d = random_pm1(16, 1);
    const NtkFlowModel m = fit(Ntk1{}, d);
    const EigenPair& e = m.basis().eigen;
    const Matrix k = oracle::ntk1_matrix(d.x.col(0));
    EXPECT_LE(inf_norm(e.vectors * e.values.asDiagonal() * e.vectors.transpose() - k), 1e-8 * inf_norm(k));
    EXPECT_EQ(m.projected().size(), 16);
    EXPECT_EQ(fit(Ntk1{}, make(Vector::LinSpaced(5, 0, 1), Vector::Zero(5))).projected(), Vector::Zero(5));
}

TEST(Fit, Errors) {
    EXPECT_EQ(code_of([] { fit(Ntk1{}, make((Vector(2) << 0.1, 0.1).finished(), Vector::Ones(2))); }),
              ErrorCode::DuplicatePoints);
    EXPECT_EQ(code_of([] { fit(Ntk1{}, make(Vector::LinSpaced(3, 0, 1), Vector::Ones(2))); }),
              ErrorCode::LengthMismatch);
}

TEST(TimeSpecTest, NegativeRejected) {
    EXPECT_EQ(code_of([] { TimeSpec::finite(-1.0); }), ErrorCode::DomainError);
}

TEST(FlowFilter, LimitsAndZero) {
    EXPECT_DOUBLE_EQ(flow_filter(0.0, TimeSpec::finite(3.0), 6), 0.5);
    EXPECT_DOUBLE_EQ(flow_filter(0.0, TimeSpec::infinity(), 6), 0.0);
    EXPECT_DOUBLE_EQ(flow_filter(4.0, TimeSpec::infinity(), 6), 0.25);
    EXPECT_NEAR(flow_filter(1e-20, TimeSpec::finite(3.0), 6), 0.5, 1e-15);
    EXPECT_NEAR(flow_filter(2.0, TimeSpec::finite(3.0), 6), (1 - std::exp(-1.0)) / 2, 1e-15);
}

TEST(Predict, Examples) {
    const Dataset d = random_pm1(12, 2);
    const NtkFlowModel m = fit(Ntk1{}, d);
    const PointSet q = as_points(Vector::LinSpaced(50, -0.2, 1.3));
    EXPECT_EQ(predict(m, TimeSpec::finite(0), q), Vector::Zero(50));
    const Vector at = predict(m, TimeSpec::infinity(), d.x);
    EXPECT_LE((at - d.y).cwiseAbs().maxCoeff(), 1e-8 * d.y.cwiseAbs().maxCoeff());
    const NtkFlowModel one = fit(Ntk1{}, make(Vector::Zero(1), Vector::Constant(1, 2)));
    for (double t : {0.01, 0.3, 2.0}) {
        EXPECT_NEAR(predict(one, TimeSpec::finite(t), as_points(Vector::Zero(1)))[0], (1 - std::exp(-3 * t)) * 2, 1e-14);
    }
    EXPECT_EQ(code_of([&] { predict(m, TimeSpec::infinity(), PointSet::Zero(2, 2)); }), ErrorCode::DimensionMismatch);
}

TEST(Predict, FilterConsistencyAgainstJacobi) {
    const Dataset d = random_pm1(20, 3);
    const NtkFlowModel m = fit(Ntk1{}, d);
    for (double t : {0.0, 0.5, 5.0, 80.0, 2000.0}) {
        const Vector ref = oracle_nodes(d, t);
        EXPECT_LE((predict(m, TimeSpec::finite(t), d.x) - ref).cwiseAbs().maxCoeff(), 1e-10) << t;
        EXPECT_LE((predict_at_nodes(m, TimeSpec::finite(t)) - ref).cwiseAbs().maxCoeff(), 1e-10) << t;
    }
}

TEST(Predict, MultiDimensionalInterpolation) {
    Rng rng(8);
    Dataset d;
    d.x.resize(30, 3);
    for (int i = 0; i < 90; ++i) d.x.data()[i] = rng.uniform();
    d.y = normal(rng, 30);
    const NtkFlowModel m = fit(NtkD{3}, d);
    EXPECT_LE((predict(m, TimeSpec::infinity(), d.x) - d.y).cwiseAbs().maxCoeff(), 1e-8 * d.y.cwiseAbs().maxCoeff());
}

TEST(WithLabels, SharesBasis) {
    const Dataset d = random_pm1(10, 4);
    const NtkFlowModel m = fit(Ntk1{}, d);
    const Vector y2 = -2 * d.y;
    const NtkFlowModel m2 = m.with_labels(y2);
    EXPECT_EQ(m.shared_basis(), m2.shared_basis());
    const Vector a = predict_at_nodes(m, TimeSpec::finite(3.0));
    EXPECT_LE((predict_at_nodes(m2, TimeSpec::finite(3.0)) + 2 * a).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ResidualNorm, MonotoneAndBounded) {
    const Dataset d = random_pm1(16, 5);
    const NtkFlowModel m = fit(Ntk1{}, d);
    EXPECT_NEAR(residual_norm(m, 0.0), d.y.norm(), 1e-12);
    const double lmin = oracle::jacobi_min_eigenvalue(oracle::ntk1_matrix(d.x.col(0)));
    double prev = residual_norm(m, 0.0);
    for (double t = 1.0; t < 1e6; t *= 2.5) {
        const double r = residual_norm(m, t);
        EXPECT_LE(r, prev + 1e-14);
        EXPECT_LE(r, std::exp(-lmin * t / 16) * d.y.norm() + 1e-10);
        prev = r;
    }
    EXPECT_LT(residual_norm(m, 1e9), 1e-6);
}

TEST(LinearInterp, Examples) {
    const Dataset d = make((Vector(3) << 0, 0.4, 1).finished(), (Vector(3) << 1, -1, 3).finished());
    EXPECT_DOUBLE_EQ(linear_interp(d, 0.4), -1);
    EXPECT_DOUBLE_EQ(linear_interp(d, 1.0), 3);
    EXPECT_NEAR(linear_interp(d, 0.7), 1.0, 1e-15);
    EXPECT_NEAR(linear_interp(make((Vector(2) << 0, 1).finished(), (Vector(2) << 0, 2).finished()), 0.25), 0.5, 1e-15);
    EXPECT_EQ(code_of([&] { linear_interp(d, 1.01); }), ErrorCode::OutOfRange);
    EXPECT_EQ(code_of([&] { linear_interp(d, -0.01); }), ErrorCode::OutOfRange);
    const Dataset bad = make((Vector(3) << 0, 1, 0.5).finished(), Vector::Zero(3));
    EXPECT_EQ(code_of([&] { linear_interp(bad, 0.2); }), ErrorCode::NotSorted);
}

TEST(SupGap, Examples) {
    const NtkFlowModel zero = fit(Ntk1{}, make(Vector::LinSpaced(8, 0, 1), Vector::Zero(8)));
    EXPECT_EQ(sup_gap(zero, 64), 0.0);
    const Dataset two = make((Vector(2) << 0, 1).finished(), (Vector(2) << 0, 1).finished());
    const NtkFlowModel m = fit(Ntk1{}, two);
    const PointSet dense = as_points(Vector::LinSpaced(100001, 0, 1));
    const Vector f = predict(m, TimeSpec::infinity(), dense);
    double ref = 0.0;
    for (int i = 0; i < dense.rows(); ++i) ref = std::max(ref, std::abs(f[i] - dense(i, 0)));
    EXPECT_NEAR(sup_gap(m, 100001), ref, 1e-12);
    EXPECT_NEAR(sup_gap(m, 4096), ref, 1e-6);
    EXPECT_EQ(code_of([&] { sup_gap(m, 7); }), ErrorCode::TooSmall);
}

TEST(SupGap, SlopeNearMinusTwo) {
    std::vector<double> ns, gaps;
    for (int n = 100; n <= 500; n += 100) {
        ns.push_back(n);
        gaps.push_back(sup_gap(fit(Ntk1{}, random_pm1(n, 1000 + n)), 2048));
    }
    const double s = oracle::ols_loglog(ns, gaps);
    EXPECT_GE(s, -2.3);
    EXPECT_LE(s, -1.7);
}

TEST(ExcessRisk, Examples) {
    auto f = [](const Point& x) { return x[0]; };
    auto zero = [](const Point&) { return 0.0; };
    auto c = [](const Point&) { return 0.7; };
    EXPECT_EQ(excess_risk(f, f, 1, 101), 0.0);
    EXPECT_NEAR(excess_risk(c, zero, 1, 11), 0.49, 1e-12);
    EXPECT_NEAR(excess_risk(f, zero, 1, 10001), 1.0 / 3.0, 1e-6);
    EXPECT_EQ(code_of([&] { excess_risk(f, zero, 2, 100); }), ErrorCode::MissingRng);
    EXPECT_EQ(code_of([&] { excess_risk(f, zero, 1, 1); }), ErrorCode::TooSmall);
    Rng rng(6);
    auto s = [](const Point& x) { return x.sum(); };
    // E (x1 + x2 + x3)^2 on the unit cube = 3/3 + 6/4 = 2.5.
    EXPECT_NEAR(excess_risk(s, zero, 3, 200000, &rng), 2.5, 0.02);
}

TEST(ExcessRisk, TrapezoidConvergence) {
    auto f = [](const Point& x) { return std::sin(3 * x[0]); };
    auto zero = [](const Point&) { return 0.0; };
    const double exact = 0.5 - std::sin(6.0) / 12.0;
    const double e1 = std::abs(excess_risk(f, zero, 1, 101) - exact);
    const double e2 = std::abs(excess_risk(f, zero, 1, 201) - exact);
    EXPECT_NEAR(e1 / e2, 4.0, 0.1);
}

TEST(TStar, Examples) {
    EXPECT_NEAR(t_star(1000, 1), 100, 1e-12);
    EXPECT_DOUBLE_EQ(t_star(1, 5), 5);
    EXPECT_NEAR(t_star(8, 1), 4, 1e-14);
}

TEST(LiRiskExpansion, Examples) {
    EXPECT_EQ(li_risk_expansion(Vector::Zero(5), Vector::Zero(5), 5), 0.0);
    EXPECT_DOUBLE_EQ(li_risk_expansion(Vector::Zero(2), Vector::Ones(2), 2), 1.0);
    EXPECT_EQ(code_of([] { li_risk_expansion(Vector::Zero(3), Vector::Zero(4), 4); }), ErrorCode::LengthMismatch);
    Rng rng(12);
    const double sigma = 0.5;
    double total = 0;
    for (int i = 0; i < 10000; ++i) total += li_risk_expansion(Vector::Zero(512), sigma * normal(rng, 512), 512);
    EXPECT_NEAR(total / 10000, 2.0 / 3.0 * sigma * sigma, 0.05 * 2.0 / 3.0 * sigma * sigma);
}

TEST(RiskFloor, RidgelessAboveQuarterSigmaSquared) {
    const double sigma = 0.5;
    for (int n : {64, 128, 256}) {
        Rng rng(Rng(77).split(n));
        const Dataset d = gen_regression(gen_equispaced(n, 0, 1), "kernel_mix", sigma, rng);
        const NtkFlowModel m = fit(Ntk1{}, d);
        const PointFunction fs = f_star("kernel_mix");
        const double risk = excess_risk(
            [&](const Point& x) { return predict(m, TimeSpec::infinity(), x.transpose())[0]; }, fs, 1, 1001);
        EXPECT_GE(risk, sigma * sigma / 4) << n;
    }
}
