#include "ntklab/error.hpp"
#include "ntklab/kernels.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ntklab;
using oracle::kPi;

namespace {

Point p1(double x) { return Point::Constant(1, x); }

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no ntklab::Error thrown";
    return ErrorCode::IoError;
}

}  // namespace

TEST(Psi, Examples) {
    EXPECT_DOUBLE_EQ(psi(0.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(psi(0.7, 0.7), 0.0);
    EXPECT_NEAR(psi(0.0, 1.0), kPi / 4, 1e-15);
    EXPECT_NEAR(psi(p1(0.0), p1(1.0)), 0.7853981634, 1e-10);
    const Point x = (Point(3) << 0.3, -1.2, 2.0).finished();
    EXPECT_EQ(psi(x, x), 0.0);
    EXPECT_EQ(code_of([] { psi(Point::Zero(2), Point::Zero(3)); }), ErrorCode::DimensionMismatch);
}

TEST(Psi, MatchesArccosAwayFromZero) {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const Point x = normal(rng, 3), y = normal(rng, 3);
        const double c = (x.dot(y) + 1) / std::sqrt((x.squaredNorm() + 1) * (y.squaredNorm() + 1));
        EXPECT_NEAR(psi(x, y), std::acos(std::clamp(c, -1.0, 1.0)), 1e-7);
    }
}

TEST(NtkEval, Examples) {
    for (int d : {1, 2, 5}) EXPECT_DOUBLE_EQ(ntk_eval(d, Point::Zero(d), Point::Zero(d)), 3.0);
    EXPECT_DOUBLE_EQ(ntk_eval(1, p1(1), p1(1)), 5.0);
    EXPECT_NEAR(ntk_eval(1, p1(0), p1(1)), 1.5 + 1 / kPi + 1, 1e-14);
    EXPECT_NEAR(ntk_eval(1, p1(0), p1(1)), 2.8183098862, 1e-10);
    EXPECT_EQ(code_of([] { ntk_eval(2, Point::Zero(2), Point::Zero(3)); }), ErrorCode::DimensionMismatch);
}

TEST(NtkEval, MatchesArccosOracle) {
    Rng rng(2);
    for (int d = 1; d <= 5; ++d) {
        for (int i = 0; i < 50; ++i) {
            const Point x = normal(rng, d), y = normal(rng, d);
            EXPECT_NEAR(ntk_eval(d, x, y), oracle::ntk_arccos(x, y), 1e-9 * oracle::ntk_arccos(x, y));
        }
    }
}

TEST(Ntk1Eval, ExamplesAndConsistency) {
    EXPECT_DOUBLE_EQ(ntk1_eval(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(ntk1_eval(1, 1), 5.0);
    EXPECT_NEAR(ntk1_eval(0, 1), 2.8183098862, 1e-10);
    for (int i = 0; i < 64; ++i) {
        for (int j = 0; j < 64; ++j) {
            const double x = i / 63.0, y = j / 63.0;
            const double k = ntk1_eval(x, y);
            EXPECT_NEAR(k, ntk_eval(1, p1(x), p1(y)), 1e-13 * k);
            EXPECT_EQ(k, ntk1_eval(y, x));
        }
    }
}

TEST(GAlpha, Examples) {
    EXPECT_NEAR(g_alpha_eval(1, 0, kPi), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(g_alpha_eval(9.0 / 7.0, 0.3, 0.3), 9.0 / 7.0);
    EXPECT_NEAR(g_alpha_eval(1, 0.25, 0.75), 0.8408450569, 1e-10);
}

TEST(PiKernels, Examples) {
    PiValues v = pi_kernels(0, 0);
    EXPECT_DOUBLE_EQ(v.pi0, 1);
    EXPECT_DOUBLE_EQ(v.pi1, 1);
    v = pi_kernels(1, 1);
    EXPECT_DOUBLE_EQ(v.pi0, 1);
    EXPECT_DOUBLE_EQ(v.pi1, 2);
    v = pi_kernels(0, 1);
    EXPECT_NEAR(v.pi0, 0.75, 1e-15);
    EXPECT_NEAR(v.pi1, 1.0683098862, 1e-10);
}

TEST(KernelIdentities, DecompositionOnUnitSquare) {
    for (int i = 0; i <= 40; ++i) {
        for (int j = 0; j <= 40; ++j) {
            const double x = i / 40.0, y = j / 40.0;
            const PiValues v = pi_kernels(x, y);
            const double k = ntk1_eval(x, y);
            EXPECT_NEAR(k, g_alpha_eval(1, x, y) + 2 * v.pi1, 1e-12);
            EXPECT_NEAR(k, 2 * v.pi0 * (1 + x * y) - g_alpha_eval(1, x, y) + 2, 1e-12);
            EXPECT_EQ(g_alpha_eval(1, x, y), g_alpha_eval(1, y, x));
            EXPECT_EQ(v.pi1, pi_kernels(y, x).pi1);
        }
    }
}

TEST(Ntk1SecondDerivative, Examples) {
    const Vector at0 = ntk1_second_derivative(0.5, Vector::Zero(1));
    EXPECT_NEAR(at0[0], 4 / kPi * 0.5 / (1.25 * 1.25), 1e-15);
    EXPECT_NEAR(at0[0], 0.4074366543, 1e-10);
    // 0.5 + 1e-30 rounds to 0.5 in double; 1e-14 is the closest representable analogue.
    const Vector near = ntk1_second_derivative(0.5, Vector::Constant(1, 0.5 + 1e-14));
    EXPECT_LT(near[0], 1e-13);
    const Vector pair = ntk1_second_derivative(0.5, (Vector(2) << 0, 1).finished());
    EXPECT_DOUBLE_EQ(pair[0], pair[1]);
    EXPECT_EQ(code_of([] { ntk1_second_derivative(0.5, Vector::Constant(1, 0.5)); }), ErrorCode::AtNode);
}

TEST(Ntk1SecondDerivative, MatchesFiniteDifferenceOfPi1) {
    // K = G_1 + 2 Pi_1 and G_1 is linear between nodes, so K'' = 2 Pi_1''.
    const double h = 1e-4;
    const Vector nodes = (Vector(4) << 0.0, 0.3, 0.55, 1.0).finished();
    for (double xi : {0.1, 0.2, 0.42, 0.7, 0.9}) {
        const Vector an = ntk1_second_derivative(xi, nodes);
        for (int j = 0; j < nodes.size(); ++j) {
            auto p = [&](double x) { return pi_kernels(x, nodes[j]).pi1; };
            const double fd = 2 * (p(xi + h) - 2 * p(xi) + p(xi - h)) / (h * h);
            EXPECT_NEAR(an[j], fd, 1e-5 * std::abs(an[j]) + 1e-7) << xi << " " << nodes[j];
        }
    }
}

TEST(Gram, Examples) {
    const GramMatrix g = gram(Ntk1{}, (Vector(2) << 0, 1).finished());
    EXPECT_DOUBLE_EQ(g.matrix(0, 0), 3);
    EXPECT_DOUBLE_EQ(g.matrix(1, 1), 5);
    EXPECT_NEAR(g.matrix(0, 1), 2.8183098862, 1e-10);
    EXPECT_DOUBLE_EQ(gram(GAlpha{1}, Vector(Vector::Zero(1))).matrix(0, 0), 1.0);
    const Vector x = (Vector(3) << 0, 0.5, 1).finished();
    const GramMatrix k = gram(Ntk1{}, x);
    const Matrix ref = oracle::ntk1_matrix(x);
    EXPECT_LE((k.matrix.entries() - ref).cwiseAbs().maxCoeff(), 1e-14 * ref.cwiseAbs().maxCoeff());
}

TEST(Gram, AllSpecsMatchScalarEvaluation) {
    Rng rng(4);
    Vector x(9);
    for (int i = 0; i < 9; ++i) x[i] = rng.uniform();
    for (const KernelSpec& spec : std::vector<KernelSpec>{Ntk1{}, GAlpha{9.0 / 7.0}, Pi0{}, Pi1{}, NtkD{1}}) {
        const GramMatrix g = gram(spec, x);
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 9; ++j) {
                const double v = kernel_value(spec, p1(x[i]), p1(x[j]));
                EXPECT_NEAR(g.matrix(i, j), v, 1e-14 * std::max(1.0, std::abs(v))) << describe(spec);
            }
    }
}

TEST(Gram, Errors) {
    EXPECT_EQ(code_of([] { gram(Ntk1{}, (Vector(2) << 0.2, 0.2 + 1e-13).finished()); }),
              ErrorCode::DuplicatePoints);
    EXPECT_EQ(code_of([] { gram(NtkD{3}, PointSet(PointSet::Zero(2, 2))); }), ErrorCode::DimensionMismatch);
}

TEST(Gram, NtkPositiveDefiniteOnRandomSets) {
    Rng rng(5);
    for (int set = 0; set < 50; ++set) {
        const int n = 1 + static_cast<int>(rng.below(64));
        const int d = 1 + static_cast<int>(rng.below(5));
        PointSet x(n, d);
        for (int i = 0; i < n * d; ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
        const GramMatrix g = gram(NtkD{d}, x);
        EXPECT_GT(oracle::jacobi_min_eigenvalue(g.matrix.entries()), 0.0) << n << "x" << d;
    }
}

TEST(MinDistance, Basics) {
    EXPECT_TRUE(std::isinf(min_distance(PointSet::Zero(1, 2))));
    PointSet x(3, 2);
    x << 0, 0, 3, 4, 1, 1;
    EXPECT_NEAR(min_distance(x), std::sqrt(2.0), 1e-15);
}

TEST(CrossGram, MatchesScalar) {
    PointSet q(2, 2), p(3, 2);
    q << 0.1, 0.2, -0.5, 0.3;
    p << 0, 0, 1, 1, 0.4, -0.2;
    const Matrix c = cross_gram(NtkD{2}, q, p);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(c(i, j), oracle::ntk_arccos(q.row(i), p.row(j)), 1e-12);
}
