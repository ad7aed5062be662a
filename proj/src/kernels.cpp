#include "ntklab/kernels.hpp"

#include "ntklab/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace ntklab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDuplicateThreshold = 1e-12;
constexpr double kNodeThreshold = 1e-15;

void require_same_dim(const Point& x, const Point& y) {
    if (x.size() != y.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "points of dimension " + std::to_string(x.size()) + " and " +
                        std::to_string(y.size()));
    }
}

// (|x|^2 + 1)(|y|^2 + 1) - (<x, y> + 1)^2 written as |x - y|^2 plus the
// Lagrange-identity form of |x|^2 |y|^2 - <x, y>^2, which avoids cancellation.
double lifted_radicand(const Point& x, const Point& y) {
    const Eigen::Index d = x.size();
    double r = (x - y).squaredNorm();
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
            const double c = x[i] * y[j] - x[j] * y[i];
            r += c * c;
        }
    }
    return r < 0.0 ? 0.0 : r;
}

}  // namespace

std::string describe(const KernelSpec& spec) {
    struct Visitor {
        std::string operator()(const NtkD& k) const { return "ntk_d" + std::to_string(k.d); }
        std::string operator()(const Ntk1&) const { return "ntk1"; }
        std::string operator()(const GAlpha& k) const {
            std::ostringstream os;
            os.precision(17);
            os << "g_alpha(" << k.alpha << ")";
            return os.str();
        }
        std::string operator()(const Pi0&) const { return "pi0"; }
        std::string operator()(const Pi1&) const { return "pi1"; }
    };
    return std::visit(Visitor{}, spec);
}

int input_dimension(const KernelSpec& spec) {
    if (const auto* k = std::get_if<NtkD>(&spec)) return k->d;
    return 1;
}

// psi is evaluated as atan2(sin, cos) of the lifted angle. The textbook
// arccos((<x,y>+1) / sqrt(...)) form loses ~1e-8 absolute accuracy near 0.
double psi(const Point& x, const Point& y) {
    require_same_dim(x, y);
    return std::atan2(std::sqrt(lifted_radicand(x, y)), x.dot(y) + 1.0);
}

double psi(double x, double y) { return std::atan2(std::abs(x - y), 1.0 + x * y); }

double ntk_eval(int d, const Point& x, const Point& y) {
    require_same_dim(x, y);
    if (x.size() != d) {
        throw Error(ErrorCode::DimensionMismatch,
                    "ntk_eval expects dimension " + std::to_string(d) + ", got " +
                        std::to_string(x.size()));
    }
    const double radicand = lifted_radicand(x, y);
    const double inner = x.dot(y) + 1.0;
    const double angle = std::atan2(std::sqrt(radicand), inner);
    return 2.0 / kPi * (kPi - angle) * inner + std::sqrt(radicand) / kPi + 1.0;
}

double ntk1_eval(double x, double y) {
    const double gap = std::abs(x - y);
    const double inner = 1.0 + x * y;
    return 2.0 / kPi * (kPi - std::atan2(gap, inner)) * inner + gap / kPi + 1.0;
}

double g_alpha_eval(double alpha, double x, double y) { return alpha - std::abs(x - y) / kPi; }

PiValues pi_kernels(double x, double y) {
    const double complement = kPi - psi(x, y);
    return {complement / kPi, ((1.0 + x * y) * complement + std::abs(x - y)) / kPi};
}

Vector ntk1_second_derivative(double xi, const Vector& nodes) {
    const double denom = (1.0 + xi * xi) * (1.0 + xi * xi);
    Vector out(nodes.size());
    for (Eigen::Index j = 0; j < nodes.size(); ++j) {
        const double gap = std::abs(xi - nodes[j]);
        if (gap <= kNodeThreshold) {
            throw Error(ErrorCode::AtNode, "second derivative is undefined at node " +
                                               std::to_string(j));
        }
        out[j] = 4.0 / kPi * gap / denom;
    }
    return out;
}

double kernel_value(const KernelSpec& spec, const Point& x, const Point& y) {
    struct Visitor {
        const Point& x;
        const Point& y;
        double scalar_x() const {
            if (x.size() != 1 || y.size() != 1) {
                throw Error(ErrorCode::DimensionMismatch, "scalar kernel needs 1-d points");
            }
            return x[0];
        }
        double operator()(const NtkD& k) const { return ntk_eval(k.d, x, y); }
        double operator()(const Ntk1&) const { return ntk1_eval(scalar_x(), y[0]); }
        double operator()(const GAlpha& k) const { return g_alpha_eval(k.alpha, scalar_x(), y[0]); }
        double operator()(const Pi0&) const { return pi_kernels(scalar_x(), y[0]).pi0; }
        double operator()(const Pi1&) const { return pi_kernels(scalar_x(), y[0]).pi1; }
    };
    return std::visit(Visitor{x, y}, spec);
}

double min_distance(const PointSet& points) {
    double best = std::numeric_limits<double>::infinity();
    const Eigen::Index n = points.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            best = std::min(best, (points.row(i) - points.row(j)).squaredNorm());
        }
    }
    return std::sqrt(best);
}

namespace {

void require_width(const KernelSpec& spec, const PointSet& points) {
    if (points.cols() != input_dimension(spec)) {
        throw Error(ErrorCode::DimensionMismatch,
                    describe(spec) + " expects dimension " + std::to_string(input_dimension(spec)) +
                        ", got " + std::to_string(points.cols()));
    }
}

// Scalar kernels get a tight loop; the general path goes through kernel_value.
template <class Fn>
void fill_lower(Matrix& out, const PointSet& points, Fn&& fn) {
    const Eigen::Index n = points.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) out(i, j) = fn(i, j);
    }
}

}  // namespace

GramMatrix gram(const KernelSpec& spec, const PointSet& points) {
    if (points.rows() < 1) {
        throw Error(ErrorCode::TooSmall, "gram needs at least one point");
    }
    require_width(spec, points);
    if (points.rows() > 1 && min_distance(points) <= kDuplicateThreshold) {
        throw Error(ErrorCode::DuplicatePoints, "minimum pairwise distance <= 1e-12");
    }
    const Eigen::Index n = points.rows();
    Matrix k(n, n);
    if (std::holds_alternative<Ntk1>(spec)) {
        const auto col = points.col(0);
        fill_lower(k, points, [&](Eigen::Index i, Eigen::Index j) { return ntk1_eval(col[i], col[j]); });
    } else if (const auto* g = std::get_if<GAlpha>(&spec)) {
        const auto col = points.col(0);
        const double alpha = g->alpha;
        fill_lower(k, points, [&](Eigen::Index i, Eigen::Index j) { return g_alpha_eval(alpha, col[i], col[j]); });
    } else {
        fill_lower(k, points, [&](Eigen::Index i, Eigen::Index j) {
            return kernel_value(spec, points.row(i).transpose(), points.row(j).transpose());
        });
    }
    return GramMatrix{spec, points, SymMatrix::from_lower(std::move(k))};
}

GramMatrix gram(const KernelSpec& spec, const Vector& xs) { return gram(spec, as_points(xs)); }

Matrix cross_gram(const KernelSpec& spec, const PointSet& query, const PointSet& points) {
    require_width(spec, points);
    if (query.cols() != points.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "query and design dimensions differ");
    }
    Matrix out(query.rows(), points.rows());
    if (std::holds_alternative<Ntk1>(spec)) {
        for (Eigen::Index j = 0; j < points.rows(); ++j) {
            const double xj = points(j, 0);
            for (Eigen::Index i = 0; i < query.rows(); ++i) out(i, j) = ntk1_eval(query(i, 0), xj);
        }
        return out;
    }
    for (Eigen::Index j = 0; j < points.rows(); ++j) {
        const Point pj = points.row(j).transpose();
        for (Eigen::Index i = 0; i < query.rows(); ++i) {
            out(i, j) = kernel_value(spec, query.row(i).transpose(), pj);
        }
    }
    return out;
}

PointSet as_points(const Vector& xs) { return PointSet(xs); }

}  // namespace ntklab
