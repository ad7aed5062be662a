#pragma once

#include "ntklab/numerics.hpp"

#include <functional>
#include <string>
#include <variant>

namespace ntklab {

/// A point in R^d. Point sets are stored as matrices with one point per row.
using Point = Eigen::VectorXd;
using PointSet = Eigen::MatrixXd;

/// Two-layer ReLU NTK on R^d (with biases).
struct NtkD {
    int d = 1;
};
/// Scalar specialization of NtkD for d = 1.
struct Ntk1 {};
/// G_alpha(x, y) = alpha - |x - y| / pi on scalars.
struct GAlpha {
    double alpha = 1.0;
};
struct Pi0 {};
struct Pi1 {};

using KernelSpec = std::variant<NtkD, Ntk1, GAlpha, Pi0, Pi1>;

std::string describe(const KernelSpec& spec);

/// Dimension the kernel expects, or 1 for the scalar kernels.
int input_dimension(const KernelSpec& spec);

/// Angle between the lifted vectors (x, 1) and (y, 1), in [0, pi].
double psi(const Point& x, const Point& y);
double psi(double x, double y);

double ntk_eval(int d, const Point& x, const Point& y);
double ntk1_eval(double x, double y);
double g_alpha_eval(double alpha, double x, double y);

struct PiValues {
    double pi0;
    double pi1;
};
PiValues pi_kernels(double x, double y);

/// Second x-derivative of K(x, nodes[j]) for x strictly between nodes:
/// (4/pi) |x - nodes[j]| / (1 + x^2)^2. Throws AtNode when x sits on a node.
Vector ntk1_second_derivative(double xi, const Vector& nodes);

/// Evaluates `spec` at a pair of points; scalar kernels read coordinate 0.
double kernel_value(const KernelSpec& spec, const Point& x, const Point& y);

struct GramMatrix {
    KernelSpec spec;
    PointSet points;
    SymMatrix matrix;
};

/// Smallest pairwise Euclidean distance between rows; +inf for one point.
double min_distance(const PointSet& points);

/// Pairwise kernel matrix. Throws DuplicatePoints when two points are within
/// 1e-12 of each other and DimensionMismatch when `points` has the wrong width.
GramMatrix gram(const KernelSpec& spec, const PointSet& points);

/// Convenience for one-dimensional designs.
GramMatrix gram(const KernelSpec& spec, const Vector& xs);

/// K(query_i, points_j), a query.rows() x points.rows() matrix.
Matrix cross_gram(const KernelSpec& spec, const PointSet& query, const PointSet& points);

/// Column vector of scalars as an n x 1 point set.
PointSet as_points(const Vector& xs);

}  // namespace ntklab
