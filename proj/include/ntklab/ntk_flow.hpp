#pragma once

#include "ntklab/kernels.hpp"
#include "ntklab/numerics.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace ntklab {

/// Observations y_i = f*(x_i) + eps_i on design points x (one per row).
struct Dataset {
    PointSet x;
    Vector y;
    double sigma = 0.0;
    std::optional<std::string> f_star_id;

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index dim() const { return x.cols(); }
};

/// Checks n >= 1 and that y has one entry per design point.
void validate(const Dataset& data);

/// Flow time: a finite t >= 0 or the ridgeless limit.
class TimeSpec {
public:
    static TimeSpec finite(double t);
    static TimeSpec infinity() { return TimeSpec(0.0, true); }

    bool is_infinite() const { return infinite_; }
    double value() const { return t_; }

private:
    TimeSpec(double t, bool infinite) : t_(t), infinite_(infinite) {}
    double t_;
    bool infinite_;
};

/// Eigendecomposition of K(X, X). Shared between models that differ only in y.
struct FlowBasis {
    KernelSpec spec;
    PointSet points;
    EigenPair eigen;
    Vector clipped;  ///< eigen.values with negatives set to 0
};

class NtkFlowModel {
public:
    NtkFlowModel(std::shared_ptr<const FlowBasis> basis, Dataset data);

    const Dataset& dataset() const { return data_; }
    const FlowBasis& basis() const { return *basis_; }
    std::shared_ptr<const FlowBasis> shared_basis() const { return basis_; }
    const KernelSpec& spec() const { return basis_->spec; }
    const Vector& projected() const { return projected_; }
    Eigen::Index n() const { return data_.n(); }

    /// Same design and kernel, new responses; no new decomposition.
    NtkFlowModel with_labels(Vector y) const;

private:
    std::shared_ptr<const FlowBasis> basis_;
    Dataset data_;
    Vector projected_;
};

/// Throws NotPositiveDefinite when lambda_min < -1e-6 lambda_max.
NtkFlowModel fit(const KernelSpec& spec, const Dataset& data);

/// phi_t(lambda) = (1 - exp(-lambda t / n)) / lambda, phi_t(0) = t / n;
/// phi_inf(lambda) = 1 / lambda, phi_inf(0) = 0.
double flow_filter(double lambda, const TimeSpec& time, Eigen::Index n);

/// Weights c with f_t(x) = K(x, X) c.
Vector coefficients(const NtkFlowModel& model, const TimeSpec& time);

Vector predict(const NtkFlowModel& model, const TimeSpec& time, const PointSet& query);

/// f_t at the training points, K Q diag(phi) Q^T y evaluated in the eigenbasis.
Vector predict_at_nodes(const NtkFlowModel& model, const TimeSpec& time);

/// || exp(-K t / n) y ||_2.
double residual_norm(const NtkFlowModel& model, double t);

/// Piecewise-linear interpolant of a sorted 1-d dataset. Throws OutOfRange
/// outside [x_1, x_n] and NotSorted unless the nodes strictly increase.
double linear_interp(const Dataset& data, double x);

/// Max of |f_inf - f_LI| over a uniform grid_n-point grid on [x_1, x_n] plus the nodes.
/// Requires a 1-d design and grid_n >= 4n.
double sup_gap(const NtkFlowModel& model, int grid_n);

/// Integration nodes and weights for the uniform measure on [0, 1]^d:
/// trapezoid on quad_n points when d = 1, quad_n Monte Carlo draws otherwise.
struct QuadratureRule {
    PointSet points;
    Vector weights;
};

QuadratureRule quadrature_rule(int d, int quad_n, Rng* rng);

/// Weighted mean of (pred - truth)^2.
double excess_risk(const Vector& pred, const Vector& truth, const QuadratureRule& rule);

using PointFunction = std::function<double(const Point&)>;

/// Throws MissingRng for d > 1 without an rng, TooSmall for quad_n < 2.
double excess_risk(const PointFunction& predictor, const PointFunction& f_star, int d, int quad_n,
                   Rng* rng = nullptr);

/// c n^(2/3).
double t_star(Eigen::Index n, double c);

/// (1 / (3 (n - 1))) sum_i (eps_i^2 + eps_{i+1}^2 + eps_i eps_{i+1}).
double li_risk_expansion(const Vector& f_star_values, const Vector& eps, Eigen::Index n);

}  // namespace ntklab
