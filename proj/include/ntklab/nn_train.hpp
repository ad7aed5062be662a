#pragma once

#include "ntklab/kernels.hpp"
#include "ntklab/ntk_flow.hpp"
#include "ntklab/numerics.hpp"

#include <functional>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace ntklab {

/// f(x) = (1/sqrt(m)) sum_{r < 2m} a_r relu(<w_r, x> + b_r) + b_out. b_out starts at 0
/// and is trained with the rest; its unit derivative is the constant 1 in the NNK.
struct TwoLayerNet {
    int m = 0;
    int d = 0;
    Vector a;         ///< 2m
    Matrix w;         ///< 2m x d, row r is w_r
    Vector b_hidden;  ///< 2m
    double b_out = 0.0;

    double scale() const;
};

/// Draws a, then W row by row, then b for r < m from N(0, 1) and mirrors them:
/// a[r + m] = -a[r], w[r + m] = w[r], b[r + m] = b[r].
TwoLayerNet init_net(int m, int d, Rng& rng);

double forward(const TwoLayerNet& net, const Point& x);
Vector forward_batch(const TwoLayerNet& net, const PointSet& x);

/// (1/2n) || y - f(X) ||^2
double training_loss(const TwoLayerNet& net, const Dataset& data);

struct ParamGrad {
    Vector a;
    Matrix w;
    Vector b_hidden;
    double b_out = 0.0;
};

/// Gradient of (1/2n) ||y - f(X)||^2 with relu'(h) = 1 for h >= 0.
ParamGrad param_grad(const TwoLayerNet& net, const Dataset& data);

/// theta - eta * grad.
TwoLayerNet train_step(const TwoLayerNet& net, const Dataset& data, double eta);

/// In-place step; returns the loss at the parameters before the step.
double train_step_inplace(TwoLayerNet& net, const Dataset& data, double eta);

/// 1 + (<x,y> + 1)(1/m) sum a_r^2 1[h_r(x) >= 0] 1[h_r(y) >= 0] + (1/m) sum relu(h_r(x)) relu(h_r(y)).
double nnk_eval(const TwoLayerNet& net, const Point& x, const Point& y);

/// NNK between every row of `p` and every row of `q`.
Matrix nnk_cross(const TwoLayerNet& net, const PointSet& p, const PointSet& q);
SymMatrix nnk_gram(const TwoLayerNet& net, const PointSet& points);

/// Max over grid pairs of |NNK - spec|.
double kernel_deviation(const TwoLayerNet& net, const KernelSpec& spec, const PointSet& grid);
/// Max over grid pairs of |NNK(net) - NNK(other)|.
double kernel_deviation(const TwoLayerNet& net, const TwoLayerNet& other, const PointSet& grid);
using PairKernel = std::function<double(const Point&, const Point&)>;
double kernel_deviation(const TwoLayerNet& net, const PairKernel& kernel, const PointSet& grid);

/// Round to the nearest integer, then clamp to [min y, max y].
Vector predicted_labels(const Vector& f, double y_min, double y_max);
/// Fraction of points whose predicted label differs from y.
double label_error_rate(const Vector& f, const Vector& y);

struct LossTol {
    double tol;
};
struct LabelZero {};
struct FixedTime {
    double t;
};
using StoppingRule = std::variant<LossTol, LabelZero, FixedTime>;

enum class StopReason { MaxSteps, LossTol, LabelZero, FixedTime };
std::string_view to_string(StopReason r);

struct StepRecord {
    long step = 0;
    double time = 0.0;
    double loss = 0.0;
    double label_error = 0.0;
    double eta = 0.0;
};

struct Snapshot {
    double requested_time = 0.0;
    double time = 0.0;  ///< accumulated step size when the copy was taken
    long step = 0;
    TwoLayerNet net;
};

struct TrainTrajectory {
    std::vector<StepRecord> steps;
    double eta = 0.0;  ///< step size in force at the end
    StopReason stop_reason = StopReason::MaxSteps;
    std::vector<Snapshot> snapshots;
    int halvings = 0;

    const StepRecord& last() const { return steps.back(); }
};

struct TrainOptions {
    /// Step size; unset selects min(0.5 n / lambda_max(NNK Gram at init), 0.1).
    std::optional<double> eta;
    /// Halve eta and retry whenever a step raises the loss, at most max_halvings times.
    bool halve_on_increase = true;
    int max_halvings = 20;
    long max_steps = 100000;
    /// A snapshot is taken at the first step whose time reaches each entry.
    std::vector<double> snapshot_times;
    /// Keep every k-th step record (the first and last are always kept).
    long record_every = 1;
    /// Called on the initial state, every `observe_every` steps, and at the end.
    std::function<void(const StepRecord&, const TwoLayerNet&)> observer;
    long observe_every = 0;
};

/// min(0.5 n / lambda_max(NNK Gram), 0.1).
double default_eta(const TwoLayerNet& net, const Dataset& data);

/// Explicit-Euler gradient descent until `rule` fires or max_steps is reached.
/// Throws DivergenceDetected if the loss exceeds 1e3 times its initial value.
TrainTrajectory train_until(TwoLayerNet& net, const Dataset& data, const StoppingRule& rule,
                            const TrainOptions& options = {});

/// sup over `grid` of |f_theta(t) - f_t^NTK| for each requested time, using the
/// snapshot taken for that time and the flow at the snapshot's actual time.
/// Throws MissingSnapshot when no snapshot was requested at a time.
std::vector<double> function_deviation(const TrainTrajectory& trajectory, const NtkFlowModel& flow,
                                       const PointSet& grid, const std::vector<double>& times);

}  // namespace ntklab
