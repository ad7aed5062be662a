#include "ntklab/nn_train.hpp"

#include "ntklab/error.hpp"

#include <algorithm>
#include <cmath>

namespace ntklab {

double TwoLayerNet::scale() const { return 1.0 / std::sqrt(static_cast<double>(m)); }

TwoLayerNet init_net(int m, int d, Rng& rng) {
    if (m < 1 || d < 1) throw Error(ErrorCode::TooSmall, "init_net needs m >= 1 and d >= 1");
    TwoLayerNet net;
    net.m = m;
    net.d = d;
    net.a.resize(2 * m);
    net.w.resize(2 * m, d);
    net.b_hidden.resize(2 * m);
    for (int r = 0; r < m; ++r) net.a[r] = rng.normal();
    for (int r = 0; r < m; ++r) {
        for (int j = 0; j < d; ++j) net.w(r, j) = rng.normal();
    }
    for (int r = 0; r < m; ++r) net.b_hidden[r] = rng.normal();
    for (int r = 0; r < m; ++r) {
        net.a[r + m] = -net.a[r];
        net.w.row(r + m) = net.w.row(r);
        net.b_hidden[r + m] = net.b_hidden[r];
    }
    return net;
}

namespace {

void require_dim(const TwoLayerNet& net, Eigen::Index d) {
    if (d != net.d) {
        throw Error(ErrorCode::DimensionMismatch, "network expects dimension " + std::to_string(net.d) +
                                                      ", got " + std::to_string(d));
    }
}

// Pre-activations h_r(x_i) for every sample, one neuron at a time; `h` has n entries.
inline void preactivation(const TwoLayerNet& net, const PointSet& x, Eigen::Index r, double* h) {
    const Eigen::Index n = x.rows();
    const double b = net.b_hidden[r];
    for (Eigen::Index i = 0; i < n; ++i) h[i] = b;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double wrj = net.w(r, j);
        const double* col = x.col(j).data();
        for (Eigen::Index i = 0; i < n; ++i) h[i] += wrj * col[i];
    }
}

constexpr Eigen::Index kNeuronBlock = 512;

using ArrayRef = Eigen::Ref<Eigen::ArrayXd>;

// h_r(x_i) for neurons [r0, r0 + h.size()).
inline void neuron_preactivation(const TwoLayerNet& net, const PointSet& x, Eigen::Index i,
                                 Eigen::Index r0, ArrayRef h) {
    const Eigen::Index len = h.size();
    h = net.b_hidden.segment(r0, len).array();
    for (Eigen::Index j = 0; j < x.cols(); ++j) h += net.w.col(j).segment(r0, len).array() * x(i, j);
}

// f(X), then the gradient of (1/2n)||f - y||^2; returns the loss at the
// current parameters. Neurons are swept in blocks whose buffers stay in L1,
// with the samples inside. Shared by param_grad, the training step and train_until.
double loss_and_grad(const TwoLayerNet& net, const Dataset& data, ParamGrad& g, Vector& f) {
    const Eigen::Index n = data.n();
    const Eigen::Index width = net.a.size();
    Eigen::ArrayXd h_buf(std::min(width, kNeuronBlock));
    f.setZero(n);
    for (Eigen::Index r0 = 0; r0 < width; r0 += kNeuronBlock) {
        const Eigen::Index len = std::min(kNeuronBlock, width - r0);
        auto h = h_buf.head(len);
        const auto a = net.a.segment(r0, len).array();
        for (Eigen::Index i = 0; i < n; ++i) {
            neuron_preactivation(net, data.x, i, r0, h);
            f[i] += (a * h.max(0.0)).sum();
        }
    }
    f *= net.scale();
    f.array() += net.b_out;
    const Vector u = f - data.y;
    const double loss = u.squaredNorm() / (2.0 * static_cast<double>(n));

    // Per neuron: sum_i u_i relu(h), sum_i u_i 1[h >= 0] and sum_i u_i 1[h >= 0] x_ij,
    // scaled afterwards by 1 / (n sqrt(m)) and, for b and w, by a_r.
    g.a.setZero(width);
    g.b_hidden.setZero(width);
    g.w.setZero(width, net.d);
    Eigen::ArrayXd mask_buf(h_buf.size());
    for (Eigen::Index r0 = 0; r0 < width; r0 += kNeuronBlock) {
        const Eigen::Index len = std::min(kNeuronBlock, width - r0);
        auto h = h_buf.head(len);
        auto mask = mask_buf.head(len);
        auto ga = g.a.segment(r0, len).array();
        auto gb = g.b_hidden.segment(r0, len).array();
        for (Eigen::Index i = 0; i < n; ++i) {
            neuron_preactivation(net, data.x, i, r0, h);
            const double ui = u[i];
            mask = (h >= 0.0).cast<double>();
            ga += h.max(0.0) * ui;
            gb += mask * ui;
            for (Eigen::Index j = 0; j < net.d; ++j) {
                g.w.col(j).segment(r0, len).array() += mask * (ui * data.x(i, j));
            }
        }
    }
    const double c = net.scale() / static_cast<double>(n);
    g.a *= c;
    g.b_hidden.array() *= c * net.a.array();
    g.w.array().colwise() *= c * net.a.array();
    g.b_out = u.sum() / static_cast<double>(n);
    return loss;
}

void apply(TwoLayerNet& net, const ParamGrad& g, double eta) {
    net.a -= eta * g.a;
    net.w -= eta * g.w;
    net.b_hidden -= eta * g.b_hidden;
    net.b_out -= eta * g.b_out;
}

// Activation matrices for a point set: relu values and indicators, rows are points.
struct Activations {
    Matrix relu;
    Matrix active;  // 1.0 where h >= 0
};

Activations activations(const TwoLayerNet& net, const PointSet& p) {
    Matrix h = p * net.w.transpose();
    h.rowwise() += net.b_hidden.transpose();
    Activations out;
    out.relu = h.cwiseMax(0.0);
    out.active = (h.array() >= 0.0).cast<double>().matrix();
    return out;
}

}  // namespace

double forward(const TwoLayerNet& net, const Point& x) {
    require_dim(net, x.size());
    double sum = 0.0;
    for (Eigen::Index r = 0; r < net.a.size(); ++r) {
        const double h = net.w.row(r).dot(x) + net.b_hidden[r];
        if (h > 0.0) sum += net.a[r] * h;
    }
    return net.scale() * sum + net.b_out;
}

Vector forward_batch(const TwoLayerNet& net, const PointSet& x) {
    require_dim(net, x.cols());
    const Eigen::Index n = x.rows();
    Vector f = Vector::Zero(n);
    Vector h(n);
    for (Eigen::Index r = 0; r < net.a.size(); ++r) {
        preactivation(net, x, r, h.data());
        const double ar = net.a[r];
        for (Eigen::Index i = 0; i < n; ++i) f[i] += ar * std::max(h[i], 0.0);
    }
    f *= net.scale();
    f.array() += net.b_out;
    return f;
}

double training_loss(const TwoLayerNet& net, const Dataset& data) {
    validate(data);
    return (forward_batch(net, data.x) - data.y).squaredNorm() / (2.0 * static_cast<double>(data.n()));
}

ParamGrad param_grad(const TwoLayerNet& net, const Dataset& data) {
    validate(data);
    require_dim(net, data.dim());
    ParamGrad g;
    Vector f;
    loss_and_grad(net, data, g, f);
    return g;
}

TwoLayerNet train_step(const TwoLayerNet& net, const Dataset& data, double eta) {
    TwoLayerNet out = net;
    train_step_inplace(out, data, eta);
    return out;
}

double train_step_inplace(TwoLayerNet& net, const Dataset& data, double eta) {
    if (!(eta > 0.0)) throw Error(ErrorCode::DomainError, "eta must be positive");
    validate(data);
    require_dim(net, data.dim());
    ParamGrad g;
    Vector f;
    const double loss = loss_and_grad(net, data, g, f);
    apply(net, g, eta);
    return loss;
}

double nnk_eval(const TwoLayerNet& net, const Point& x, const Point& y) {
    require_dim(net, x.size());
    require_dim(net, y.size());
    const double lifted = x.dot(y) + 1.0;
    double h_term = 0.0, g_term = 0.0;
    for (Eigen::Index r = 0; r < net.a.size(); ++r) {
        const double hx = net.w.row(r).dot(x) + net.b_hidden[r];
        const double hy = net.w.row(r).dot(y) + net.b_hidden[r];
        if (hx >= 0.0 && hy >= 0.0) {
            h_term += net.a[r] * net.a[r];
            g_term += hx * hy;
        }
    }
    const double inv_m = 1.0 / static_cast<double>(net.m);
    return 1.0 + lifted * inv_m * h_term + inv_m * g_term;
}

Matrix nnk_cross(const TwoLayerNet& net, const PointSet& p, const PointSet& q) {
    require_dim(net, p.cols());
    require_dim(net, q.cols());
    const Activations ap = activations(net, p);
    const Activations aq = activations(net, q);
    const double inv_m = 1.0 / static_cast<double>(net.m);
    const Vector a2 = net.a.array().square();
    Matrix lifted = p * q.transpose();
    lifted.array() += 1.0;
    Matrix out = (ap.active * a2.asDiagonal() * aq.active.transpose()).cwiseProduct(lifted);
    out.noalias() += ap.relu * aq.relu.transpose();
    out *= inv_m;
    out.array() += 1.0;
    return out;
}

SymMatrix nnk_gram(const TwoLayerNet& net, const PointSet& points) {
    Matrix k = nnk_cross(net, points, points);
    return SymMatrix::from_lower(std::move(k));
}

double kernel_deviation(const TwoLayerNet& net, const KernelSpec& spec, const PointSet& grid) {
    if (grid.rows() < 1) throw Error(ErrorCode::TooSmall, "kernel_deviation needs a nonempty grid");
    const Matrix nnk = nnk_cross(net, grid, grid);
    const Matrix ref = cross_gram(spec, grid, grid);
    return (nnk - ref).cwiseAbs().maxCoeff();
}

double kernel_deviation(const TwoLayerNet& net, const TwoLayerNet& other, const PointSet& grid) {
    if (grid.rows() < 1) throw Error(ErrorCode::TooSmall, "kernel_deviation needs a nonempty grid");
    return (nnk_cross(net, grid, grid) - nnk_cross(other, grid, grid)).cwiseAbs().maxCoeff();
}

double kernel_deviation(const TwoLayerNet& net, const PairKernel& kernel, const PointSet& grid) {
    if (grid.rows() < 1) throw Error(ErrorCode::TooSmall, "kernel_deviation needs a nonempty grid");
    const Matrix nnk = nnk_cross(net, grid, grid);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        for (Eigen::Index j = 0; j < grid.rows(); ++j) {
            const double k = kernel(grid.row(i).transpose(), grid.row(j).transpose());
            worst = std::max(worst, std::abs(nnk(i, j) - k));
        }
    }
    return worst;
}

Vector predicted_labels(const Vector& f, double y_min, double y_max) {
    Vector out(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) out[i] = std::clamp(std::round(f[i]), y_min, y_max);
    return out;
}

double label_error_rate(const Vector& f, const Vector& y) {
    if (f.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "label vectors differ in length");
    if (y.size() == 0) return 0.0;
    const Vector labels = predicted_labels(f, y.minCoeff(), y.maxCoeff());
    Eigen::Index wrong = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) wrong += labels[i] != y[i];
    return static_cast<double>(wrong) / static_cast<double>(y.size());
}

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::MaxSteps: return "MaxSteps";
        case StopReason::LossTol: return "LossTol";
        case StopReason::LabelZero: return "LabelZero";
        case StopReason::FixedTime: return "FixedTime";
    }
    return "Unknown";
}

double default_eta(const TwoLayerNet& net, const Dataset& data) {
    validate(data);
    const Vector values = sym_eigenvalues(nnk_gram(net, data.x));
    const double top = values[0];
    const double bound = 0.5 * static_cast<double>(data.n()) / top;
    return std::min(bound, 0.1);
}

namespace {

struct StepState {
    double loss;
    double label_error;
};

std::optional<StopReason> should_stop(const StoppingRule& rule, const StepState& s, double time) {
    if (const auto* r = std::get_if<LossTol>(&rule)) {
        if (s.loss <= r->tol) return StopReason::LossTol;
    } else if (std::holds_alternative<LabelZero>(rule)) {
        if (s.label_error == 0.0) return StopReason::LabelZero;
    } else if (const auto* r = std::get_if<FixedTime>(&rule)) {
        if (time >= r->t) return StopReason::FixedTime;
    }
    return std::nullopt;
}

}  // namespace

TrainTrajectory train_until(TwoLayerNet& net, const Dataset& data, const StoppingRule& rule,
                            const TrainOptions& options) {
    validate(data);
    require_dim(net, data.dim());
    if (options.max_steps < 1) throw Error(ErrorCode::TooSmall, "max_steps must be >= 1");
    double eta = options.eta ? *options.eta : default_eta(net, data);
    if (!(eta > 0.0)) throw Error(ErrorCode::DomainError, "eta must be positive");

    TrainTrajectory traj;
    std::vector<double> pending = options.snapshot_times;
    std::sort(pending.begin(), pending.end());
    std::size_t next_snapshot = 0;

    ParamGrad g;
    Vector f;
    double loss = loss_and_grad(net, data, g, f);
    const double initial_loss = loss;
    StepRecord rec{0, 0.0, loss, label_error_rate(f, data.y), eta};
    const long record_every = std::max<long>(1, options.record_every);

    auto take_snapshots = [&](const StepRecord& r) {
        while (next_snapshot < pending.size() && r.time >= pending[next_snapshot]) {
            traj.snapshots.push_back(Snapshot{pending[next_snapshot], r.time, r.step, net});
            ++next_snapshot;
        }
    };
    auto observe = [&](const StepRecord& r, bool force) {
        if (options.observer && (force || (options.observe_every > 0 && r.step % options.observe_every == 0))) {
            options.observer(r, net);
        }
    };

    traj.steps.push_back(rec);
    take_snapshots(rec);
    observe(rec, true);

    std::optional<StopReason> stop = should_stop(rule, {rec.loss, rec.label_error}, rec.time);
    TwoLayerNet backup;
    ParamGrad backup_grad;
    while (!stop) {
        if (rec.step >= options.max_steps) {
            stop = StopReason::MaxSteps;
            break;
        }
        if (options.halve_on_increase) {
            backup = net;
            backup_grad = g;
        }
        apply(net, g, eta);
        double next_loss = loss_and_grad(net, data, g, f);
        while (options.halve_on_increase && next_loss > loss && traj.halvings < options.max_halvings) {
            net = backup;
            eta *= 0.5;
            ++traj.halvings;
            apply(net, backup_grad, eta);
            next_loss = loss_and_grad(net, data, g, f);
        }
        if (!std::isfinite(next_loss) || (initial_loss > 0.0 && next_loss > 1e3 * initial_loss)) {
            throw Error(ErrorCode::DivergenceDetected,
                        "loss " + std::to_string(next_loss) + " at step " + std::to_string(rec.step + 1));
        }
        loss = next_loss;
        rec = StepRecord{rec.step + 1, rec.time + eta, loss, label_error_rate(f, data.y), eta};
        take_snapshots(rec);
        stop = should_stop(rule, {rec.loss, rec.label_error}, rec.time);
        if (stop || rec.step % record_every == 0 || rec.step >= options.max_steps) {
            traj.steps.push_back(rec);
        }
        observe(rec, stop.has_value() || rec.step >= options.max_steps);
    }
    if (traj.steps.back().step != rec.step) traj.steps.push_back(rec);
    traj.stop_reason = *stop;
    traj.eta = eta;
    return traj;
}

std::vector<double> function_deviation(const TrainTrajectory& trajectory, const NtkFlowModel& flow,
                                       const PointSet& grid, const std::vector<double>& times) {
    std::vector<double> out;
    out.reserve(times.size());
    for (const double t : times) {
        const auto it = std::find_if(trajectory.snapshots.begin(), trajectory.snapshots.end(),
                                     [t](const Snapshot& s) { return s.requested_time == t; });
        if (it == trajectory.snapshots.end()) {
            throw Error(ErrorCode::MissingSnapshot, "no snapshot for time " + std::to_string(t));
        }
        const Vector net_f = forward_batch(it->net, grid);
        const Vector flow_f = predict(flow, TimeSpec::finite(it->time), grid);
        out.push_back((net_f - flow_f).cwiseAbs().maxCoeff());
    }
    return out;
}

}  // namespace ntklab
