#include "ntklab/ntk_flow.hpp"

#include "ntklab/error.hpp"

#include <algorithm>
#include <cmath>

namespace ntklab {

void validate(const Dataset& data) {
    if (data.n() < 1) throw Error(ErrorCode::TooSmall, "dataset is empty");
    if (data.y.size() != data.n()) {
        throw Error(ErrorCode::LengthMismatch, "dataset has " + std::to_string(data.n()) +
                                                   " points but " + std::to_string(data.y.size()) +
                                                   " responses");
    }
}

TimeSpec TimeSpec::finite(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw Error(ErrorCode::DomainError, "flow time must be finite and nonnegative");
    }
    return TimeSpec(t, false);
}

NtkFlowModel::NtkFlowModel(std::shared_ptr<const FlowBasis> basis, Dataset data)
    : basis_(std::move(basis)), data_(std::move(data)) {
    validate(data_);
    if (data_.n() != basis_->points.rows()) {
        throw Error(ErrorCode::LengthMismatch, "dataset size differs from the basis order");
    }
    projected_ = basis_->eigen.vectors.transpose() * data_.y;
}

NtkFlowModel NtkFlowModel::with_labels(Vector y) const {
    Dataset d = data_;
    d.y = std::move(y);
    return NtkFlowModel(basis_, std::move(d));
}

NtkFlowModel fit(const KernelSpec& spec, const Dataset& data) {
    validate(data);
    const GramMatrix g = gram(spec, data.x);
    auto basis = std::make_shared<FlowBasis>();
    basis->spec = spec;
    basis->points = data.x;
    basis->eigen = sym_eigen(g.matrix);
    const Vector& values = basis->eigen.values;
    const double top = values[0];
    const double bottom = values[values.size() - 1];
    if (bottom < -1e-6 * std::abs(top)) {
        throw Error(ErrorCode::NotPositiveDefinite,
                    "Gram matrix has eigenvalue " + std::to_string(bottom));
    }
    basis->clipped = values.cwiseMax(0.0);
    return NtkFlowModel(std::move(basis), data);
}

double flow_filter(double lambda, const TimeSpec& time, Eigen::Index n) {
    if (time.is_infinite()) return lambda > 0.0 ? 1.0 / lambda : 0.0;
    const double rate = time.value() / static_cast<double>(n);
    if (lambda <= 0.0) return rate;
    return -std::expm1(-lambda * rate) / lambda;
}

Vector coefficients(const NtkFlowModel& model, const TimeSpec& time) {
    const FlowBasis& b = model.basis();
    Vector filtered(model.n());
    for (Eigen::Index i = 0; i < model.n(); ++i) {
        filtered[i] = flow_filter(b.clipped[i], time, model.n()) * model.projected()[i];
    }
    return b.eigen.vectors * filtered;
}

Vector predict(const NtkFlowModel& model, const TimeSpec& time, const PointSet& query) {
    if (query.cols() != model.basis().points.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "query dimension differs from the design");
    }
    return cross_gram(model.spec(), query, model.basis().points) * coefficients(model, time);
}

Vector predict_at_nodes(const NtkFlowModel& model, const TimeSpec& time) {
    const FlowBasis& b = model.basis();
    Vector filtered(model.n());
    for (Eigen::Index i = 0; i < model.n(); ++i) {
        // lambda * phi_t(lambda), kept exact at lambda = 0.
        const double lambda = b.clipped[i];
        double gain;
        if (time.is_infinite()) {
            gain = lambda > 0.0 ? 1.0 : 0.0;
        } else {
            gain = -std::expm1(-lambda * time.value() / static_cast<double>(model.n()));
        }
        filtered[i] = gain * model.projected()[i];
    }
    return b.eigen.vectors * filtered;
}

double residual_norm(const NtkFlowModel& model, double t) {
    if (!(t >= 0.0)) throw Error(ErrorCode::DomainError, "flow time must be nonnegative");
    const Vector& lambda = model.basis().clipped;
    const double rate = t / static_cast<double>(model.n());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < model.n(); ++i) {
        const double r = std::exp(-lambda[i] * rate) * model.projected()[i];
        sum += r * r;
    }
    return std::sqrt(sum);
}

namespace {

void require_sorted_1d(const Dataset& data) {
    validate(data);
    if (data.dim() != 1) throw Error(ErrorCode::DimensionMismatch, "linear interpolation needs d = 1");
    for (Eigen::Index i = 0; i + 1 < data.n(); ++i) {
        if (!(data.x(i + 1, 0) > data.x(i, 0))) {
            throw Error(ErrorCode::NotSorted, "nodes must be strictly increasing");
        }
    }
}

double interp_sorted(const Dataset& data, double x) {
    const auto col = data.x.col(0);
    const Eigen::Index n = data.n();
    if (x < col[0] || x > col[n - 1]) {
        throw Error(ErrorCode::OutOfRange, "x = " + std::to_string(x) + " lies outside the nodes");
    }
    if (n == 1) return data.y[0];
    const double* begin = col.data();
    Eigen::Index i = std::upper_bound(begin, begin + n, x) - begin - 1;
    i = std::clamp<Eigen::Index>(i, 0, n - 2);
    const double x0 = col[i], x1 = col[i + 1];
    if (x == x0) return data.y[i];
    if (x == x1) return data.y[i + 1];
    return data.y[i] + (data.y[i + 1] - data.y[i]) / (x1 - x0) * (x - x0);
}

}  // namespace

double linear_interp(const Dataset& data, double x) {
    require_sorted_1d(data);
    return interp_sorted(data, x);
}

double sup_gap(const NtkFlowModel& model, int grid_n) {
    const Dataset& data = model.dataset();
    require_sorted_1d(data);
    if (grid_n < 4 * data.n() || grid_n < 2) {
        throw Error(ErrorCode::TooSmall, "sup_gap needs grid_n >= 4n");
    }
    const double lo = data.x(0, 0);
    const double hi = data.x(data.n() - 1, 0);
    Vector grid(grid_n + data.n());
    for (int i = 0; i < grid_n; ++i) grid[i] = lo + (hi - lo) * i / (grid_n - 1);
    grid.tail(data.n()) = data.x.col(0);
    const Vector f = predict(model, TimeSpec::infinity(), as_points(grid));
    double worst = 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        worst = std::max(worst, std::abs(f[i] - interp_sorted(data, grid[i])));
    }
    return worst;
}

QuadratureRule quadrature_rule(int d, int quad_n, Rng* rng) {
    if (quad_n < 2) throw Error(ErrorCode::TooSmall, "quad_n must be >= 2");
    if (d < 1) throw Error(ErrorCode::DimensionMismatch, "dimension must be >= 1");
    QuadratureRule rule;
    if (d == 1) {
        rule.points.resize(quad_n, 1);
        rule.weights = Vector::Constant(quad_n, 1.0 / (quad_n - 1));
        rule.weights[0] *= 0.5;
        rule.weights[quad_n - 1] *= 0.5;
        for (int i = 0; i < quad_n; ++i) rule.points(i, 0) = static_cast<double>(i) / (quad_n - 1);
        return rule;
    }
    if (rng == nullptr) throw Error(ErrorCode::MissingRng, "Monte Carlo risk for d > 1 needs an rng");
    rule.points.resize(quad_n, d);
    for (int i = 0; i < quad_n; ++i) {
        for (int j = 0; j < d; ++j) rule.points(i, j) = rng->uniform();
    }
    rule.weights = Vector::Constant(quad_n, 1.0 / quad_n);
    return rule;
}

double excess_risk(const Vector& pred, const Vector& truth, const QuadratureRule& rule) {
    if (pred.size() != rule.weights.size() || truth.size() != rule.weights.size()) {
        throw Error(ErrorCode::LengthMismatch, "values do not match the quadrature rule");
    }
    return rule.weights.dot((pred - truth).array().square().matrix());
}

double excess_risk(const PointFunction& predictor, const PointFunction& f_star, int d, int quad_n,
                   Rng* rng) {
    const QuadratureRule rule = quadrature_rule(d, quad_n, rng);
    Vector pred(rule.points.rows()), truth(rule.points.rows());
    for (Eigen::Index i = 0; i < rule.points.rows(); ++i) {
        const Point p = rule.points.row(i).transpose();
        pred[i] = predictor(p);
        truth[i] = f_star(p);
    }
    return excess_risk(pred, truth, rule);
}

double t_star(Eigen::Index n, double c) {
    if (n < 1 || !(c > 0.0)) throw Error(ErrorCode::DomainError, "t_star needs n >= 1 and c > 0");
    return c * std::cbrt(static_cast<double>(n) * static_cast<double>(n));
}

double li_risk_expansion(const Vector& f_star_values, const Vector& eps, Eigen::Index n) {
    if (f_star_values.size() != n || eps.size() != n) {
        throw Error(ErrorCode::LengthMismatch, "li_risk_expansion inputs must have length n");
    }
    if (n < 2) throw Error(ErrorCode::TooSmall, "li_risk_expansion needs n >= 2");
    double sum = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        sum += eps[i] * eps[i] + eps[i + 1] * eps[i + 1] + eps[i] * eps[i + 1];
    }
    return sum / (3.0 * static_cast<double>(n - 1));
}

}  // namespace ntklab
