#include "ntklab/experiments/generators.hpp"

#include "ntklab/error.hpp"

#include <array>
#include <cmath>

namespace ntklab {

PointSet gen_equispaced(long n, double lo, double hi) {
    if (n < 2 || !(lo < hi)) throw Error(ErrorCode::DomainError, "gen_equispaced needs n >= 2 and lo < hi");
    PointSet x(n, 1);
    for (long i = 0; i < n; ++i) x(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    x(n - 1, 0) = hi;
    return x;
}

namespace {

constexpr std::array<double, 5> kMixCenters{0.1, 0.3, 0.5, 0.7, 0.9};
constexpr std::array<double, 5> kMixWeights{0.2, -0.3, 0.25, -0.15, 0.1};

double kernel_mix(const Point& x) {
    double sum = 0.0;
    for (std::size_t k = 0; k < kMixCenters.size(); ++k) sum += kMixWeights[k] * ntk1_eval(x[0], kMixCenters[k]);
    return sum;
}

double sin_mix(const Point& x) {
    return std::sin(x.sum() / std::sqrt(static_cast<double>(x.size())));
}

}  // namespace

PointFunction f_star(std::string_view id) {
    if (id == "kernel_mix") return kernel_mix;
    if (id == "sin_mix") return sin_mix;
    if (id == "zero") return [](const Point&) { return 0.0; };
    throw Error(ErrorCode::UnknownTruth, "unknown truth '" + std::string(id) + "'");
}

Vector f_star_values(std::string_view id, const PointSet& x) {
    const PointFunction f = f_star(id);
    Vector out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = f(x.row(i).transpose());
    return out;
}

Dataset gen_regression(const PointSet& x, std::string_view f_star_id, double sigma, Rng& rng) {
    Dataset d;
    d.x = x;
    d.y = f_star_values(f_star_id, x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double z = rng.normal();
        d.y[i] += sigma * z;
    }
    d.sigma = sigma;
    d.f_star_id = std::string(f_star_id);
    return d;
}

int parity3_label(const Point& x) {
    if (x.size() != 3) throw Error(ErrorCode::DimensionMismatch, "parity3 needs 3-d points");
    return static_cast<int>(std::floor(2.0 * x[0]) + 2.0 * std::floor(2.0 * x[1]) + 4.0 * std::floor(2.0 * x[2]));
}

Dataset gen_parity3(long n, const Rng& rng, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::DomainError, "corruption probability must lie in [0, 1]");
    if (n < 1) throw Error(ErrorCode::TooSmall, "gen_parity3 needs n >= 1");
    Rng points = rng.split(0);
    Rng noise = rng.split(1);
    Dataset d;
    d.x.resize(n, 3);
    d.y.resize(n);
    for (long i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) d.x(i, j) = points.uniform();
        d.y[i] = parity3_label(d.x.row(i).transpose());
        // Both draws happen for every point so the corruption stream stays aligned across p.
        const double coin = noise.uniform();
        const double replacement = static_cast<double>(noise.below(8));
        if (coin < p) d.y[i] = replacement;
    }
    d.f_star_id = "parity3";
    return d;
}

}  // namespace ntklab
