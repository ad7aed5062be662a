#include "ntklab/spectral.hpp"

#include "ntklab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ntklab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRootWidth = 1e-13;
constexpr double kSandwichSlack = -1e-10;

double bisect(double alpha, double lo, double hi) {
    double f_lo = h_omega(alpha, lo);
    const double f_hi = h_omega(alpha, hi);
    if (!(f_lo * f_hi < 0.0)) {
        throw Error(ErrorCode::BracketFailure,
                    "h has no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) +
                        "] for alpha " + std::to_string(alpha));
    }
    while (hi - lo > kRootWidth) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f_mid = h_omega(alpha, mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double min_eigenvalue(const GramMatrix& g) {
    const Vector values = sym_eigenvalues(g.matrix);
    return values[values.size() - 1];
}

SymMatrix g_alpha_inverse(double alpha, const Vector& sorted_x) {
    const Eigen::Index n = sorted_x.size();
    if (n < 3) throw Error(ErrorCode::TooSmall, "g_alpha_inverse needs n >= 3");
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        if (!(sorted_x[k + 1] > sorted_x[k])) {
            throw Error(ErrorCode::NotSorted,
                        "x is not strictly increasing at index " + std::to_string(k + 1));
        }
    }
    const double wrap_gap = 2.0 * alpha * kPi - sorted_x[n - 1] + sorted_x[0];
    if (!(wrap_gap > 0.0)) {
        throw Error(ErrorCode::DomainError, "span of x must be below 2 alpha pi");
    }
    const double wrap = 1.0 / wrap_gap;
    Matrix m = Matrix::Zero(n, n);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        const double c = 1.0 / (sorted_x[k + 1] - sorted_x[k]);
        m(k, k) += c;
        m(k + 1, k + 1) += c;
        m(k + 1, k) -= c;
    }
    m(0, 0) += wrap;
    m(n - 1, n - 1) += wrap;
    m(n - 1, 0) += wrap;
    m *= kPi / 2.0;
    return SymMatrix::from_lower(std::move(m));
}

double h_omega(double alpha, double omega) {
    return 2.0 + 2.0 * std::cos(omega) + omega * std::sin(omega) * (1.0 - 2.0 * alpha * kPi);
}

MercerSpectrum mercer_spectrum(double alpha, int j_max) {
    if (j_max < 1) throw Error(ErrorCode::TooSmall, "j_max must be >= 1");
    MercerSpectrum out;
    out.alpha = alpha;
    out.bracket_guaranteed = alpha == 1.0 || alpha == 9.0 / 7.0;
    out.roots.reserve(static_cast<std::size_t>(j_max));
    out.eigenvalues.reserve(static_cast<std::size_t>(j_max));
    for (int j = 1; j <= j_max; ++j) {
        double omega;
        if (j == 1) {
            omega = bisect(alpha, kPi / 6.0, kPi / 2.0);
        } else if (j % 2 == 0) {
            omega = (j - 1) * kPi;
        } else {
            omega = bisect(alpha, (j - 1) * kPi, (j - 0.5) * kPi);
        }
        out.roots.push_back(omega);
        out.eigenvalues.push_back(2.0 / (kPi * omega * omega));
    }
    return out;
}

std::vector<double> empirical_mercer(const KernelSpec& spec, int grid_n, int j_max) {
    if (j_max < 1 || grid_n < j_max) {
        throw Error(ErrorCode::TooSmall, "empirical_mercer needs grid_n >= j_max >= 1");
    }
    Vector grid(grid_n);
    for (int i = 0; i < grid_n; ++i) {
        grid[i] = grid_n == 1 ? 0.0 : static_cast<double>(i) / (grid_n - 1);
    }
    const GramMatrix g = gram(spec, grid);
    const Vector values = sym_eigenvalues(g.matrix) / static_cast<double>(grid_n);
    return std::vector<double>(values.data(), values.data() + j_max);
}

SandwichResult sandwich_check(const Vector& x) {
    const PointSet pts = as_points(x);
    const Matrix k = gram(Ntk1{}, pts).matrix.entries();
    const Matrix g1 = gram(GAlpha{1.0}, pts).matrix.entries();
    const Matrix g97 = gram(GAlpha{9.0 / 7.0}, pts).matrix.entries();
    SandwichResult r;
    const Vector lo = sym_eigenvalues(SymMatrix(k - g1));
    const Vector hi = sym_eigenvalues(SymMatrix(7.0 * g97 - k));
    r.lo_min = lo[lo.size() - 1];
    r.hi_min = hi[hi.size() - 1];
    r.lo_ok = r.lo_min >= kSandwichSlack;
    r.hi_ok = r.hi_min >= kSandwichSlack;
    return r;
}

double decay_report(const std::vector<double>& lambdas, int j_lo, int j_hi, int index_shift) {
    if (j_lo < 1 || j_hi > static_cast<int>(lambdas.size()) || j_hi <= j_lo ||
        j_lo - index_shift < 1) {
        throw Error(ErrorCode::OutOfRange, "decay_report index range [" + std::to_string(j_lo) +
                                               ", " + std::to_string(j_hi) + "] is invalid");
    }
    std::vector<double> xs, ys;
    for (int j = j_lo; j <= j_hi; ++j) {
        xs.push_back(static_cast<double>(j - index_shift));
        ys.push_back(lambdas[static_cast<std::size_t>(j - 1)]);
    }
    return loglog_slope(xs, ys);
}

SpectrumReport spectrum_report(const Vector& x) {
    const GramMatrix g = gram(Ntk1{}, x);
    SpectrumReport r;
    r.n = x.size();
    r.d_min = min_distance(g.points);
    r.all_eigenvalues = sym_eigenvalues(g.matrix);
    r.lambda_min = r.all_eigenvalues[r.n - 1];
    const SandwichResult s = sandwich_check(x);
    r.sandwich_ok = s.lo_ok && s.hi_ok;
    r.decay_slope = std::numeric_limits<double>::quiet_NaN();
    if (r.n >= 3) {
        const Vector scaled = r.all_eigenvalues / static_cast<double>(r.n);
        const std::vector<double> lambdas(scaled.data(), scaled.data() + scaled.size());
        const int j_hi = static_cast<int>(std::min<Eigen::Index>(r.n, 40));
        if (std::all_of(lambdas.begin(), lambdas.begin() + j_hi, [](double v) { return v > 0.0; })) {
            r.decay_slope = decay_report(lambdas, 2, j_hi, 1);
        }
    }
    return r;
}

}  // namespace ntklab
