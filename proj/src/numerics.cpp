#include "ntklab/numerics.hpp"

#include "ntklab/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ntklab {

SymMatrix::SymMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() < 1 || entries_.rows() != entries_.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "SymMatrix needs a nonempty square matrix");
    }
    const Eigen::Index n = entries_.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            if (entries_(i, j) != entries_(j, i) &&
                !(std::isnan(entries_(i, j)) && std::isnan(entries_(j, i)))) {
                throw Error(ErrorCode::DomainError,
                            "matrix is not symmetric at (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
            }
        }
    }
}

SymMatrix::SymMatrix(Matrix entries, Trusted) : entries_(std::move(entries)) {}

SymMatrix SymMatrix::from_lower(Matrix entries) {
    if (entries.rows() < 1 || entries.rows() != entries.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "SymMatrix needs a nonempty square matrix");
    }
    entries.template triangularView<Eigen::StrictlyUpper>() = entries.transpose();
    return SymMatrix(std::move(entries), Trusted{});
}

namespace {

void require_finite(const SymMatrix& a) {
    if (!a.entries().allFinite()) {
        throw Error(ErrorCode::NonFinite, "matrix has NaN or infinite entries");
    }
}

}  // namespace

EigenPair sym_eigen(const SymMatrix& a) {
    require_finite(a);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a.entries(), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::NonFinite, "symmetric eigensolver did not converge");
    }
    // Eigen sorts ascending.
    EigenPair out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

Vector sym_eigenvalues(const SymMatrix& a) {
    require_finite(a);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a.entries(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::NonFinite, "symmetric eigensolver did not converge");
    }
    return solver.eigenvalues().reverse();
}

Vector spd_solve(const SymMatrix& a, const Vector& b) {
    require_finite(a);
    if (b.size() != a.order()) {
        throw Error(ErrorCode::DimensionMismatch, "right-hand side length differs from order");
    }
    const double scale = a.entries().trace() / static_cast<double>(a.order());
    Eigen::LLT<Matrix> llt(a.entries());
    if (llt.info() == Eigen::Success) {
        Vector x = llt.solve(b);
        if (x.allFinite()) return x;
    }
    for (double tau = 1e-12; tau <= 1e-6 * (1.0 + 1e-9); tau *= 10.0) {
        Matrix shifted = a.entries();
        shifted.diagonal().array() += tau * scale;
        llt.compute(shifted);
        if (llt.info() == Eigen::Success) {
            Vector x = llt.solve(b);
            if (x.allFinite()) return x;
        }
    }
    throw Error(ErrorCode::NotPositiveDefinite,
                "Cholesky factorization failed after jitter escalation to 1e-6");
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {}

std::uint64_t Rng::next_u64() {
    ++counter_;
    return splitmix64_mix(seed_ + counter_ * kGolden);
}

double Rng::uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
}

double Rng::normal() {
    if (spare_normal_) {
        const double z = *spare_normal_;
        spare_normal_.reset();
        return z;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(angle);
    return r * std::cos(angle);
}

Rng Rng::split(std::uint64_t stream) const {
    return Rng(splitmix64_mix(seed_ ^ splitmix64_mix(stream + 1)));
}

Vector normal(Rng& rng, Eigen::Index count) {
    Vector out(count);
    for (Eigen::Index i = 0; i < count; ++i) out[i] = rng.normal();
    return out;
}

double loglog_slope(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw Error(ErrorCode::LengthMismatch, "loglog_slope needs two equal-length series of length >= 2");
    }
    const std::size_t n = xs.size();
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
            throw Error(ErrorCode::DomainError, "loglog_slope requires strictly positive values");
        }
        mean_x += std::log(xs[i]);
        mean_y += std::log(ys[i]);
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(xs[i]) - mean_x;
        sxx += dx * dx;
        sxy += dx * (std::log(ys[i]) - mean_y);
    }
    if (sxx == 0.0) {
        throw Error(ErrorCode::DomainError, "loglog_slope needs at least two distinct abscissae");
    }
    return sxy / sxx;
}

double inf_norm(const Matrix& a) { return a.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace ntklab
