#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>

namespace ntklab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Construction verifies exact symmetry of the stored
/// entries, so downstream code can rely on `entries()(i, j) == entries()(j, i)`.
class SymMatrix {
public:
    explicit SymMatrix(Matrix entries);

    /// Builds from the lower triangle, mirroring it into the upper one.
    static SymMatrix from_lower(Matrix entries);

    Eigen::Index order() const { return entries_.rows(); }
    const Matrix& entries() const { return entries_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

private:
    struct Trusted {};
    SymMatrix(Matrix entries, Trusted);

    Matrix entries_;
};

/// Eigenvalues sorted descending; eigenvectors are the matching columns.
struct EigenPair {
    Vector values;
    Matrix vectors;
};

/// Full symmetric eigendecomposition. Negative eigenvalues are reported raw.
/// Throws NonFinite if any entry is NaN or infinite.
EigenPair sym_eigen(const SymMatrix& a);

/// Eigenvalues only, descending. Cheaper than sym_eigen for large orders.
Vector sym_eigenvalues(const SymMatrix& a);

/// Solves A x = b through a Cholesky factorization. When the factorization
/// fails, tau * (trace / order) * I is added with tau = 1e-12, 1e-11, ...
/// up to 1e-6; past that NotPositiveDefinite is thrown.
Vector spd_solve(const SymMatrix& a, const Vector& b);

/// Counter-based 64-bit generator. Draw k (k = 0, 1, ...) of a stream with
/// key `s` is splitmix64_mix(s + (k + 1) * 0x9E3779B97F4A7C15), i.e. the
/// SplitMix64 output function applied to a Weyl counter. Uniforms take the
/// top 53 bits, (bits >> 11 + 0.5) * 2^-53, so they lie strictly in (0, 1).
/// Normals come from Box-Muller pairs: z0 = r cos(2 pi u2) is returned first,
/// z1 = r sin(2 pi u2) is kept for the next call.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t bound);
    double normal();

    /// Independent child stream: its key is splitmix64_mix(seed ^ mix(stream + 1)).
    /// The parent is not advanced, so split(i) is a pure function of (seed, i).
    Rng split(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    std::optional<double> spare_normal_;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

/// `count` i.i.d. standard normal draws from `rng`.
Vector normal(Rng& rng, Eigen::Index count);

/// Least-squares slope of log(ys) against log(xs). Throws DomainError on
/// nonpositive values and LengthMismatch on unequal or too-short input.
double loglog_slope(std::span<const double> xs, std::span<const double> ys);

/// Max absolute row sum.
double inf_norm(const Matrix& a);

}  // namespace ntklab
