#pragma once

#include "ntklab/kernels.hpp"
#include "ntklab/numerics.hpp"

#include <vector>

namespace ntklab {

/// Smallest eigenvalue of the Gram matrix.
double min_eigenvalue(const GramMatrix& g);

/// Closed-form inverse of G_alpha(X, X) for strictly increasing x:
/// (pi/2) times the tridiagonal matrix with off-diagonals -1/(x_{k+1} - x_k),
/// diagonal 1/(x_k - x_{k-1}) + 1/(x_{k+1} - x_k), and the wrap-around term
/// c = 1/(2 alpha pi - x_n + x_1) added to entries (1,1), (n,n), (1,n), (n,1).
/// Throws NotSorted, TooSmall (n < 3) and DomainError when 2 alpha pi <= x_n - x_1.
SymMatrix g_alpha_inverse(double alpha, const Vector& sorted_x);

/// h(omega) = 2 + 2 cos(omega) + omega sin(omega) (1 - 2 alpha pi).
double h_omega(double alpha, double omega);

/// Eigenvalues of the integral operator of G_alpha on L2([0, 1]).
struct MercerSpectrum {
    double alpha = 1.0;
    std::vector<double> roots;        ///< omega_1 < omega_2 < ...
    std::vector<double> eigenvalues;  ///< lambda_j = 2 / (pi omega_j^2), descending
    /// False when alpha is outside {1, 9/7}, where the root brackets are not proved.
    bool bracket_guaranteed = true;
};

/// Root j = 1 by bisection on [pi/6, pi/2], even j exactly (j - 1) pi, odd j > 1
/// by bisection on [(j - 1) pi, (j - 1/2) pi]. Bisection stops at width 1e-13.
/// Throws BracketFailure when an end-point pair has no sign change.
MercerSpectrum mercer_spectrum(double alpha, int j_max);

/// Eigenvalues of (1/N) K on the closed grid {(i - 1)/(N - 1)}, the first j_max.
std::vector<double> empirical_mercer(const KernelSpec& spec, int grid_n, int j_max);

struct SandwichResult {
    bool lo_ok = false;  ///< K - G_1 is PSD up to -1e-10
    bool hi_ok = false;  ///< 7 G_{9/7} - K is PSD up to -1e-10
    double lo_min = 0.0;
    double hi_min = 0.0;
};

SandwichResult sandwich_check(const Vector& x);

/// Log-log slope of lambdas[j - 1] against (j - index_shift) for j in [j_lo, j_hi]
/// (1-based). index_shift = 1 fits against the frequency index j - 1.
double decay_report(const std::vector<double>& lambdas, int j_lo, int j_hi, int index_shift = 0);

struct SpectrumReport {
    Eigen::Index n = 0;
    double d_min = 0.0;
    double lambda_min = 0.0;
    Vector all_eigenvalues;
    bool sandwich_ok = false;
    double decay_slope = 0.0;  ///< NaN when fewer than three eigenvalues
};

/// Spectrum of the Ntk1 Gram on a 1-d design in [0, 1], with the sandwich
/// check and the shifted decay slope of the (1/n)-scaled eigenvalues over j in [2, min(n, 40)].
SpectrumReport spectrum_report(const Vector& x);

}  // namespace ntklab
