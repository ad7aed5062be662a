#pragma once

#include "ntklab/kernels.hpp"
#include "ntklab/ntk_flow.hpp"
#include "ntklab/numerics.hpp"

#include <string>
#include <string_view>

namespace ntklab {

/// x_i = lo + (hi - lo)(i - 1)/(n - 1) as an n x 1 point set; the last point is hi exactly.
PointSet gen_equispaced(long n, double lo, double hi);

/// Ground-truth regression functions:
///   kernel_mix(x) = sum_k c_k K1(x_1, z_k), z = (0.1, 0.3, 0.5, 0.7, 0.9),
///                   c = (0.2, -0.3, 0.25, -0.15, 0.1)
///   sin_mix(x)    = sin(sum_j x_j / sqrt(d))
///   zero(x)       = 0
/// Throws UnknownTruth for any other id.
PointFunction f_star(std::string_view id);

/// f_star(id) at every row of x.
Vector f_star_values(std::string_view id, const PointSet& x);

/// y_i = f*(x_i) + sigma * z_i with z_i standard normal draws from rng, in row order.
Dataset gen_regression(const PointSet& x, std::string_view f_star_id, double sigma, Rng& rng);

/// floor(2 x_1) + 2 floor(2 x_2) + 4 floor(2 x_3), in {0, ..., 7}.
int parity3_label(const Point& x);

/// n points uniform on [0, 1]^3 with parity3 labels; each label is replaced with
/// probability p by a uniform draw from {0, ..., 7}. Points come from
/// rng.split(0) and corruption from rng.split(1), so the design does not depend on p.
Dataset gen_parity3(long n, const Rng& rng, double p);

}  // namespace ntklab
