#pragma once

// Data-parallel kernels. Each OpenMP version has a serial reference with the
// same signature; the two must agree bit for bit, since every element is
// computed independently and reductions run in a fixed order.

#include <span>
#include <vector>

#include "chaomask/models.hpp"
#include "chaomask/numerics.hpp"

namespace chaomask {

enum class Execution { Serial, Parallel };

namespace kernels {

/// sigma_min([jwI - A; C]) at every w.
std::vector<double> sigma_min_profile(const Matrix& a, const Matrix& c, std::span<const double> w);
std::vector<double> sigma_min_profile_serial(const Matrix& a, const Matrix& c, std::span<const double> w);

/// Largest spectral norm of the Jacobian of `m` over a uniform grid with
/// `grid_per_axis` points per axis on the box [-sigma, sigma].
double max_jacobian_norm(const PolynomialMap& m, const Vector& sigma, int grid_per_axis);
double max_jacobian_norm_serial(const PolynomialMap& m, const Vector& sigma, int grid_per_axis);

} // namespace kernels
} // namespace chaomask
