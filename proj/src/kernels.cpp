#include "chaomask/kernels.hpp"

#include <algorithm>
#include <cstdint>

#include "chaomask/errors.hpp"

namespace chaomask::kernels {

namespace {

void check_pair(const Matrix& a, const Matrix& c)
{
    require_square(a, "A");
    if (c.cols() != a.cols())
        throw DimensionError("C column count must match A");
}

std::int64_t grid_size(int dims, int per_axis)
{
    if (per_axis < 3)
        throw DomainError("grid_per_axis must be at least 3");
    std::int64_t total = 1;
    for (int i = 0; i < dims; ++i)
        total *= per_axis;
    return total;
}

// Grid point `index` in lexicographic order, first axis fastest.
Vector grid_point(std::int64_t index, const Vector& sigma, int per_axis)
{
    Vector p(sigma.size());
    for (Eigen::Index k = 0; k < sigma.size(); ++k) {
        const auto i = static_cast<double>(index % per_axis);
        index /= per_axis;
        p(k) = -sigma(k) + 2.0 * sigma(k) * i / (per_axis - 1);
    }
    return p;
}

double jacobian_norm_at(const PolynomialMap& m, const Vector& p)
{
    Eigen::JacobiSVD<Matrix> svd(m.jacobian(p));
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

void check_box(const PolynomialMap& m, const Vector& sigma)
{
    if (sigma.size() != m.n_in())
        throw DimensionError("sigma length must match the map's input dimension");
}

} // namespace

std::vector<double> sigma_min_profile(const Matrix& a, const Matrix& c, std::span<const double> w)
{
    check_pair(a, c);
    std::vector<double> out(w.size());
    const auto n = static_cast<std::int64_t>(w.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = min_singular_value_freq(a, c, w[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<double> sigma_min_profile_serial(const Matrix& a, const Matrix& c, std::span<const double> w)
{
    check_pair(a, c);
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        out[i] = min_singular_value_freq(a, c, w[i]);
    return out;
}

double max_jacobian_norm(const PolynomialMap& m, const Vector& sigma, int grid_per_axis)
{
    check_box(m, sigma);
    const std::int64_t total = grid_size(m.n_in(), grid_per_axis);
    double best = 0.0;
#pragma omp parallel for schedule(static) reduction(max : best)
    for (std::int64_t i = 0; i < total; ++i)
        best = std::max(best, jacobian_norm_at(m, grid_point(i, sigma, grid_per_axis)));
    return best;
}

double max_jacobian_norm_serial(const PolynomialMap& m, const Vector& sigma, int grid_per_axis)
{
    check_box(m, sigma);
    const std::int64_t total = grid_size(m.n_in(), grid_per_axis);
    double best = 0.0;
    for (std::int64_t i = 0; i < total; ++i)
        best = std::max(best, jacobian_norm_at(m, grid_point(i, sigma, grid_per_axis)));
    return best;
}

} // namespace chaomask::kernels
