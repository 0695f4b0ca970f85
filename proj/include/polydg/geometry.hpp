#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace polydg {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

template <int Dim>
using Point = Eigen::Matrix<double, Dim, 1>;

template <int Dim>
using Tensor = Eigen::Matrix<double, Dim, Dim>;

/// Axis-aligned box, used for basis scaling.
template <int Dim>
struct BoundingBox {
    Point<Dim> lo = Point<Dim>::Constant(std::numeric_limits<double>::max());
    Point<Dim> hi = Point<Dim>::Constant(std::numeric_limits<double>::lowest());

    void extend(const Point<Dim>& p)
    {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    void extend(const BoundingBox& other)
    {
        lo = lo.cwiseMin(other.lo);
        hi = hi.cwiseMax(other.hi);
    }
    [[nodiscard]] Point<Dim> center() const { return 0.5 * (lo + hi); }
    [[nodiscard]] Point<Dim> half_extent() const { return 0.5 * (hi - lo); }
};

constexpr double factorial(int n)
{
    double r = 1.0;
    for (int i = 2; i <= n; ++i)
        r *= i;
    return r;
}

/// k-dimensional measure of the simplex spanned by K+1 points in R^Dim
/// (Gram determinant formula, valid for any 1 <= K <= Dim).
template <int Dim, std::size_t N>
double simplex_measure(const std::array<Point<Dim>, N>& pts)
{
    constexpr int k = static_cast<int>(N) - 1;
    static_assert(k >= 1 && k <= Dim);
    Eigen::Matrix<double, Dim, k> E;
    for (int i = 0; i < k; ++i)
        E.col(i) = pts[i + 1] - pts[0];
    const double g = (E.transpose() * E).determinant();
    return std::sqrt(std::max(g, 0.0)) / factorial(k);
}

/// Unit normal of a facet (Dim points), oriented away from `opposite`.
template <int Dim>
Point<Dim> facet_normal(const std::array<Point<Dim>, Dim>& facet, const Point<Dim>& opposite)
{
    Point<Dim> n;
    if constexpr (Dim == 2) {
        const Point<2> t = facet[1] - facet[0];
        n = Point<2>(t.y(), -t.x());
    } else if constexpr (Dim == 3) {
        n = (facet[1] - facet[0]).cross(facet[2] - facet[0]);
    } else {
        static_assert(Dim == 2 || Dim == 3, "only d = 2, 3 supported");
    }
    n.normalize();
    if (n.dot(opposite - facet[0]) > 0.0)
        n = -n;
    return n;
}

/// Tangential part of v with respect to the unit normal n.
template <int Dim>
Point<Dim> tangential(const Point<Dim>& v, const Point<Dim>& n)
{
    return v - v.dot(n) * n;
}

/// Symmetric outer product v (.) n = (v n^T + n v^T) / 2.
template <int Dim>
Tensor<Dim> sym_outer(const Point<Dim>& v, const Point<Dim>& n)
{
    return 0.5 * (v * n.transpose() + n * v.transpose());
}

} // namespace polydg
