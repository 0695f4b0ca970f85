#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "mesh.hpp"

namespace polydg {

template <int Dim>
struct QuadratureRule {
    std::vector<Point<Dim>> points;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const { return weights.size(); }
    [[nodiscard]] double measure() const
    {
        double s = 0.0;
        for (double w : weights)
            s += w;
        return s;
    }
    template <class F>
    [[nodiscard]] auto integrate(F&& f) const
    {
        auto acc = weights[0] * f(points[0]);
        for (std::size_t q = 1; q < size(); ++q)
            acc += weights[q] * f(points[q]);
        return acc;
    }
};

/// n-point Gauss-Legendre rule on [0, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre_01(int n)
{
    // Legendre P_n and its derivative at z.
    auto legendre = [n](double z) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        return std::pair{p1, n * (z * p1 - p0) / (z * z - 1.0)};
    };
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(z);
            const double dz = p / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        const double dp = legendre(z).second;
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

/// Rule on the reference k-simplex {xi >= 0, sum xi <= 1}, exact to total
/// degree `order`, by collapsed (Duffy) tensor Gauss rules. Weights sum to 1/k!.
template <int K>
const QuadratureRule<K>& reference_simplex_rule(int order)
{
    static std::mutex mtx;
    static std::map<int, QuadratureRule<K>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    if (auto it = cache.find(order); it != cache.end())
        return it->second;

    QuadratureRule<K> rule;
    // The collapse Jacobian adds up to K-1 degrees in the first direction.
    const int n = std::max(1, (order + K + 1) / 2);
    const auto [x, w] = gauss_legendre_01(n);
    std::array<int, K> idx{};
    while (true) {
        Point<K> xi;
        double weight = 1.0, scale = 1.0;
        for (int d = 0; d < K; ++d) {
            xi[d] = x[idx[d]] * scale;
            weight *= w[idx[d]] * scale;
            scale *= 1.0 - x[idx[d]];
        }
        rule.points.push_back(xi);
        rule.weights.push_back(weight);
        int d = K - 1;
        while (d >= 0 && ++idx[d] == n)
            idx[d--] = 0;
        if (d < 0)
            break;
    }
    return cache.emplace(order, std::move(rule)).first->second;
}

/// Map the reference rule onto a physical k-simplex embedded in R^Dim.
template <int Dim, int K>
void append_simplex_rule(QuadratureRule<Dim>& out, const std::array<Point<Dim>, K + 1>& v, int order)
{
    const auto& ref = reference_simplex_rule<K>(order);
    const double scale = simplex_measure<Dim>(v) * factorial(K);
    for (std::size_t q = 0; q < ref.size(); ++q) {
        Point<Dim> x = v[0];
        for (int d = 0; d < K; ++d)
            x += ref.points[q][d] * (v[d + 1] - v[0]);
        out.points.push_back(x);
        out.weights.push_back(ref.weights[q] * scale);
    }
}

template <int Dim>
QuadratureRule<Dim> element_quadrature(const PolyMesh<Dim>& mesh, const Element<Dim>& K, int order)
{
    if (order < 1)
        throw std::invalid_argument("element_quadrature: order must be >= 1");
    QuadratureRule<Dim> rule;
    for (const auto& s : K.simplices)
        append_simplex_rule<Dim, Dim>(rule, mesh.simplex_points(s), order);
    return rule;
}

template <int Dim>
QuadratureRule<Dim> face_quadrature(const PolyMesh<Dim>& mesh, const Face<Dim>& F, int order)
{
    if (order < 1)
        throw std::invalid_argument("face_quadrature: order must be >= 1");
    QuadratureRule<Dim> rule;
    append_simplex_rule<Dim, Dim - 1>(rule, mesh.facet_points(F.vertices), order);
    return rule;
}

} // namespace polydg
