#pragma once

#include <optional>
#include <stdexcept>

#include "mesh.hpp"

namespace polydg {

/// Average and jump of a trace pair. For scalars the jump is a vector, for
/// vectors a symmetric tensor (through v ⊙ n), for tensors a vector.
template <class Avg, class Jump>
struct JumpAvg {
    Avg average;
    Jump jump;
};

namespace detail {
template <int Dim>
void require_sides(const Face<Dim>& F, bool has_minus)
{
    if (F.kind == FaceKind::Interface)
        throw std::invalid_argument("jump_avg: interface faces need the interface variants");
    if (F.two_sided() != has_minus)
        throw std::invalid_argument("jump_avg: trace count does not match face kind " +
                                    std::string(to_string(F.kind)));
}
} // namespace detail

/// Scalar traces; q_minus is absent on boundary faces.
template <int Dim>
JumpAvg<double, Point<Dim>> jump_avg(const Face<Dim>& F, double q_plus, std::optional<double> q_minus)
{
    detail::require_sides(F, q_minus.has_value());
    if (!q_minus)
        return {q_plus, q_plus * F.normal};
    return {0.5 * (q_plus + *q_minus), (q_plus - *q_minus) * F.normal};
}

template <int Dim>
JumpAvg<Point<Dim>, Tensor<Dim>> jump_avg(const Face<Dim>& F, const Point<Dim>& v_plus,
                                          std::optional<Point<Dim>> v_minus)
{
    detail::require_sides(F, v_minus.has_value());
    if (!v_minus)
        return {v_plus, sym_outer<Dim>(v_plus, F.normal)};
    return {0.5 * (v_plus + *v_minus), sym_outer<Dim>(v_plus, F.normal) - sym_outer<Dim>(*v_minus, F.normal)};
}

template <int Dim>
JumpAvg<Tensor<Dim>, Point<Dim>> jump_avg(const Face<Dim>& F, const Tensor<Dim>& t_plus,
                                          std::optional<Tensor<Dim>> t_minus)
{
    detail::require_sides(F, t_minus.has_value());
    if (!t_minus)
        return {t_plus, t_plus * F.normal};
    return {0.5 * (t_plus + *t_minus), (t_plus - *t_minus) * F.normal};
}

/// Interface operators: the average of a scalar/tensor is its el-side trace,
/// the jump of (w, v) is w ⊙ n_el + v ⊙ n_f and its tangential variant is
/// (v)_τ − (w)_τ, tangential with respect to n_f.
template <int Dim>
double interface_average(const Face<Dim>& F, double q_el)
{
    if (F.kind != FaceKind::Interface)
        throw std::invalid_argument("interface_average: not an interface face");
    return q_el;
}

template <int Dim>
Tensor<Dim> interface_jump(const Face<Dim>& F, const Point<Dim>& w_el, const Point<Dim>& v_f)
{
    if (F.kind != FaceKind::Interface)
        throw std::invalid_argument("interface_jump: not an interface face");
    return sym_outer<Dim>(w_el, F.normal) - sym_outer<Dim>(v_f, F.normal);
}

template <int Dim>
Point<Dim> interface_tangential_jump(const Face<Dim>& F, const Point<Dim>& w_el, const Point<Dim>& v_f)
{
    if (F.kind != FaceKind::Interface)
        throw std::invalid_argument("interface_tangential_jump: not an interface face");
    const Point<Dim> n_f = -F.normal;
    return tangential<Dim>(v_f, n_f) - tangential<Dim>(w_el, n_f);
}

} // namespace polydg
