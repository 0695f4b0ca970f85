#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "quadrature.hpp"

namespace polydg {

/// Multi-indices of total degree <= m, ordered by degree, then lexicographically
/// descending in the first coordinate.
template <int Dim>
std::vector<std::array<int, Dim>> monomial_exponents(int m)
{
    std::vector<std::array<int, Dim>> out;
    for (int deg = 0; deg <= m; ++deg) {
        std::array<int, Dim> a{};
        std::function<void(int, int)> rec = [&](int d, int left) {
            if (d == Dim - 1) {
                a[d] = left;
                out.push_back(a);
                return;
            }
            for (int k = left; k >= 0; --k) {
                a[d] = k;
                rec(d + 1, left - k);
            }
        };
        rec(0, deg);
    }
    return out;
}

inline std::size_t binomial(int n, int k)
{
    std::size_t r = 1;
    for (int i = 1; i <= k; ++i)
        r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
    return r;
}

/// Basis tabulation at a set of points: values(q, i) and grads[c](q, i).
template <int Dim>
struct BasisTable {
    Eigen::MatrixXd values;
    std::array<Eigen::MatrixXd, Dim> grads;
};

/// Broken polynomial space of total degree m over the elements of one
/// subdomain. Per element the basis is the bounding-box-scaled monomials
/// orthonormalized in L2(K), so every local mass matrix is the identity.
/// Vector fields use `components` copies, laid out component-major:
/// dof = c * n_scalar_dofs() + local_element * n_basis() + i.
template <int Dim>
class DGSpace {
public:
    DGSpace(const PolyMesh<Dim>& mesh, Subdomain sub, int degree, int quad_order = -1)
        : mesh_(&mesh), sub_(sub), m_(degree), exps_(monomial_exponents<Dim>(degree))
    {
        if (degree < 1)
            throw std::invalid_argument("DGSpace: degree must be >= 1");
        quad_order_ = quad_order > 0 ? quad_order : 2 * degree + 2;
        const auto& list = mesh.elements_of(sub);
        coeff_.resize(list.size());
        for (std::size_t k = 0; k < list.size(); ++k)
            coeff_[k] = orthonormalize(mesh.elements[list[k]]);
    }

    [[nodiscard]] const PolyMesh<Dim>& mesh() const { return *mesh_; }
    [[nodiscard]] Subdomain subdomain() const { return sub_; }
    [[nodiscard]] int degree() const { return m_; }
    [[nodiscard]] int quad_order() const { return quad_order_; }
    [[nodiscard]] std::size_t n_basis() const { return exps_.size(); }
    [[nodiscard]] std::size_t n_elements() const { return coeff_.size(); }
    [[nodiscard]] std::size_t n_scalar_dofs() const { return n_elements() * n_basis(); }
    [[nodiscard]] std::size_t global_element(std::size_t local) const { return mesh_->elements_of(sub_)[local]; }
    [[nodiscard]] std::size_t local_element(std::size_t global) const
    {
        if (mesh_->elements[global].subdomain != sub_)
            throw std::invalid_argument("DGSpace: element not in this subdomain");
        return mesh_->local_index[global];
    }
    [[nodiscard]] std::size_t dof(std::size_t comp, std::size_t local_el, std::size_t i) const
    {
        return comp * n_scalar_dofs() + local_el * n_basis() + i;
    }
    [[nodiscard]] const Element<Dim>& element(std::size_t local) const
    {
        return mesh_->elements[global_element(local)];
    }

    [[nodiscard]] QuadratureRule<Dim> quadrature(std::size_t local, int order = -1) const
    {
        return element_quadrature(*mesh_, element(local), order > 0 ? order : quad_order_);
    }

    /// Values and gradients of all basis functions of element `local` at pts.
    [[nodiscard]] BasisTable<Dim> eval(std::size_t local, const std::vector<Point<Dim>>& pts) const
    {
        const auto& K = element(local);
        BasisTable<Dim> mono = eval_monomials(K, pts);
        BasisTable<Dim> out;
        out.values = mono.values * coeff_[local];
        for (int c = 0; c < Dim; ++c)
            out.grads[c] = mono.grads[c] * coeff_[local];
        return out;
    }

    /// Evaluate a field with `ncomp` components: result(q, c).
    [[nodiscard]] Eigen::MatrixXd evaluate(const Eigen::VectorXd& x, int ncomp, std::size_t local,
                                           const std::vector<Point<Dim>>& pts) const
    {
        const auto T = eval(local, pts);
        Eigen::MatrixXd out(pts.size(), ncomp);
        for (int c = 0; c < ncomp; ++c)
            out.col(c) = T.values * x.segment(dof(c, local, 0), n_basis());
        return out;
    }

    /// Element-wise L2 projection of f : Point -> R^ncomp.
    template <class F>
    [[nodiscard]] Eigen::VectorXd project(F&& f, int ncomp, int order = -1) const
    {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ncomp * n_scalar_dofs()));
        for (std::size_t k = 0; k < n_elements(); ++k) {
            const auto Q = quadrature(k, order > 0 ? order : quad_order_ + 2);
            const auto T = eval(k, Q.points);
            for (std::size_t q = 0; q < Q.size(); ++q) {
                const Eigen::VectorXd val = as_vector(f(Q.points[q]));
                if (val.size() != ncomp)
                    throw std::invalid_argument("DGSpace::project: component count mismatch");
                for (int c = 0; c < ncomp; ++c)
                    x.segment(dof(c, k, 0), n_basis()) += Q.weights[q] * val[c] * T.values.row(q).transpose();
            }
        }
        return x;
    }

    /// Mass (Gram) matrix of element `local` under its quadrature.
    [[nodiscard]] Eigen::MatrixXd local_gram(std::size_t local, int order = -1) const
    {
        const auto Q = quadrature(local, order);
        const auto T = eval(local, Q.points);
        Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(Q.weights.data(), Q.size());
        return T.values.transpose() * w.asDiagonal() * T.values;
    }

private:
    static Eigen::VectorXd as_vector(double v) { return Eigen::VectorXd::Constant(1, v); }
    template <class V>
    static Eigen::VectorXd as_vector(const V& v)
    {
        return Eigen::VectorXd(v);
    }

    BasisTable<Dim> eval_monomials(const Element<Dim>& K, const std::vector<Point<Dim>>& pts) const
    {
        const Point<Dim> c = K.bbox.center(), s = K.bbox.half_extent();
        const auto nq = static_cast<Eigen::Index>(pts.size());
        const auto nb = static_cast<Eigen::Index>(n_basis());
        BasisTable<Dim> T;
        T.values.resize(nq, nb);
        for (auto& g : T.grads)
            g.resize(nq, nb);
        std::array<std::vector<double>, Dim> pw;
        for (Eigen::Index q = 0; q < nq; ++q) {
            Point<Dim> xi = (pts[q] - c).cwiseQuotient(s);
            for (int d = 0; d < Dim; ++d) {
                pw[d].assign(m_ + 1, 1.0);
                for (int k = 1; k <= m_; ++k)
                    pw[d][k] = pw[d][k - 1] * xi[d];
            }
            for (Eigen::Index i = 0; i < nb; ++i) {
                const auto& a = exps_[i];
                double v = 1.0;
                for (int d = 0; d < Dim; ++d)
                    v *= pw[d][a[d]];
                T.values(q, i) = v;
                for (int g = 0; g < Dim; ++g) {
                    if (a[g] == 0) {
                        T.grads[g](q, i) = 0.0;
                        continue;
                    }
                    double dv = a[g] / s[g];
                    for (int d = 0; d < Dim; ++d)
                        dv *= pw[d][d == g ? a[d] - 1 : a[d]];
                    T.grads[g](q, i) = dv;
                }
            }
        }
        return T;
    }

    // Coefficients C with phi = monomials * C, from two passes of modified
    // Gram-Schmidt in the discrete L2(K) inner product.
    Eigen::MatrixXd orthonormalize(const Element<Dim>& K) const
    {
        const auto Q = element_quadrature(*mesh_, K, quad_order_);
        const auto V = eval_monomials(K, Q.points).values;
        const auto nb = static_cast<Eigen::Index>(n_basis());
        Eigen::VectorXd sw(static_cast<Eigen::Index>(Q.size()));
        for (std::size_t q = 0; q < Q.size(); ++q)
            sw[static_cast<Eigen::Index>(q)] = std::sqrt(Q.weights[q]);
        Eigen::MatrixXd B = sw.asDiagonal() * V;
        Eigen::MatrixXd C = Eigen::MatrixXd::Identity(nb, nb);
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < nb; ++i) {
                for (Eigen::Index j = 0; j < i; ++j) {
                    const double r = B.col(j).dot(B.col(i));
                    B.col(i) -= r * B.col(j);
                    C.col(i) -= r * C.col(j);
                }
                const double nrm = B.col(i).norm();
                if (!(nrm > 1e-14 * std::sqrt(K.measure)))
                    throw std::runtime_error("DGSpace: basis orthonormalization broke down");
                B.col(i) /= nrm;
                C.col(i) /= nrm;
            }
        }
        return C;
    }

    const PolyMesh<Dim>* mesh_;
    Subdomain sub_;
    int m_;
    int quad_order_ = 0;
    std::vector<std::array<int, Dim>> exps_;
    std::vector<Eigen::MatrixXd> coeff_;
};

} // namespace polydg
