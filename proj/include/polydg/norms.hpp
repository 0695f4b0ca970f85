#pragma once

#include <functional>

#include "forms.hpp"

namespace polydg {

/// Closed-form field: value (ncomp) and gradient (ncomp x Dim) at (x, t).
template <int Dim>
struct ExactField {
    int ncomp = 1;
    std::function<void(const Point<Dim>&, double, Eigen::VectorXd&, Eigen::MatrixXd&)> eval;
    explicit operator bool() const { return static_cast<bool>(eval); }
};

/// A DG coefficient vector minus an optional exact field at time t. Either
/// part may be absent.
template <int Dim>
struct FieldView {
    const DGSpace<Dim>* space = nullptr;
    const Vec* coeffs = nullptr;
    int ncomp = 1;
    const ExactField<Dim>* exact = nullptr;
    double t = 0.0;

    /// values(q, c), grads[d](q, c) on local element k.
    void sample(std::size_t k, const std::vector<Point<Dim>>& pts, Eigen::MatrixXd& values,
                std::array<Eigen::MatrixXd, Dim>& grads) const
    {
        const auto nq = static_cast<Eigen::Index>(pts.size());
        values = Eigen::MatrixXd::Zero(nq, ncomp);
        for (auto& g : grads)
            g = Eigen::MatrixXd::Zero(nq, ncomp);
        if (coeffs) {
            const auto T = space->eval(k, pts);
            const auto nb = static_cast<Eigen::Index>(space->n_basis());
            for (int c = 0; c < ncomp; ++c) {
                const auto seg = coeffs->segment(space->dof(c, k, 0), nb);
                values.col(c) = T.values * seg;
                for (int d = 0; d < Dim; ++d)
                    grads[d].col(c) = T.grads[d] * seg;
            }
        }
        if (exact) {
            Eigen::VectorXd v;
            Eigen::MatrixXd g;
            for (Eigen::Index q = 0; q < nq; ++q) {
                exact->eval(pts[static_cast<std::size_t>(q)], t, v, g);
                for (int c = 0; c < ncomp; ++c) {
                    values(q, c) -= v[c];
                    for (int d = 0; d < Dim; ++d)
                        grads[d](q, c) -= g(c, d);
                }
            }
        }
    }
};

/// Volume, consistency and penalty parts of a SIP quadratic form.
struct SipParts {
    double volume = 0.0, consistency = 0.0, penalty = 0.0;
    [[nodiscard]] double form() const { return volume + consistency + penalty; }
    [[nodiscard]] double norm2() const { return volume + penalty; }
};

using FaceFilter = std::function<bool(FaceKind)>;
template <int Dim>
using FacePenalty = std::function<double(const Face<Dim>&)>;

namespace detail {

template <int Dim>
int quad_order_for(const FieldView<Dim>& f)
{
    return f.space->quad_order() + (f.exact ? 2 : 0);
}

/// Calls body(F, Q, sides, values, grads) for every selected face, where
/// sides lists (side index, local element) and values/grads are per side.
template <int Dim, class Body>
void for_faces(const FieldView<Dim>& f, const FaceFilter& filter, Body&& body)
{
    const auto& V = *f.space;
    const auto& mesh = V.mesh();
    for (const auto& F : mesh.faces) {
        if (!filter(F.kind))
            continue;
        const auto sides = local::sides_in(V, F);
        if (sides.empty())
            continue;
        const auto Q = face_quadrature(mesh, F, quad_order_for(f));
        std::vector<Eigen::MatrixXd> vals(sides.size());
        std::vector<std::array<Eigen::MatrixXd, Dim>> grads(sides.size());
        for (std::size_t s = 0; s < sides.size(); ++s)
            f.sample(sides[s].second, Q.points, vals[s], grads[s]);
        body(F, Q, sides, vals, grads);
    }
}

} // namespace detail

/// Parts of ∫ 2μ ε(v):ε(v) + λ (div v)² with SIP face terms on the selected
/// faces: -2∫{σ(v)}:⟦v⟧ + pen ∫|⟦v⟧|², ⟦v⟧ the symmetric tensor jump.
template <int Dim>
SipParts elastic_parts(const FieldView<Dim>& f, double mu, double lambda, const FaceFilter& faces,
                       const FacePenalty<Dim>& pen, bool volume_only = false)
{
    SipParts out;
    const auto& V = *f.space;
    auto strain = [](const std::array<Eigen::MatrixXd, Dim>& g, Eigen::Index q) {
        Tensor<Dim> e;
        for (int a = 0; a < Dim; ++a)
            for (int b = 0; b < Dim; ++b)
                e(a, b) = 0.5 * (g[b](q, a) + g[a](q, b));
        return e;
    };
    for (std::size_t k = 0; k < V.n_elements(); ++k) {
        const auto Q = V.quadrature(k, detail::quad_order_for(f));
        Eigen::MatrixXd v;
        std::array<Eigen::MatrixXd, Dim> g;
        f.sample(k, Q.points, v, g);
        for (std::size_t q = 0; q < Q.size(); ++q) {
            const auto e = strain(g, static_cast<Eigen::Index>(q));
            out.volume += Q.weights[q] * (2.0 * mu * e.squaredNorm() + lambda * e.trace() * e.trace());
        }
    }
    if (volume_only)
        return out;
    detail::for_faces(f, faces, [&](const Face<Dim>& F, const auto& Q, const auto& sides, const auto& vals,
                                    const auto& grads) {
        const double om = sides.size() == 2 ? 0.5 : 1.0;
        const double p = pen(F);
        for (std::size_t q = 0; q < Q.size(); ++q) {
            const auto qi = static_cast<Eigen::Index>(q);
            Tensor<Dim> jump = Tensor<Dim>::Zero(), avg = Tensor<Dim>::Zero();
            for (std::size_t s = 0; s < sides.size(); ++s) {
                const Point<Dim> n = F.normal_from(sides[s].first);
                const Point<Dim> v = vals[s].row(qi).transpose();
                jump += sym_outer<Dim>(v, n);
                const auto e = strain(grads[s], qi);
                avg += om * (2.0 * mu * e + lambda * e.trace() * Tensor<Dim>::Identity());
            }
            out.consistency -= 2.0 * Q.weights[q] * (avg.cwiseProduct(jump)).sum();
            out.penalty += Q.weights[q] * p * jump.squaredNorm();
        }
    });
    return out;
}

/// Parts of ∫ κ|∇p|² with SIP face terms: -2∫{κ∇p}·⟦p⟧ + pen ∫|⟦p⟧|².
template <int Dim>
SipParts scalar_parts(const FieldView<Dim>& f, double kappa, const FaceFilter& faces, const FacePenalty<Dim>& pen,
                      bool volume_only = false)
{
    SipParts out;
    const auto& V = *f.space;
    for (std::size_t k = 0; k < V.n_elements(); ++k) {
        const auto Q = V.quadrature(k, detail::quad_order_for(f));
        Eigen::MatrixXd v;
        std::array<Eigen::MatrixXd, Dim> g;
        f.sample(k, Q.points, v, g);
        for (std::size_t q = 0; q < Q.size(); ++q) {
            double g2 = 0.0;
            for (int d = 0; d < Dim; ++d)
                g2 += g[d](static_cast<Eigen::Index>(q), 0) * g[d](static_cast<Eigen::Index>(q), 0);
            out.volume += Q.weights[q] * kappa * g2;
        }
    }
    if (volume_only)
        return out;
    detail::for_faces(f, faces, [&](const Face<Dim>& F, const auto& Q, const auto& sides, const auto& vals,
                                    const auto& grads) {
        const double om = sides.size() == 2 ? 0.5 : 1.0;
        const double p = pen(F);
        for (std::size_t q = 0; q < Q.size(); ++q) {
            const auto qi = static_cast<Eigen::Index>(q);
            Point<Dim> jump = Point<Dim>::Zero(), avg = Point<Dim>::Zero();
            for (std::size_t s = 0; s < sides.size(); ++s) {
                const Point<Dim> n = F.normal_from(sides[s].first);
                jump += vals[s](qi, 0) * n;
                for (int d = 0; d < Dim; ++d)
                    avg[d] += om * kappa * grads[s][d](qi, 0);
            }
            out.consistency -= 2.0 * Q.weights[q] * avg.dot(jump);
            out.penalty += Q.weights[q] * p * jump.squaredNorm();
        }
    });
    return out;
}

/// ∫ |v|² over the field's subdomain.
template <int Dim>
double l2_norm2(const FieldView<Dim>& f)
{
    const auto& V = *f.space;
    double out = 0.0;
    for (std::size_t k = 0; k < V.n_elements(); ++k) {
        const auto Q = V.quadrature(k, detail::quad_order_for(f));
        Eigen::MatrixXd v;
        std::array<Eigen::MatrixXd, Dim> g;
        f.sample(k, Q.points, v, g);
        for (std::size_t q = 0; q < Q.size(); ++q)
            out += Q.weights[q] * v.row(static_cast<Eigen::Index>(q)).squaredNorm();
    }
    return out;
}

/// Friction form ∫_Σ κ |(v - w)_τ|² for w on the el side and v on the f side.
template <int Dim>
double friction_form(const FieldView<Dim>& w, const FieldView<Dim>& v, double kappa)
{
    const auto& mesh = w.space->mesh();
    double out = 0.0;
    if (kappa == 0.0)
        return out;
    for (const auto& F : mesh.faces) {
        if (F.kind != FaceKind::Interface)
            continue;
        const auto Q = face_quadrature(mesh, F, std::max(detail::quad_order_for(w), detail::quad_order_for(v)));
        Eigen::MatrixXd we, vf;
        std::array<Eigen::MatrixXd, Dim> g;
        w.sample(w.space->local_element(F.owners[0]), Q.points, we, g);
        v.sample(v.space->local_element(F.owners[1]), Q.points, vf, g);
        for (std::size_t q = 0; q < Q.size(); ++q) {
            const auto qi = static_cast<Eigen::Index>(q);
            const Point<Dim> d = vf.row(qi).transpose() - we.row(qi).transpose();
            out += Q.weights[q] * kappa * tangential<Dim>(d, F.normal).squaredNorm();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Broken norms with the assembly penalties.

template <int Dim>
struct BrokenNorms {
    const PolyMesh<Dim>& mesh;
    const MaterialParams& mp;
    const PenaltyConfig& pc;
    int degree;

    [[nodiscard]] FacePenalties pen(const Face<Dim>& F) const { return penalty_coefficients(mesh, F, mp, pc, degree); }

    /// Displacement: ‖C^{1/2} ε(d)‖² + ‖√η ⟦d⟧‖² on internal and Dirichlet faces.
    [[nodiscard]] SipParts displacement(const FieldView<Dim>& f, bool volume_only = false) const
    {
        return elastic_parts<Dim>(
            f, mp.mu_el, mp.lambda, [](FaceKind k) { return sip_face(k, Subdomain::el); },
            [&](const Face<Dim>& F) { return pen(F).eta; }, volume_only);
    }
    /// Network pressure j: ‖(k/μ)^{1/2} ∇p‖² + ‖√ζ_j ⟦p⟧‖².
    [[nodiscard]] SipParts network_pressure(const FieldView<Dim>& f, std::size_t j, bool volume_only = false) const
    {
        const auto& nw = mp.networks.at(j);
        return scalar_parts<Dim>(
            f, nw.k / nw.mu, [](FaceKind k) { return sip_face(k, Subdomain::el); },
            [&, j](const Face<Dim>& F) { return pen(F).zeta[j]; }, volume_only);
    }
    /// Fluid velocity: ‖√(2μ_f) ε(u)‖² + ‖√γ_v ⟦u⟧‖² on internal faces.
    [[nodiscard]] SipParts velocity(const FieldView<Dim>& f, bool volume_only = false) const
    {
        return elastic_parts<Dim>(
            f, mp.mu_f, 0.0, [](FaceKind k) { return k == FaceKind::InternalF; },
            [&](const Face<Dim>& F) { return pen(F).gamma_v; }, volume_only);
    }
    /// Fluid pressure: ‖q‖² + ‖√γ_p ⟦q⟧‖² on internal faces (no Dirichlet
    /// faces carry a pressure datum).
    [[nodiscard]] double fluid_pressure(const FieldView<Dim>& f, bool volume_only = false) const
    {
        double out = l2_norm2(f);
        if (volume_only)
            return out;
        return out + scalar_parts<Dim>(
                         f, 0.0, [](FaceKind k) { return k == FaceKind::InternalF; },
                         [&](const Face<Dim>& F) { return pen(F).gamma_p; })
                         .penalty;
    }
};

template <int Dim>
BrokenNorms<Dim> broken_norms(const PolyMesh<Dim>& mesh, const MaterialParams& mp, const PenaltyConfig& pc,
                              int degree)
{
    return BrokenNorms<Dim>{mesh, mp, pc, degree};
}

// ---------------------------------------------------------------------------
// Energy norm along a trajectory.

/// Exact fields of a coupled problem (all optional parts may be empty).
template <int Dim>
struct ExactSolution {
    ExactField<Dim> d, d_t, u, p_f;
    std::vector<ExactField<Dim>> p;
};

/// Components of the energy norm: instantaneous terms at the current time
/// and trapezoidal time integrals of the dissipative terms.
struct NormReport {
    double poro_inst = 0.0;  ///< ρ_el|∂_t d|² + ⫴d⫴² + Σ c_j|p_j|²
    double poro_int = 0.0;   ///< ∫ Σ (⫴p_j⫴² + β^e_j |p_j|²)
    double fluid_inst = 0.0; ///< ρ_f |u|²
    double fluid_int = 0.0;  ///< ∫ ⫴u⫴² + ⫴p⫴²
    double bjs_int = 0.0;    ///< ∫ G(u - ∂_t d, u - ∂_t d)

    [[nodiscard]] double poroelastic() const { return std::sqrt(poro_inst + poro_int); }
    [[nodiscard]] double fluid() const { return std::sqrt(fluid_inst + fluid_int); }
    [[nodiscard]] double bjs() const { return std::sqrt(bjs_int); }
    [[nodiscard]] double total() const { return std::sqrt(poro_inst + poro_int + fluid_inst + fluid_int + bjs_int); }
};

/// Accumulates the energy norm of (numeric - exact), or of the numeric
/// fields alone when no exact solution is given, or of the exact fields
/// alone (volume terms only) when `exact_only` is set.
template <int Dim>
class EnergyNorm {
public:
    EnergyNorm(const DGSpace<Dim>& el, const DGSpace<Dim>& f, const MaterialParams& mp, const PenaltyConfig& pc,
               const ExactSolution<Dim>* exact = nullptr, bool exact_only = false)
        : el_(el), f_(f), mp_(mp), pc_(pc), exact_(exact), exact_only_(exact_only),
          norms_(broken_norms(el.mesh(), mp, pc, el.degree())), norms_f_(broken_norms(f.mesh(), mp, pc, f.degree()))
    {
        if (exact_only && !exact)
            throw std::invalid_argument("EnergyNorm: exact_only needs an exact solution");
    }

    /// Add the state at time t (uniform steps assumed for the trapezoid).
    void add(double t, const Vec& D, const Vec& Z, const std::vector<Vec>& P, const Vec& U, const Vec& Pf)
    {
        const bool vo = exact_only_;
        auto view = [&](const DGSpace<Dim>& V, const Vec& x, int nc, const ExactField<Dim>* ex) {
            FieldView<Dim> v;
            v.space = &V;
            v.coeffs = exact_only_ ? nullptr : &x;
            v.ncomp = nc;
            v.exact = (ex && *ex) ? ex : nullptr;
            v.t = t;
            return v;
        };
        const ExactSolution<Dim>* ex = exact_;
        NormReport cur;
        const auto vd = view(el_, D, Dim, ex ? &ex->d : nullptr);
        const auto vz = view(el_, Z, Dim, ex ? &ex->d_t : nullptr);
        cur.poro_inst = mp_.rho_el * l2_norm2(vz) + norms_.displacement(vd, vo).norm2();
        double rate_poro = 0.0;
        for (std::size_t j = 0; j < P.size(); ++j) {
            const auto vp = view(el_, P[j], 1, ex && j < ex->p.size() ? &ex->p[j] : nullptr);
            const double m2 = l2_norm2(vp);
            cur.poro_inst += mp_.networks[j].c * m2;
            rate_poro += norms_.network_pressure(vp, j, vo).norm2() + mp_.networks[j].beta_e * m2;
        }
        const auto vu = view(f_, U, Dim, ex ? &ex->u : nullptr);
        const auto vq = view(f_, Pf, 1, ex ? &ex->p_f : nullptr);
        cur.fluid_inst = mp_.rho_f * l2_norm2(vu);
        const double rate_fluid = norms_f_.velocity(vu, vo).norm2() + norms_f_.fluid_pressure(vq, vo);
        const double rate_bjs = friction_form(vz, vu, mp_.bjs_coefficient());
        if (count_ > 0) {
            const double h = t - t_last_;
            acc_.poro_int += 0.5 * h * (rate_poro + last_rates_[0]);
            acc_.fluid_int += 0.5 * h * (rate_fluid + last_rates_[1]);
            acc_.bjs_int += 0.5 * h * (rate_bjs + last_rates_[2]);
        }
        last_rates_ = {rate_poro, rate_fluid, rate_bjs};
        t_last_ = t;
        ++count_;
        acc_.poro_inst = cur.poro_inst;
        acc_.fluid_inst = cur.fluid_inst;
    }

    [[nodiscard]] const NormReport& report() const { return acc_; }
    [[nodiscard]] std::size_t samples() const { return count_; }

private:
    const DGSpace<Dim>& el_;
    const DGSpace<Dim>& f_;
    const MaterialParams& mp_;
    const PenaltyConfig& pc_;
    const ExactSolution<Dim>* exact_;
    bool exact_only_;
    BrokenNorms<Dim> norms_, norms_f_;
    NormReport acc_;
    std::array<double, 3> last_rates_{};
    double t_last_ = 0.0;
    std::size_t count_ = 0;
};

} // namespace polydg
