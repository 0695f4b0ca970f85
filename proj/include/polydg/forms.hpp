#pragma once

#include <functional>
#include <optional>

#include "dg_space.hpp"
#include "params.hpp"
#include "sparse.hpp"

namespace polydg {

struct AssemblyOptions {
    int threads = 1;
};

// ---------------------------------------------------------------------------
// Local building blocks.

namespace local {

/// Dofs of element k for an ncomp-component field, ordered (c, i) -> c*nb+i.
template <int Dim>
std::vector<std::size_t> dofs(const DGSpace<Dim>& V, std::size_t k, int ncomp, std::size_t offset = 0)
{
    const auto nb = V.n_basis();
    std::vector<std::size_t> out(ncomp * nb);
    for (int c = 0; c < ncomp; ++c)
        for (std::size_t i = 0; i < nb; ++i)
            out[c * nb + i] = offset + V.dof(c, k, i);
    return out;
}

inline Eigen::VectorXd weights(const std::vector<double>& w)
{
    return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
}

template <int Dim>
Eigen::MatrixXd normal_derivative(const BasisTable<Dim>& T, const Point<Dim>& n)
{
    Eigen::MatrixXd out = n[0] * T.grads[0];
    for (int c = 1; c < Dim; ++c)
        out += n[c] * T.grads[c];
    return out;
}

/// Volume block of ∫ 2μ ε(u):ε(v) + λ div u div v.
template <int Dim>
Eigen::MatrixXd elasticity_volume(const BasisTable<Dim>& T, const Eigen::VectorXd& w, double mu, double lambda)
{
    const auto nb = T.values.cols();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(Dim * nb, Dim * nb);
    std::array<Eigen::MatrixXd, Dim> WG;
    for (int c = 0; c < Dim; ++c)
        WG[c] = w.asDiagonal() * T.grads[c];
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(nb, nb);
    for (int c = 0; c < Dim; ++c)
        lap += T.grads[c].transpose() * WG[c];
    for (int b = 0; b < Dim; ++b)
        for (int a = 0; a < Dim; ++a) {
            auto blk = K.block(b * nb, a * nb, nb, nb);
            blk = mu * T.grads[a].transpose() * WG[b] + lambda * T.grads[b].transpose() * WG[a];
            if (a == b)
                blk += mu * lap;
        }
    return K;
}

/// Face block (test side s, trial side t) of the symmetric interior penalty
/// form of ∫ σ(u):ε(v), σ = 2μ ε + λ tr ε I.
template <int Dim>
Eigen::MatrixXd elasticity_face(const BasisTable<Dim>& Ts, const BasisTable<Dim>& Tt, const Eigen::VectorXd& w,
                                const Point<Dim>& ns, const Point<Dim>& nt, double om_s, double om_t, double mu,
                                double lambda, double pen)
{
    const auto nbs = Ts.values.cols(), nbt = Tt.values.cols();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(Dim * nbs, Dim * nbt);
    const Eigen::MatrixXd WVs = w.asDiagonal() * Ts.values;
    const Eigen::MatrixXd WVt = w.asDiagonal() * Tt.values;
    const Eigen::MatrixXd VsWdnt = WVs.transpose() * normal_derivative<Dim>(Tt, ns);
    const Eigen::MatrixXd dnsWVt = normal_derivative<Dim>(Ts, nt).transpose() * WVt;
    const Eigen::MatrixXd VV = WVs.transpose() * Tt.values;
    std::array<Eigen::MatrixXd, Dim> VsWGt, GsWVt;
    for (int c = 0; c < Dim; ++c) {
        VsWGt[c] = WVs.transpose() * Tt.grads[c];
        GsWVt[c] = Ts.grads[c].transpose() * WVt;
    }
    const double nn = ns.dot(nt);
    for (int b = 0; b < Dim; ++b)
        for (int a = 0; a < Dim; ++a) {
            Eigen::MatrixXd blk = -om_t * (mu * ns[a] * VsWGt[b] + lambda * ns[b] * VsWGt[a]) -
                                  om_s * (mu * nt[b] * GsWVt[a] + lambda * nt[a] * GsWVt[b]) +
                                  pen * 0.5 * ns[a] * nt[b] * VV;
            if (a == b)
                blk += -om_t * mu * VsWdnt - om_s * mu * dnsWVt + pen * 0.5 * nn * VV;
            K.block(b * nbs, a * nbt, nbs, nbt) = blk;
        }
    return K;
}

/// Face block of the scalar SIP form with diffusion κ.
template <int Dim>
Eigen::MatrixXd diffusion_face(const BasisTable<Dim>& Ts, const BasisTable<Dim>& Tt, const Eigen::VectorXd& w,
                               const Point<Dim>& ns, const Point<Dim>& nt, double om_s, double om_t, double kappa,
                               double pen)
{
    const Eigen::MatrixXd WVs = w.asDiagonal() * Ts.values;
    const Eigen::MatrixXd WVt = w.asDiagonal() * Tt.values;
    return -om_t * kappa * WVs.transpose() * normal_derivative<Dim>(Tt, ns) -
           om_s * kappa * normal_derivative<Dim>(Ts, nt).transpose() * WVt +
           pen * ns.dot(nt) * WVs.transpose() * Tt.values;
}

/// Replicate a scalar block on the diagonal of an ncomp x ncomp block matrix.
inline Eigen::MatrixXd kron_identity(const Eigen::MatrixXd& s, int ncomp)
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(ncomp * s.rows(), ncomp * s.cols());
    for (int c = 0; c < ncomp; ++c)
        out.block(c * s.rows(), c * s.cols(), s.rows(), s.cols()) = s;
    return out;
}

/// Owners of a face that lie in the space's subdomain: (side, local element).
template <int Dim>
std::vector<std::pair<int, std::size_t>> sides_in(const DGSpace<Dim>& V, const Face<Dim>& F)
{
    std::vector<std::pair<int, std::size_t>> out;
    for (int s = 0; s < 2; ++s)
        if (F.owners[s] != npos && V.mesh().elements[F.owners[s]].subdomain == V.subdomain())
            out.emplace_back(s, V.local_element(F.owners[s]));
    return out;
}

} // namespace local

/// Faces carrying SIP terms in a subdomain: internal ones plus the Dirichlet
/// boundary (DirichletEl for el, WallF for f).
inline bool sip_face(FaceKind k, Subdomain s)
{
    if (s == Subdomain::el)
        return k == FaceKind::InternalEl || k == FaceKind::DirichletEl;
    return k == FaceKind::InternalF || k == FaceKind::WallF;
}

// ---------------------------------------------------------------------------
// Poroelastic blocks.

struct PoroBlocks {
    SpMat A_el;             ///< elasticity, vector space
    std::vector<SpMat> B;   ///< per network, rows: pressure dofs, cols: displacement dofs
    std::vector<SpMat> A;   ///< per network Darcy SIP
    SpMat M_vec;            ///< unweighted vector mass
    SpMat M_scalar;         ///< unweighted scalar mass
    Eigen::MatrixXd C_coef; ///< C_jk = C_coef(j,k) * M_scalar

    [[nodiscard]] SpMat C(std::size_t j, std::size_t k) const { return C_coef(j, k) * M_scalar; }
};

inline Eigen::MatrixXd exchange_coefficients(const MaterialParams& mp)
{
    const auto J = static_cast<Eigen::Index>(mp.n_networks());
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(J, J);
    for (Eigen::Index j = 0; j < J; ++j) {
        double diag = mp.networks[j].beta_e;
        for (Eigen::Index k = 0; k < J; ++k)
            if (k != j) {
                diag += mp.beta(k, j);
                C(j, k) = -mp.beta(k, j);
            }
        C(j, j) = diag;
    }
    return C;
}

template <int Dim>
PoroBlocks assemble_poroelastic(const DGSpace<Dim>& V, const MaterialParams& mp, const PenaltyConfig& pc,
                                AssemblyOptions opt = {})
{
    if (V.subdomain() != Subdomain::el)
        throw std::invalid_argument("assemble_poroelastic: space must live on the el subdomain");
    const auto& mesh = V.mesh();
    const auto J = mp.n_networks();
    const auto nb = V.n_basis();
    const auto Ns = V.n_scalar_dofs(), Nv = Dim * Ns;

    // Element terms.
    const std::size_t nblocks = 3 + 2 * J; // A_el, Mv, Ms, B_j..., A_j...
    std::vector<Triplets> T(nblocks);
    {
        auto body = [&](std::size_t idx) {
            return chunked_triplets(V.n_elements(), opt.threads, [&](std::size_t b, std::size_t e, Triplets& out) {
                for (std::size_t k = b; k < e; ++k) {
                    const auto Q = V.quadrature(k);
                    const auto Tb = V.eval(k, Q.points);
                    const auto w = local::weights(Q.weights);
                    const auto ds = local::dofs(V, k, 1), dv = local::dofs(V, k, Dim);
                    const Eigen::MatrixXd M = Tb.values.transpose() * w.asDiagonal() * Tb.values;
                    if (idx == 0) {
                        scatter(out, dv, dv, local::elasticity_volume<Dim>(Tb, w, mp.mu_el, mp.lambda));
                    } else if (idx == 1) {
                        scatter(out, dv, dv, local::kron_identity(M, Dim));
                    } else if (idx == 2) {
                        scatter(out, ds, ds, M);
                    } else if (idx < 3 + J) {
                        const double alpha = mp.networks[idx - 3].alpha;
                        Eigen::MatrixXd Bl(nb, Dim * nb);
                        for (int c = 0; c < Dim; ++c)
                            Bl.block(0, c * nb, nb, nb) =
                                -alpha * Tb.values.transpose() * w.asDiagonal() * Tb.grads[c];
                        scatter(out, ds, dv, Bl);
                    } else {
                        const auto& nw = mp.networks[idx - 3 - J];
                        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(nb, nb);
                        for (int c = 0; c < Dim; ++c)
                            L += Tb.grads[c].transpose() * w.asDiagonal() * Tb.grads[c];
                        scatter(out, ds, ds, (nw.k / nw.mu) * L);
                    }
                }
            });
        };
        for (std::size_t idx = 0; idx < nblocks; ++idx)
            T[idx] = body(idx);
    }

    // Face terms.
    std::vector<std::size_t> faces;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        if (sip_face(mesh.faces[f].kind, Subdomain::el))
            faces.push_back(f);
    std::vector<Triplets> TF(1 + 2 * J);
    for (std::size_t idx = 0; idx < TF.size(); ++idx) {
        TF[idx] = chunked_triplets(faces.size(), opt.threads, [&](std::size_t b, std::size_t e, Triplets& out) {
            for (std::size_t fi = b; fi < e; ++fi) {
                const auto& F = mesh.faces[faces[fi]];
                const auto pen = penalty_coefficients(mesh, F, mp, pc, V.degree());
                const auto Q = face_quadrature(mesh, F, V.quad_order());
                const auto w = local::weights(Q.weights);
                const auto sides = local::sides_in(V, F);
                const double om = sides.size() == 2 ? 0.5 : 1.0;
                std::vector<BasisTable<Dim>> tabs;
                for (const auto& sd : sides)
                    tabs.push_back(V.eval(sd.second, Q.points));
                for (std::size_t s = 0; s < sides.size(); ++s)
                    for (std::size_t t = 0; t < sides.size(); ++t) {
                        const auto ns = F.normal_from(sides[s].first), nt = F.normal_from(sides[t].first);
                        if (idx == 0) {
                            scatter(out, local::dofs(V, sides[s].second, Dim), local::dofs(V, sides[t].second, Dim),
                                    local::elasticity_face<Dim>(tabs[s], tabs[t], w, ns, nt, om, om, mp.mu_el,
                                                                mp.lambda, pen.eta));
                        } else if (idx < 1 + J) {
                            // rows: pressure on side t; cols: displacement on side s.
                            const double alpha = mp.networks[idx - 1].alpha;
                            const Eigen::MatrixXd VV =
                                tabs[t].values.transpose() * w.asDiagonal() * tabs[s].values;
                            Eigen::MatrixXd Bl(nb, Dim * nb);
                            for (int c = 0; c < Dim; ++c)
                                Bl.block(0, c * nb, nb, nb) = alpha * om * ns[c] * VV;
                            scatter(out, local::dofs(V, sides[t].second, 1), local::dofs(V, sides[s].second, Dim),
                                    Bl);
                        } else {
                            const auto j = idx - 1 - J;
                            const auto& nw = mp.networks[j];
                            scatter(out, local::dofs(V, sides[s].second, 1), local::dofs(V, sides[t].second, 1),
                                    local::diffusion_face<Dim>(tabs[s], tabs[t], w, ns, nt, om, om, nw.k / nw.mu,
                                                               pen.zeta[j]));
                        }
                    }
            }
        });
    }

    auto join = [](Triplets a, const Triplets& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    PoroBlocks out;
    out.A_el = to_sparse(Nv, Nv, join(T[0], TF[0]));
    out.M_vec = to_sparse(Nv, Nv, T[1]);
    out.M_scalar = to_sparse(Ns, Ns, T[2]);
    for (std::size_t j = 0; j < J; ++j) {
        out.B.push_back(to_sparse(Ns, Nv, join(T[3 + j], TF[1 + j])));
        out.A.push_back(to_sparse(Ns, Ns, join(T[3 + J + j], TF[1 + J + j])));
    }
    out.C_coef = exchange_coefficients(mp);
    return out;
}

// ---------------------------------------------------------------------------
// Fluid blocks.

struct FluidBlocks {
    SpMat A_f;      ///< viscous SIP, vector space
    SpMat B_f;      ///< rows: pressure dofs, cols: velocity dofs
    SpMat S;        ///< pressure-jump stabilization
    SpMat M_vec;    ///< unweighted vector mass
    SpMat M_scalar; ///< unweighted scalar mass
};

template <int Dim>
FluidBlocks assemble_fluid(const DGSpace<Dim>& V, const MaterialParams& mp, const PenaltyConfig& pc,
                           AssemblyOptions opt = {})
{
    if (V.subdomain() != Subdomain::f)
        throw std::invalid_argument("assemble_fluid: space must live on the f subdomain");
    const auto& mesh = V.mesh();
    const auto nb = V.n_basis();
    const auto Ns = V.n_scalar_dofs(), Nv = Dim * Ns;

    std::array<Triplets, 4> T; // A_f, B_f, Mv, Ms
    for (int idx = 0; idx < 4; ++idx)
        T[idx] = chunked_triplets(V.n_elements(), opt.threads, [&](std::size_t b, std::size_t e, Triplets& out) {
            for (std::size_t k = b; k < e; ++k) {
                const auto Q = V.quadrature(k);
                const auto Tb = V.eval(k, Q.points);
                const auto w = local::weights(Q.weights);
                const auto ds = local::dofs(V, k, 1), dv = local::dofs(V, k, Dim);
                if (idx == 0) {
                    scatter(out, dv, dv, local::elasticity_volume<Dim>(Tb, w, mp.mu_f, 0.0));
                } else if (idx == 1) {
                    Eigen::MatrixXd Bl(nb, Dim * nb);
                    for (int c = 0; c < Dim; ++c)
                        Bl.block(0, c * nb, nb, nb) = -Tb.values.transpose() * w.asDiagonal() * Tb.grads[c];
                    scatter(out, ds, dv, Bl);
                } else {
                    const Eigen::MatrixXd M = Tb.values.transpose() * w.asDiagonal() * Tb.values;
                    if (idx == 2)
                        scatter(out, dv, dv, local::kron_identity(M, Dim));
                    else
                        scatter(out, ds, ds, M);
                }
            }
        });

    std::vector<std::size_t> faces;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        if (sip_face(mesh.faces[f].kind, Subdomain::f))
            faces.push_back(f);
    std::array<Triplets, 3> TF; // A_f, B_f, S
    for (int idx = 0; idx < 3; ++idx)
        TF[idx] = chunked_triplets(faces.size(), opt.threads, [&](std::size_t b, std::size_t e, Triplets& out) {
            for (std::size_t fi = b; fi < e; ++fi) {
                const auto& F = mesh.faces[faces[fi]];
                if (idx == 2 && !is_internal(F.kind))
                    continue;
                const auto pen = penalty_coefficients(mesh, F, mp, pc, V.degree());
                const auto Q = face_quadrature(mesh, F, V.quad_order());
                const auto w = local::weights(Q.weights);
                const auto sides = local::sides_in(V, F);
                const double om = sides.size() == 2 ? 0.5 : 1.0;
                std::vector<BasisTable<Dim>> tabs;
                for (const auto& sd : sides)
                    tabs.push_back(V.eval(sd.second, Q.points));
                for (std::size_t s = 0; s < sides.size(); ++s)
                    for (std::size_t t = 0; t < sides.size(); ++t) {
                        const auto ns = F.normal_from(sides[s].first), nt = F.normal_from(sides[t].first);
                        if (idx == 0) {
                            scatter(out, local::dofs(V, sides[s].second, Dim), local::dofs(V, sides[t].second, Dim),
                                    local::elasticity_face<Dim>(tabs[s], tabs[t], w, ns, nt, om, om, mp.mu_f, 0.0,
                                                                pen.gamma_v));
                        } else if (idx == 1) {
                            const Eigen::MatrixXd VV =
                                tabs[t].values.transpose() * w.asDiagonal() * tabs[s].values;
                            Eigen::MatrixXd Bl(nb, Dim * nb);
                            for (int c = 0; c < Dim; ++c)
                                Bl.block(0, c * nb, nb, nb) = om * ns[c] * VV;
                            scatter(out, local::dofs(V, sides[t].second, 1), local::dofs(V, sides[s].second, Dim),
                                    Bl);
                        } else {
                            scatter(out, local::dofs(V, sides[s].second, 1), local::dofs(V, sides[t].second, 1),
                                    pen.gamma_p * ns.dot(nt) * tabs[s].values.transpose() * w.asDiagonal() *
                                        tabs[t].values);
                        }
                    }
            }
        });

    auto join = [](Triplets a, const Triplets& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    FluidBlocks out;
    out.A_f = to_sparse(Nv, Nv, join(T[0], TF[0]));
    out.B_f = to_sparse(Ns, Nv, join(T[1], TF[1]));
    out.S = to_sparse(Ns, Ns, TF[2]);
    out.M_vec = to_sparse(Nv, Nv, T[2]);
    out.M_scalar = to_sparse(Ns, Ns, T[3]);
    return out;
}

// ---------------------------------------------------------------------------
// Advection.

/// Matrix of N_f(u*; u, v) (rows: test v, cols: trial u). Besides the volume
/// and internal-face terms, every non-internal fluid face carries
/// -ρ_f/2 ∫ (u*·n) u·v, which makes the matrix exactly skew-symmetric.
template <int Dim>
SpMat assemble_advection(const DGSpace<Dim>& V, const MaterialParams& mp, const Vec& ustar, AssemblyOptions opt = {})
{
    if (V.subdomain() != Subdomain::f)
        throw std::invalid_argument("assemble_advection: space must live on the f subdomain");
    const auto& mesh = V.mesh();
    const auto Ns = V.n_scalar_dofs(), Nv = Dim * Ns;
    if (static_cast<std::size_t>(ustar.size()) != Nv)
        throw std::invalid_argument("assemble_advection: u* has wrong length");
    const double rho = mp.rho_f;
    if (ustar.isZero(0.0))
        return SpMat(static_cast<Eigen::Index>(Nv), static_cast<Eigen::Index>(Nv));

    Triplets vol = chunked_triplets(V.n_elements(), opt.threads, [&](std::size_t b, std::size_t e, Triplets& out) {
        for (std::size_t k = b; k < e; ++k) {
            const auto Q = V.quadrature(k);
            const auto Tb = V.eval(k, Q.points);
            const auto nb = static_cast<Eigen::Index>(V.n_basis());
            Eigen::VectorXd div = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(Q.size()));
            Eigen::MatrixXd conv = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(Q.size()), nb);
            for (int c = 0; c < Dim; ++c) {
                const Eigen::VectorXd uc = Tb.values * ustar.segment(V.dof(c, k, 0), nb);
                const Eigen::VectorXd duc = Tb.grads[c] * ustar.segment(V.dof(c, k, 0), nb);
                div += duc;
                conv += uc.asDiagonal() * Tb.grads[c];
            }
            const auto w = local::weights(Q.weights);
            const Eigen::MatrixXd Nl =
                rho * Tb.values.transpose() * w.asDiagonal() * (conv + 0.5 * div.asDiagonal() * Tb.values);
            const auto dv = local::dofs(V, k, Dim);
            scatter(out, dv, dv, local::kron_identity(Nl, Dim));
        }
    });

    std::vector<std::size_t> faces;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        if (!local::sides_in(V, mesh.faces[f]).empty())
            faces.push_back(f);
    Triplets fac = chunked_triplets(faces.size(), opt.threads, [&](std::size_t b, std::size_t e, Triplets& out) {
        for (std::size_t fi = b; fi < e; ++fi) {
            const auto& F = mesh.faces[faces[fi]];
            const auto Q = face_quadrature(mesh, F, V.quad_order());
            const auto w = local::weights(Q.weights);
            const auto sides = local::sides_in(V, F);
            const auto nb = static_cast<Eigen::Index>(V.n_basis());
            std::vector<BasisTable<Dim>> tabs;
            std::vector<Eigen::MatrixXd> us; // (q, c)
            for (const auto& sd : sides) {
                tabs.push_back(V.eval(sd.second, Q.points));
                Eigen::MatrixXd u(static_cast<Eigen::Index>(Q.size()), Dim);
                for (int c = 0; c < Dim; ++c)
                    u.col(c) = tabs.back().values * ustar.segment(V.dof(c, sd.second, 0), nb);
                us.push_back(u);
            }
            if (sides.size() == 1) {
                const Eigen::VectorXd un = us[0] * F.normal_from(sides[0].first);
                const Eigen::MatrixXd Nl = -0.5 * rho * tabs[0].values.transpose() * (w.cwiseProduct(un)).asDiagonal() *
                                           tabs[0].values;
                const auto d = local::dofs(V, sides[0].second, Dim);
                scatter(out, d, d, local::kron_identity(Nl, Dim));
                continue;
            }
            const Point<Dim> n0 = F.normal_from(sides[0].first);
            const Eigen::VectorXd avg_n = 0.5 * (us[0] + us[1]) * n0; // {u*}·n⁺
            const Eigen::VectorXd jump_n = (us[0] - us[1]) * n0;      // u*⁺·n⁺ + u*⁻·n⁻
            for (std::size_t s = 0; s < 2; ++s)
                for (std::size_t t = 0; t < 2; ++t) {
                    const double sign_t = t == 0 ? 1.0 : -1.0; // n_t = sign_t n⁺
                    Eigen::VectorXd coef = -0.5 * rho * sign_t * avg_n;
                    if (s == t)
                        coef -= 0.25 * rho * jump_n;
                    const Eigen::MatrixXd Nl =
                        tabs[s].values.transpose() * (w.cwiseProduct(coef)).asDiagonal() * tabs[t].values;
                    scatter(out, local::dofs(V, sides[s].second, Dim), local::dofs(V, sides[t].second, Dim),
                            local::kron_identity(Nl, Dim));
                }
        }
    });
    vol.insert(vol.end(), fac.begin(), fac.end());
    return to_sparse(Nv, Nv, vol);
}

// ---------------------------------------------------------------------------
// Interface coupling.

struct InterfaceBlocks {
    SpMat J_el; ///< rows: p_E dofs, cols: displacement dofs; ∫ p w·n_el
    SpMat J_f;  ///< rows: p_E dofs, cols: fluid velocity dofs; ∫ p v·n_f
    SpMat G_ee, G_ef, G_fe, G_ff;

    /// Joint friction matrix on [el velocity; f velocity].
    [[nodiscard]] SpMat G_joint() const
    {
        const auto ne = G_ee.rows(), nf = G_ff.rows();
        Triplets t;
        auto put = [&](const SpMat& m, Eigen::Index r0, Eigen::Index c0, double sgn) {
            for (int k = 0; k < m.outerSize(); ++k)
                for (SpMat::InnerIterator it(m, k); it; ++it)
                    t.emplace_back(static_cast<int>(r0 + it.row()), static_cast<int>(c0 + it.col()),
                                   sgn * it.value());
        };
        put(G_ee, 0, 0, 1.0);
        put(G_ef, 0, ne, -1.0);
        put(G_fe, ne, 0, -1.0);
        put(G_ff, ne, ne, 1.0);
        return to_sparse(static_cast<std::size_t>(ne + nf), static_cast<std::size_t>(ne + nf), t);
    }
};

template <int Dim>
InterfaceBlocks assemble_interface(const DGSpace<Dim>& Vel, const DGSpace<Dim>& Vf, const MaterialParams& mp)
{
    const auto& mesh = Vel.mesh();
    if (&mesh != &Vf.mesh())
        throw std::invalid_argument("assemble_interface: spaces on different meshes");
    const auto nbe = Vel.n_basis(), nbf = Vf.n_basis();
    const double kappa = mp.bjs_coefficient();
    Triplets tje, tjf, tee, tef, tff;
    for (const auto& F : mesh.faces) {
        if (F.kind != FaceKind::Interface)
            continue;
        const auto ke = Vel.local_element(F.owners[0]), kf = Vf.local_element(F.owners[1]);
        const auto Q = face_quadrature(mesh, F, std::max(Vel.quad_order(), Vf.quad_order()));
        const auto w = local::weights(Q.weights);
        const auto Te = Vel.eval(ke, Q.points), Tf = Vf.eval(kf, Q.points);
        const Eigen::MatrixXd WVe = w.asDiagonal() * Te.values;
        const Eigen::MatrixXd EE = WVe.transpose() * Te.values, EF = WVe.transpose() * Tf.values;
        const Eigen::MatrixXd FF = Tf.values.transpose() * w.asDiagonal() * Tf.values;
        const Point<Dim> n = F.normal;
        const Tensor<Dim> P = Tensor<Dim>::Identity() - n * n.transpose();
        Eigen::MatrixXd je(nbe, Dim * nbe), jf(nbe, Dim * nbf);
        Eigen::MatrixXd gee(Dim * nbe, Dim * nbe), gef(Dim * nbe, Dim * nbf), gff(Dim * nbf, Dim * nbf);
        for (int b = 0; b < Dim; ++b) {
            je.block(0, b * nbe, nbe, nbe) = n[b] * EE;
            jf.block(0, b * nbf, nbe, nbf) = -n[b] * EF;
            for (int a = 0; a < Dim; ++a) {
                gee.block(b * nbe, a * nbe, nbe, nbe) = kappa * P(a, b) * EE;
                gef.block(b * nbe, a * nbf, nbe, nbf) = kappa * P(a, b) * EF;
                gff.block(b * nbf, a * nbf, nbf, nbf) = kappa * P(a, b) * FF;
            }
        }
        const auto pe = local::dofs(Vel, ke, 1), de = local::dofs(Vel, ke, Dim), df = local::dofs(Vf, kf, Dim);
        scatter(tje, pe, de, je);
        scatter(tjf, pe, df, jf);
        if (kappa != 0.0) {
            scatter(tee, de, de, gee);
            scatter(tef, de, df, gef);
            scatter(tff, df, df, gff);
        }
    }
    const auto Nse = Vel.n_scalar_dofs(), Nsf = Vf.n_scalar_dofs();
    InterfaceBlocks out;
    out.J_el = to_sparse(Nse, Dim * Nse, tje);
    out.J_f = to_sparse(Nse, Dim * Nsf, tjf);
    out.G_ee = to_sparse(Dim * Nse, Dim * Nse, tee);
    out.G_ef = to_sparse(Dim * Nse, Dim * Nsf, tef);
    out.G_fe = SpMat(out.G_ef.transpose());
    out.G_ff = to_sparse(Dim * Nsf, Dim * Nsf, tff);
    return out;
}

// ---------------------------------------------------------------------------
// Backflow.

/// Matrix of ∫_{Γ_out} ρ_f/2 min(0, uⁿ·n) u·v (negative semi-definite).
template <int Dim>
SpMat assemble_backflow(const DGSpace<Dim>& V, const MaterialParams& mp, const Vec& u_n)
{
    const auto& mesh = V.mesh();
    const auto Nv = Dim * V.n_scalar_dofs();
    const auto nb = static_cast<Eigen::Index>(V.n_basis());
    Triplets t;
    for (const auto& F : mesh.faces) {
        if (F.kind != FaceKind::OutletF)
            continue;
        const auto k = V.local_element(F.owners[0]);
        const auto Q = face_quadrature(mesh, F, V.quad_order());
        const auto Tb = V.eval(k, Q.points);
        Eigen::VectorXd un = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(Q.size()));
        for (int c = 0; c < Dim; ++c)
            un += F.normal[c] * (Tb.values * u_n.segment(V.dof(c, k, 0), nb));
        Eigen::VectorXd coef(un.size());
        for (Eigen::Index q = 0; q < un.size(); ++q)
            coef[q] = 0.5 * mp.rho_f * std::min(0.0, un[q]) * Q.weights[static_cast<std::size_t>(q)];
        if (coef.isZero(0.0))
            continue;
        const Eigen::MatrixXd Bl = Tb.values.transpose() * coef.asDiagonal() * Tb.values;
        const auto d = local::dofs(V, k, Dim);
        scatter(t, d, d, local::kron_identity(Bl, Dim));
    }
    return to_sparse(Nv, Nv, t);
}

// ---------------------------------------------------------------------------
// Loads.

template <int Dim>
struct ProblemData {
    using VecFn = std::function<Point<Dim>(const Point<Dim>&, double)>;
    using ScalFn = std::function<double(const Point<Dim>&, double)>;
    VecFn f_el, f_f;
    std::vector<ScalFn> g; ///< per network source
    /// Dirichlet data on DirichletEl faces (displacement, its time derivative,
    /// network pressures) and on WallF faces (fluid velocity).
    VecFn d_D, d_D_dot, u_D;
    std::vector<ScalFn> p_D;
    /// Outlet normal stress datum.
    ScalFn p_out;
};

struct Loads {
    Vec F_el;             ///< momentum of the solid (test w)
    std::vector<Vec> F_p; ///< network mass balances (test q_j)
    Vec F_f;              ///< fluid momentum (test v)
    Vec F_c;              ///< fluid continuity (test q)
};

template <int Dim>
Loads assemble_loads(const DGSpace<Dim>& Vel, const DGSpace<Dim>& Vf, const MaterialParams& mp,
                     const PenaltyConfig& pc, const ProblemData<Dim>& data, double t)
{
    const auto& mesh = Vel.mesh();
    const auto J = mp.n_networks();
    Loads L;
    L.F_el = Vec::Zero(static_cast<Eigen::Index>(Dim * Vel.n_scalar_dofs()));
    L.F_p.assign(J, Vec::Zero(static_cast<Eigen::Index>(Vel.n_scalar_dofs())));
    L.F_f = Vec::Zero(static_cast<Eigen::Index>(Dim * Vf.n_scalar_dofs()));
    L.F_c = Vec::Zero(static_cast<Eigen::Index>(Vf.n_scalar_dofs()));
    const int qo_el = Vel.quad_order() + 2, qo_f = Vf.quad_order() + 2;

    auto volume = [&](const DGSpace<Dim>& V, int qo, const auto& fn, int ncomp, Vec& out) {
        const auto nb = V.n_basis();
        for (std::size_t k = 0; k < V.n_elements(); ++k) {
            const auto Q = V.quadrature(k, qo);
            const auto Tb = V.eval(k, Q.points);
            Eigen::MatrixXd vals(static_cast<Eigen::Index>(Q.size()), ncomp);
            for (std::size_t q = 0; q < Q.size(); ++q)
                vals.row(static_cast<Eigen::Index>(q)) = Eigen::VectorXd(fn(Q.points[q], t)).transpose() * Q.weights[q];
            for (int c = 0; c < ncomp; ++c)
                out.segment(V.dof(c, k, 0), nb) += Tb.values.transpose() * vals.col(c);
        }
    };
    auto as_vec = [](const auto& f) {
        return [&f](const Point<Dim>& x, double tt) { return Eigen::VectorXd::Constant(1, f(x, tt)); };
    };
    if (data.f_el)
        volume(Vel, qo_el, data.f_el, Dim, L.F_el);
    if (data.f_f)
        volume(Vf, qo_f, data.f_f, Dim, L.F_f);
    for (std::size_t j = 0; j < J && j < data.g.size(); ++j)
        if (data.g[j])
            volume(Vel, qo_el, as_vec(data.g[j]), 1, L.F_p[j]);

    for (const auto& F : mesh.faces) {
        if (F.kind == FaceKind::DirichletEl) {
            const auto pen = penalty_coefficients(mesh, F, mp, pc, Vel.degree());
            const auto k = Vel.local_element(F.owners[0]);
            const auto Q = face_quadrature(mesh, F, qo_el);
            const auto Tb = Vel.eval(k, Q.points);
            const auto nb = static_cast<Eigen::Index>(Vel.n_basis());
            const Point<Dim> n = F.normal;
            const Eigen::MatrixXd dn = local::normal_derivative<Dim>(Tb, n);
            for (std::size_t q = 0; q < Q.size(); ++q) {
                const double w = Q.weights[q];
                const auto qi = static_cast<Eigen::Index>(q);
                if (data.d_D) {
                    const Point<Dim> g = data.d_D(Q.points[q], t);
                    const double gn = g.dot(n);
                    Eigen::VectorXd grad_g = Eigen::VectorXd::Zero(nb);
                    for (int c = 0; c < Dim; ++c)
                        grad_g += g[c] * Tb.grads[c].row(qi).transpose();
                    for (int b = 0; b < Dim; ++b) {
                        Eigen::VectorXd r = -(mp.mu_el * (g[b] * dn.row(qi).transpose() + n[b] * grad_g) +
                                              mp.lambda * gn * Tb.grads[b].row(qi).transpose());
                        r += pen.eta * 0.5 * (g[b] + gn * n[b]) * Tb.values.row(qi).transpose();
                        L.F_el.segment(Vel.dof(b, k, 0), nb) += w * r;
                    }
                }
                for (std::size_t j = 0; j < J; ++j) {
                    const auto& nw = mp.networks[j];
                    auto seg = L.F_p[j].segment(Vel.dof(0, k, 0), nb);
                    if (j < data.p_D.size() && data.p_D[j]) {
                        const double gp = data.p_D[j](Q.points[q], t);
                        seg += w * gp *
                               (-(nw.k / nw.mu) * dn.row(qi).transpose() + pen.zeta[j] * Tb.values.row(qi).transpose());
                    }
                    if (data.d_D_dot) {
                        const double gdn = data.d_D_dot(Q.points[q], t).dot(n);
                        seg += -w * nw.alpha * gdn * Tb.values.row(qi).transpose();
                    }
                }
            }
        } else if (F.kind == FaceKind::WallF && data.u_D) {
            const auto pen = penalty_coefficients(mesh, F, mp, pc, Vf.degree());
            const auto k = Vf.local_element(F.owners[0]);
            const auto Q = face_quadrature(mesh, F, qo_f);
            const auto Tb = Vf.eval(k, Q.points);
            const auto nb = static_cast<Eigen::Index>(Vf.n_basis());
            const Point<Dim> n = F.normal;
            const Eigen::MatrixXd dn = local::normal_derivative<Dim>(Tb, n);
            for (std::size_t q = 0; q < Q.size(); ++q) {
                const double w = Q.weights[q];
                const auto qi = static_cast<Eigen::Index>(q);
                const Point<Dim> g = data.u_D(Q.points[q], t);
                const double gn = g.dot(n);
                Eigen::VectorXd grad_g = Eigen::VectorXd::Zero(nb);
                for (int c = 0; c < Dim; ++c)
                    grad_g += g[c] * Tb.grads[c].row(qi).transpose();
                for (int b = 0; b < Dim; ++b) {
                    Eigen::VectorXd r = -mp.mu_f * (g[b] * dn.row(qi).transpose() + n[b] * grad_g);
                    r += pen.gamma_v * 0.5 * (g[b] + gn * n[b]) * Tb.values.row(qi).transpose();
                    L.F_f.segment(Vf.dof(b, k, 0), nb) += w * r;
                }
                L.F_c.segment(Vf.dof(0, k, 0), nb) += -w * gn * Tb.values.row(qi).transpose();
            }
        } else if (F.kind == FaceKind::OutletF && data.p_out) {
            const auto k = Vf.local_element(F.owners[0]);
            const auto Q = face_quadrature(mesh, F, qo_f);
            const auto Tb = Vf.eval(k, Q.points);
            const auto nb = static_cast<Eigen::Index>(Vf.n_basis());
            for (std::size_t q = 0; q < Q.size(); ++q) {
                const double pw = data.p_out(Q.points[q], t) * Q.weights[q];
                for (int b = 0; b < Dim; ++b)
                    L.F_f.segment(Vf.dof(b, k, 0), nb) -= pw * F.normal[b] * Tb.values.row(static_cast<Eigen::Index>(q)).transpose();
            }
        }
    }
    return L;
}

/// Load counterpart of the skew boundary term of N_f on wall faces carrying
/// Dirichlet data: -ρ_f/2 ∫ (u*·n) g·v.
template <int Dim>
Vec advection_dirichlet_load(const DGSpace<Dim>& Vf, const MaterialParams& mp, const Vec& ustar,
                             const ProblemData<Dim>& data, double t)
{
    Vec out = Vec::Zero(static_cast<Eigen::Index>(Dim * Vf.n_scalar_dofs()));
    if (!data.u_D)
        return out;
    const auto& mesh = Vf.mesh();
    const auto nb = static_cast<Eigen::Index>(Vf.n_basis());
    for (const auto& F : mesh.faces) {
        if (F.kind != FaceKind::WallF)
            continue;
        const auto k = Vf.local_element(F.owners[0]);
        const auto Q = face_quadrature(mesh, F, Vf.quad_order() + 2);
        const auto Tb = Vf.eval(k, Q.points);
        for (std::size_t q = 0; q < Q.size(); ++q) {
            const auto qi = static_cast<Eigen::Index>(q);
            double un = 0.0;
            for (int c = 0; c < Dim; ++c)
                un += F.normal[c] * Tb.values.row(qi).dot(ustar.segment(Vf.dof(c, k, 0), nb));
            const Point<Dim> g = data.u_D(Q.points[q], t);
            for (int b = 0; b < Dim; ++b)
                out.segment(Vf.dof(b, k, 0), nb) -=
                    0.5 * mp.rho_f * un * g[b] * Q.weights[q] * Tb.values.row(qi).transpose();
        }
    }
    return out;
}

} // namespace polydg
