#pragma once

#include <memory>

#include "forms.hpp"
#include "linear_solver.hpp"

namespace polydg {

enum class FlowMode { stokes, navier_stokes };

inline std::string_view to_string(FlowMode m) { return m == FlowMode::stokes ? "stokes" : "navier-stokes"; }

inline FlowMode parse_flow_mode(std::string_view s)
{
    if (s == "stokes")
        return FlowMode::stokes;
    if (s == "navier-stokes" || s == "navier_stokes" || s == "ns")
        return FlowMode::navier_stokes;
    throw std::invalid_argument("unknown flow mode '" + std::string(s) + "'");
}

struct TimeScheme {
    double dt = 1e-3;
    double beta = 0.25; ///< Newmark beta
    double gamma = 0.5; ///< Newmark gamma
    double theta = 0.5;

    void validate() const
    {
        if (!(dt > 0.0))
            throw std::invalid_argument("time step must be > 0");
        if (!(beta > 0.0 && beta <= 0.5))
            throw std::invalid_argument("Newmark beta must lie in (0, 1/2]");
        if (!(gamma >= 0.5 && gamma <= 1.0))
            throw std::invalid_argument("Newmark gamma must lie in [1/2, 1]");
        if (!(theta >= 0.5 && theta <= 1.0))
            throw std::invalid_argument("theta must lie in [1/2, 1]");
    }
};

inline Vec extrapolate_velocity(const Vec& u_n, const Vec& u_nm1) { return 1.5 * u_n - 0.5 * u_nm1; }

struct SystemState {
    std::size_t n = 0;
    double t = 0.0;
    Vec D, Z, A;          ///< displacement, velocity, acceleration
    std::vector<Vec> P;   ///< network pressures
    Vec U, Pf;            ///< fluid velocity and pressure
    Vec U_prev;           ///< fluid velocity at the previous step
};

/// Offsets of the blocks of X = [D; Z; A; P_1..P_J; U; P].
struct Layout {
    std::size_t nd = 0, np = 0, nu = 0, nq = 0, J = 0;
    [[nodiscard]] std::size_t D() const { return 0; }
    [[nodiscard]] std::size_t Z() const { return nd; }
    [[nodiscard]] std::size_t A() const { return 2 * nd; }
    [[nodiscard]] std::size_t P(std::size_t j) const { return 3 * nd + j * np; }
    [[nodiscard]] std::size_t U() const { return 3 * nd + J * np; }
    [[nodiscard]] std::size_t Pf() const { return U() + nu; }
    [[nodiscard]] std::size_t size() const { return Pf() + nq; }
};

namespace detail {

struct BlockBuilder {
    Triplets t;
    void add(const SpMat& m, std::size_t r0, std::size_t c0, double s = 1.0)
    {
        if (s == 0.0)
            return;
        for (int k = 0; k < m.outerSize(); ++k)
            for (SpMat::InnerIterator it(m, k); it; ++it)
                t.emplace_back(static_cast<int>(r0 + it.row()), static_cast<int>(c0 + it.col()), s * it.value());
    }
    void add_identity(std::size_t n, std::size_t r0, std::size_t c0, double s)
    {
        for (std::size_t i = 0; i < n; ++i)
            t.emplace_back(static_cast<int>(r0 + i), static_cast<int>(c0 + i), s);
    }
};

} // namespace detail

/// Fully discrete coupled MPE / (Navier-)Stokes problem: Newmark for the
/// solid momentum, theta-method for everything else.
template <int Dim>
class CoupledSolver {
public:
    CoupledSolver(const PolyMesh<Dim>& mesh, int degree, MaterialParams mp, PenaltyConfig pc, TimeScheme ts,
                  FlowMode mode, ProblemData<Dim> data, AssemblyOptions opt = {})
        : mesh_(mesh), el_(mesh, Subdomain::el, degree), f_(mesh, Subdomain::f, degree), mp_(std::move(mp)),
          pc_(std::move(pc)), ts_(ts), mode_(mode), data_(std::move(data)), opt_(opt)
    {
        mp_.validate();
        pc_.validate(mp_.n_networks());
        ts_.validate();
        poro_ = assemble_poroelastic(el_, mp_, pc_, opt_);
        fluid_ = assemble_fluid(f_, mp_, pc_, opt_);
        iface_ = assemble_interface(el_, f_, mp_);
        lay_.nd = Dim * el_.n_scalar_dofs();
        lay_.np = el_.n_scalar_dofs();
        lay_.nu = Dim * f_.n_scalar_dofs();
        lay_.nq = f_.n_scalar_dofs();
        lay_.J = mp_.n_networks();
        e_ = mp_.E;
    }

    [[nodiscard]] const DGSpace<Dim>& space_el() const { return el_; }
    [[nodiscard]] const DGSpace<Dim>& space_f() const { return f_; }
    [[nodiscard]] const Layout& layout() const { return lay_; }
    [[nodiscard]] const PoroBlocks& poro() const { return poro_; }
    [[nodiscard]] const FluidBlocks& fluid() const { return fluid_; }
    [[nodiscard]] const InterfaceBlocks& interface() const { return iface_; }
    [[nodiscard]] const MaterialParams& params() const { return mp_; }
    [[nodiscard]] const PenaltyConfig& penalties() const { return pc_; }
    [[nodiscard]] const TimeScheme& scheme() const { return ts_; }
    [[nodiscard]] FlowMode mode() const { return mode_; }
    [[nodiscard]] const ProblemData<Dim>& data() const { return data_; }
    [[nodiscard]] std::size_t n_dofs() const { return lay_.size(); }

    [[nodiscard]] SystemState zero_state(double t0 = 0.0) const
    {
        SystemState s;
        s.t = t0;
        s.D = s.Z = s.A = Vec::Zero(static_cast<Eigen::Index>(lay_.nd));
        s.P.assign(lay_.J, Vec::Zero(static_cast<Eigen::Index>(lay_.np)));
        s.U = s.U_prev = Vec::Zero(static_cast<Eigen::Index>(lay_.nu));
        s.Pf = Vec::Zero(static_cast<Eigen::Index>(lay_.nq));
        return s;
    }

    /// Initial state from given coefficient vectors; the acceleration is
    /// obtained from the solid momentum equation at t0.
    [[nodiscard]] SystemState initial_state(double t0, Vec D, Vec Z, std::vector<Vec> P, Vec U, Vec Pf) const
    {
        SystemState s;
        s.t = t0;
        s.D = std::move(D);
        s.Z = std::move(Z);
        s.P = std::move(P);
        s.U = std::move(U);
        s.U_prev = s.U;
        s.Pf = std::move(Pf);
        check_sizes(s);
        const auto L = loads(t0);
        Vec r = L.F_el - poro_.A_el * s.D - iface_.G_ee * s.Z + iface_.G_ef * s.U;
        for (std::size_t j = 0; j < lay_.J; ++j)
            r -= poro_.B[j].transpose() * s.P[j];
        r -= iface_.J_el.transpose() * s.P[e_];
        s.A = r / mp_.rho_el; // unit mass matrix
        return s;
    }

    [[nodiscard]] SystemState initial_state_zero_fields(double t0 = 0.0) const
    {
        auto z = zero_state(t0);
        return initial_state(t0, z.D, z.Z, z.P, z.U, z.Pf);
    }

    [[nodiscard]] Loads loads(double t) const { return assemble_loads(el_, f_, mp_, pc_, data_, t); }

    [[nodiscard]] Vec pack(const SystemState& s) const
    {
        Vec x(static_cast<Eigen::Index>(lay_.size()));
        x.segment(lay_.D(), lay_.nd) = s.D;
        x.segment(lay_.Z(), lay_.nd) = s.Z;
        x.segment(lay_.A(), lay_.nd) = s.A;
        for (std::size_t j = 0; j < lay_.J; ++j)
            x.segment(lay_.P(j), lay_.np) = s.P[j];
        x.segment(lay_.U(), lay_.nu) = s.U;
        x.segment(lay_.Pf(), lay_.nq) = s.Pf;
        return x;
    }

    void unpack(const Vec& x, SystemState& s) const
    {
        s.D = x.segment(lay_.D(), lay_.nd);
        s.Z = x.segment(lay_.Z(), lay_.nd);
        s.A = x.segment(lay_.A(), lay_.nd);
        s.P.resize(lay_.J);
        for (std::size_t j = 0; j < lay_.J; ++j)
            s.P[j] = x.segment(lay_.P(j), lay_.np);
        s.U = x.segment(lay_.U(), lay_.nu);
        s.Pf = x.segment(lay_.Pf(), lay_.nq);
    }

    /// Advection matrix for the advecting field u* (zero in Stokes mode).
    [[nodiscard]] SpMat advection(const Vec& ustar) const
    {
        if (mode_ == FlowMode::stokes)
            return SpMat(static_cast<Eigen::Index>(lay_.nu), static_cast<Eigen::Index>(lay_.nu));
        return assemble_advection(f_, mp_, ustar, opt_);
    }

    /// Left-hand side A1 for advection matrix N and backflow matrix BW.
    [[nodiscard]] SpMat lhs(const SpMat& N, const SpMat& BW) const
    {
        const double dt = ts_.dt, th = ts_.theta, b = ts_.beta, g = ts_.gamma;
        detail::BlockBuilder m;
        const auto& L = lay_;
        // Newmark rows.
        m.add_identity(L.nd, L.D(), L.D(), 1.0);
        m.add_identity(L.nd, L.D(), L.A(), -b * dt * dt);
        m.add_identity(L.nd, L.Z(), L.Z(), 1.0);
        m.add_identity(L.nd, L.Z(), L.A(), -g * dt);
        // Solid momentum at the new time.
        m.add(poro_.M_vec, L.A(), L.A(), mp_.rho_el);
        m.add(poro_.A_el, L.A(), L.D());
        for (std::size_t j = 0; j < L.J; ++j)
            m.add(SpMat(poro_.B[j].transpose()), L.A(), L.P(j));
        m.add(SpMat(iface_.J_el.transpose()), L.A(), L.P(e_));
        m.add(iface_.G_ee, L.A(), L.Z());
        m.add(iface_.G_ef, L.A(), L.U(), -1.0);
        // Network mass balances.
        for (std::size_t j = 0; j < L.J; ++j) {
            m.add(poro_.M_scalar, L.P(j), L.P(j), mp_.networks[j].c);
            network_terms(m, j, dt * th);
        }
        // Fluid momentum and continuity.
        m.add(fluid_.M_vec, L.U(), L.U(), mp_.rho_f);
        fluid_terms(m, N, dt * th);
        m.add(BW, L.U(), L.U(), -dt);
        return to_sparse(L.size(), L.size(), m.t);
    }

    /// Right-hand side operator A2 (acting on the old state).
    [[nodiscard]] SpMat rhs_matrix(const SpMat& N) const
    {
        const double dt = ts_.dt, th = ts_.theta, b = ts_.beta, g = ts_.gamma;
        detail::BlockBuilder m;
        const auto& L = lay_;
        m.add_identity(L.nd, L.D(), L.D(), 1.0);
        m.add_identity(L.nd, L.D(), L.Z(), dt);
        m.add_identity(L.nd, L.D(), L.A(), dt * dt * (0.5 - b));
        m.add_identity(L.nd, L.Z(), L.Z(), 1.0);
        m.add_identity(L.nd, L.Z(), L.A(), dt * (1.0 - g));
        for (std::size_t j = 0; j < L.J; ++j) {
            m.add(poro_.M_scalar, L.P(j), L.P(j), mp_.networks[j].c);
            network_terms(m, j, -dt * (1.0 - th));
        }
        m.add(fluid_.M_vec, L.U(), L.U(), mp_.rho_f);
        fluid_terms(m, N, -dt * (1.0 - th));
        return to_sparse(L.size(), L.size(), m.t);
    }

    /// Load part of the right-hand side for a step t_old -> t_new.
    [[nodiscard]] Vec rhs_loads(const Loads& old_l, const Loads& new_l, const Vec& adv_old, const Vec& adv_new) const
    {
        const double dt = ts_.dt, th = ts_.theta;
        Vec f = Vec::Zero(static_cast<Eigen::Index>(lay_.size()));
        f.segment(lay_.A(), lay_.nd) = new_l.F_el;
        for (std::size_t j = 0; j < lay_.J; ++j)
            f.segment(lay_.P(j), lay_.np) = dt * (th * new_l.F_p[j] + (1.0 - th) * old_l.F_p[j]);
        f.segment(lay_.U(), lay_.nu) =
            dt * (th * (new_l.F_f + adv_new) + (1.0 - th) * (old_l.F_f + adv_old));
        f.segment(lay_.Pf(), lay_.nq) = dt * (th * new_l.F_c + (1.0 - th) * old_l.F_c);
        return f;
    }

    /// One time step in place.
    void advance(SystemState& s)
    {
        check_sizes(s);
        const double t_new = s.t + ts_.dt;
        Vec ustar;
        SpMat N, BW;
        if (mode_ == FlowMode::navier_stokes) {
            ustar = extrapolate_velocity(s.U, s.n == 0 ? s.U : s.U_prev);
            N = advection(ustar);
            BW = assemble_backflow(f_, mp_, s.U);
        } else {
            N = SpMat(static_cast<Eigen::Index>(lay_.nu), static_cast<Eigen::Index>(lay_.nu));
            BW = N;
        }
        if (mode_ == FlowMode::navier_stokes || !cached_) {
            solver_ = std::make_unique<LinearSolver>(lhs(N, BW));
            a2_ = rhs_matrix(N);
            cached_ = mode_ == FlowMode::stokes;
        }
        if (!old_loads_ || old_loads_t_ != s.t)
            old_loads_ = loads(s.t);
        auto new_l = loads(t_new);
        Vec adv_old = Vec::Zero(static_cast<Eigen::Index>(lay_.nu)), adv_new = adv_old;
        if (mode_ == FlowMode::navier_stokes) {
            adv_old = advection_dirichlet_load(f_, mp_, ustar, data_, s.t);
            adv_new = advection_dirichlet_load(f_, mp_, ustar, data_, t_new);
        }
        const Vec rhs = a2_ * pack(s) + rhs_loads(*old_loads_, new_l, adv_old, adv_new);
        const Vec x = solver_->solve(rhs);
        s.U_prev = s.U;
        unpack(x, s);
        s.t = t_new;
        ++s.n;
        old_loads_ = std::move(new_l);
        old_loads_t_ = t_new;
    }

    /// Instantaneous discrete energy
    /// rho_el |Z|^2 + D^T A_el D + sum c_j |P_j|^2 + rho_f |U|^2.
    [[nodiscard]] double energy(const SystemState& s) const
    {
        double e = mp_.rho_el * s.Z.dot(poro_.M_vec * s.Z) + s.D.dot(poro_.A_el * s.D) +
                   mp_.rho_f * s.U.dot(fluid_.M_vec * s.U);
        for (std::size_t j = 0; j < lay_.J; ++j)
            e += mp_.networks[j].c * s.P[j].dot(poro_.M_scalar * s.P[j]);
        return e;
    }

    /// Dissipation rate of the averaged state (Stokes part): sum of
    /// A_j + C, A_f, S and the friction form.
    [[nodiscard]] double dissipation(const SystemState& s) const
    {
        double d = s.U.dot(fluid_.A_f * s.U) + s.Pf.dot(fluid_.S * s.Pf);
        for (std::size_t j = 0; j < lay_.J; ++j) {
            d += s.P[j].dot(poro_.A[j] * s.P[j]);
            for (std::size_t k = 0; k < lay_.J; ++k)
                d += s.P[j].dot(poro_.C(j, k) * s.P[k]);
        }
        d += s.Z.dot(iface_.G_ee * s.Z) - 2.0 * s.Z.dot(iface_.G_ef * s.U) + s.U.dot(iface_.G_ff * s.U);
        return d;
    }

    /// Drop cached operators (after changing parameters in place).
    void reset_cache()
    {
        cached_ = false;
        old_loads_.reset();
    }

private:
    void check_sizes(const SystemState& s) const
    {
        auto bad = [](const Vec& v, std::size_t n) { return static_cast<std::size_t>(v.size()) != n; };
        bool wrong = bad(s.D, lay_.nd) || bad(s.Z, lay_.nd) || bad(s.U, lay_.nu) || bad(s.Pf, lay_.nq) ||
                     s.P.size() != lay_.J;
        for (const auto& p : s.P)
            wrong = wrong || bad(p, lay_.np);
        if (wrong)
            throw std::invalid_argument("SystemState: block sizes do not match the discrete spaces");
    }

    void network_terms(detail::BlockBuilder& m, std::size_t j, double s) const
    {
        const auto& L = lay_;
        m.add(poro_.A[j], L.P(j), L.P(j), s);
        for (std::size_t k = 0; k < L.J; ++k)
            m.add(poro_.C(j, k), L.P(j), L.P(k), s);
        m.add(poro_.B[j], L.P(j), L.Z(), -s);
        if (j == e_) {
            m.add(iface_.J_el, L.P(j), L.Z(), -s);
            m.add(iface_.J_f, L.P(j), L.U(), -s);
        }
    }

    void fluid_terms(detail::BlockBuilder& m, const SpMat& N, double s) const
    {
        const auto& L = lay_;
        m.add(fluid_.A_f, L.U(), L.U(), s);
        m.add(N, L.U(), L.U(), s);
        m.add(iface_.G_ff, L.U(), L.U(), s);
        m.add(SpMat(fluid_.B_f.transpose()), L.U(), L.Pf(), s);
        m.add(SpMat(iface_.J_f.transpose()), L.U(), L.P(e_), s);
        m.add(iface_.G_fe, L.U(), L.Z(), -s);
        m.add(fluid_.B_f, L.Pf(), L.U(), -s);
        m.add(fluid_.S, L.Pf(), L.Pf(), s);
    }

    const PolyMesh<Dim>& mesh_;
    DGSpace<Dim> el_, f_;
    MaterialParams mp_;
    PenaltyConfig pc_;
    TimeScheme ts_;
    FlowMode mode_;
    ProblemData<Dim> data_;
    AssemblyOptions opt_;
    PoroBlocks poro_;
    FluidBlocks fluid_;
    InterfaceBlocks iface_;
    Layout lay_;
    std::size_t e_ = 0;

    std::unique_ptr<LinearSolver> solver_;
    SpMat a2_;
    bool cached_ = false;
    std::optional<Loads> old_loads_;
    double old_loads_t_ = 0.0;
};

// ---------------------------------------------------------------------------
// Derived quantities.

/// Linear functional v -> ∫_faces v·n over faces of `kind` (normal: the face
/// normal, i.e. outward from owners[0]); marker < 0 selects all markers.
template <int Dim>
Vec flux_functional(const DGSpace<Dim>& V, FaceKind kind, int marker = -1)
{
    const auto& mesh = V.mesh();
    Vec out = Vec::Zero(static_cast<Eigen::Index>(Dim * V.n_scalar_dofs()));
    const auto nb = static_cast<Eigen::Index>(V.n_basis());
    for (const auto& F : mesh.faces) {
        if (F.kind != kind || (marker >= 0 && F.marker != marker))
            continue;
        int side = -1;
        for (int s = 0; s < 2; ++s)
            if (F.owners[s] != npos && mesh.elements[F.owners[s]].subdomain == V.subdomain())
                side = s;
        if (side < 0)
            continue;
        const auto k = V.local_element(F.owners[side]);
        const auto Q = face_quadrature(mesh, F, V.quad_order());
        const auto T = V.eval(k, Q.points);
        const Eigen::VectorXd w = local::weights(Q.weights);
        const Eigen::VectorXd m = T.values.transpose() * w;
        for (int c = 0; c < Dim; ++c)
            out.segment(V.dof(c, k, 0), nb) += F.normal[c] * m;
    }
    return out;
}

/// Linear functional q -> ∫_faces q over faces of `kind` on the space's side.
template <int Dim>
Vec trace_functional(const DGSpace<Dim>& V, FaceKind kind, int marker = -1)
{
    const auto& mesh = V.mesh();
    Vec out = Vec::Zero(static_cast<Eigen::Index>(V.n_scalar_dofs()));
    const auto nb = static_cast<Eigen::Index>(V.n_basis());
    for (const auto& F : mesh.faces) {
        if (F.kind != kind || (marker >= 0 && F.marker != marker))
            continue;
        for (int s = 0; s < 2; ++s) {
            if (F.owners[s] == npos || mesh.elements[F.owners[s]].subdomain != V.subdomain())
                continue;
            const auto k = V.local_element(F.owners[s]);
            const auto Q = face_quadrature(mesh, F, V.quad_order());
            const auto T = V.eval(k, Q.points);
            out.segment(V.dof(0, k, 0), nb) += T.values.transpose() * local::weights(Q.weights);
        }
    }
    return out;
}

template <int Dim>
double face_measure(const PolyMesh<Dim>& mesh, FaceKind kind, int marker = -1)
{
    double m = 0.0;
    for (const auto& F : mesh.faces)
        if (F.kind == kind && (marker < 0 || F.marker == marker))
            m += F.measure;
    return m;
}

/// Q_out = ∫_out u·n, Q_Σ = ∫_Σ u·n_el, P_Σ = mean of p over Σ.
template <int Dim>
struct Monitors {
    Vec q_out, q_sigma, p_sigma;

    Monitors(const DGSpace<Dim>& Vf, int sigma_marker = -1)
    {
        q_out = flux_functional(Vf, FaceKind::OutletF);
        q_sigma = flux_functional(Vf, FaceKind::Interface, sigma_marker);
        const double area = face_measure(Vf.mesh(), FaceKind::Interface, sigma_marker);
        p_sigma = trace_functional(Vf, FaceKind::Interface, sigma_marker) / (area > 0.0 ? area : 1.0);
    }
};

} // namespace polydg
