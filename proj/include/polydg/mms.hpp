#pragma once

#include <chrono>
#include <cmath>

#include "coupled_solver.hpp"
#include "norms.hpp"

namespace polydg {

/// Temporal envelopes of the manufactured solution.
struct Envelopes {
    static double a(double t) { return (2.0 * t - t * t) * std::exp(-t); }
    static double da(double t) { return (2.0 - 4.0 * t + t * t) * std::exp(-t); }
    static double b(double t) { return t * t * std::exp(-t); }
    static double db(double t) { return a(t); }
    static double ddb(double t) { return da(t); }
    static double c(double t) { return 1.0 - std::exp(-t); }
    static double dc(double t) { return std::exp(-t); }
};

/// Exact fields, data and parameters of a manufactured problem.
template <int Dim>
struct ManufacturedCase {
    int M = 5;
    double xi = 1.0;
    MaterialParams params;
    ExactSolution<Dim> exact;
    ProblemData<Dim> data;
    bool advective = false; ///< sources include ρ_f (u·∇)u
};

/// Parameters of the convergence test: all coefficients 1 except α_E = 0.5,
/// no exchange with the outside.
inline MaterialParams mms_params(double gamma = 1.0)
{
    auto p = unit_params();
    p.networks[0].beta_e = 0.0;
    p.gamma = gamma;
    return p;
}

namespace detail {

inline double pw(double x, int k) { return k < 0 ? 0.0 : std::pow(x, k); }

template <int Dim>
ExactField<Dim> field(int ncomp,
                      std::function<void(const Point<Dim>&, double, Eigen::VectorXd&, Eigen::MatrixXd&)> f)
{
    ExactField<Dim> e;
    e.ncomp = ncomp;
    e.eval = std::move(f);
    return e;
}

/// Fill the Dirichlet data from the exact fields.
template <int Dim>
void dirichlet_from_exact(ManufacturedCase<Dim>& mc)
{
    auto vec_of = [](const ExactField<Dim>& f) {
        return [f](const Point<Dim>& x, double t) {
            Eigen::VectorXd v;
            Eigen::MatrixXd g;
            f.eval(x, t, v, g);
            return Point<Dim>(v);
        };
    };
    auto scal_of = [](const ExactField<Dim>& f) {
        return [f](const Point<Dim>& x, double t) {
            Eigen::VectorXd v;
            Eigen::MatrixXd g;
            f.eval(x, t, v, g);
            return v[0];
        };
    };
    mc.data.d_D = vec_of(mc.exact.d);
    mc.data.d_D_dot = vec_of(mc.exact.d_t);
    mc.data.u_D = vec_of(mc.exact.u);
    mc.data.p_D = {scal_of(mc.exact.p[0])};
}

} // namespace detail

/// Two-dimensional manufactured solution on Ω_el = (0,1)², Ω_f = (0,1)×(-1,0):
///   u   = a(t) [y^M + M x^M y^{M-1}, ξ - M x^{M-1} y^M]
///   d   = b(t) [x^M y^M, x^M y^M + ξ]
///   p_E = p = c(t) y^M
/// with a = (2t - t²)e^{-t}, b = t²e^{-t}, c = 1 - e^{-t}. u is divergence
/// free and the interface conditions hold on y = 0 for M >= 3 with the
/// parameters of mms_params().
inline ManufacturedCase<2> mms_case_2d(int M = 5, double xi = 1.0, bool advective = false, double gamma = 1.0)
{
    if (M < 3)
        throw std::invalid_argument("mms_case_2d: M must be >= 3");
    using detail::pw;
    ManufacturedCase<2> mc;
    mc.M = M;
    mc.xi = xi;
    mc.advective = advective;
    mc.params = mms_params(gamma);
    const double Md = M;

    // P = x^M y^M and its derivatives.
    struct PDer {
        double P, Px, Py, Pxx, Pyy, Pxy;
    };
    auto Pd = [M, Md](double x, double y) {
        return PDer{pw(x, M) * pw(y, M),
                    Md * pw(x, M - 1) * pw(y, M),
                    Md * pw(x, M) * pw(y, M - 1),
                    Md * (Md - 1) * pw(x, M - 2) * pw(y, M),
                    Md * (Md - 1) * pw(x, M) * pw(y, M - 2),
                    Md * Md * pw(x, M - 1) * pw(y, M - 1)};
    };
    // Spatial part of u: value, gradient (row: component) and Laplacian.
    struct UDer {
        Point<2> v;
        Tensor<2> g;
        Point<2> lap;
    };
    auto Ud = [M, Md, xi](double x, double y) {
        UDer r;
        r.v = Point<2>(pw(y, M) + Md * pw(x, M) * pw(y, M - 1), xi - Md * pw(x, M - 1) * pw(y, M));
        r.g << Md * Md * pw(x, M - 1) * pw(y, M - 1), Md * pw(y, M - 1) + Md * (Md - 1) * pw(x, M) * pw(y, M - 2),
            -Md * (Md - 1) * pw(x, M - 2) * pw(y, M), -Md * Md * pw(x, M - 1) * pw(y, M - 1);
        r.lap = Point<2>(Md * Md * (Md - 1) * pw(x, M - 2) * pw(y, M - 1) + Md * (Md - 1) * pw(y, M - 2) +
                             Md * (Md - 1) * (Md - 2) * pw(x, M) * pw(y, M - 3),
                         -Md * (Md - 1) * (Md - 2) * pw(x, M - 3) * pw(y, M) -
                             Md * Md * (Md - 1) * pw(x, M - 1) * pw(y, M - 2));
        return r;
    };

    using E = Envelopes;
    mc.exact.u = detail::field<2>(2, [Ud](const Point<2>& x, double t, Eigen::VectorXd& v, Eigen::MatrixXd& g) {
        const auto r = Ud(x.x(), x.y());
        v = E::a(t) * r.v;
        g = E::a(t) * r.g;
    });
    auto d_spatial = [Pd, xi](const Point<2>& x, Eigen::VectorXd& v, Eigen::MatrixXd& g) {
        const auto p = Pd(x.x(), x.y());
        v = Eigen::Vector2d(p.P, p.P + xi);
        g.resize(2, 2);
        g << p.Px, p.Py, p.Px, p.Py;
    };
    mc.exact.d = detail::field<2>(2, [d_spatial](const Point<2>& x, double t, Eigen::VectorXd& v, Eigen::MatrixXd& g) {
        d_spatial(x, v, g);
        v *= E::b(t);
        g *= E::b(t);
    });
    mc.exact.d_t =
        detail::field<2>(2, [d_spatial](const Point<2>& x, double t, Eigen::VectorXd& v, Eigen::MatrixXd& g) {
            d_spatial(x, v, g);
            v *= E::db(t);
            g *= E::db(t);
        });
    auto p_field = detail::field<2>(1, [M, Md](const Point<2>& x, double t, Eigen::VectorXd& v, Eigen::MatrixXd& g) {
        v = Eigen::VectorXd::Constant(1, E::c(t) * pw(x.y(), M));
        g.resize(1, 2);
        g << 0.0, E::c(t) * Md * pw(x.y(), M - 1);
    });
    mc.exact.p_f = p_field;
    mc.exact.p = {p_field};

    const auto mp = mc.params;
    const auto& nw = mp.networks[0];
    mc.data.f_el = [=](const Point<2>& x, double t) {
        const auto p = Pd(x.x(), x.y());
        const double lap = p.Pxx + p.Pyy;
        Point<2> f(mp.rho_el * E::ddb(t) * p.P, mp.rho_el * E::ddb(t) * (p.P + xi));
        f -= E::b(t) * Point<2>(mp.mu_el * lap + (mp.mu_el + mp.lambda) * (p.Pxx + p.Pxy),
                                mp.mu_el * lap + (mp.mu_el + mp.lambda) * (p.Pxy + p.Pyy));
        f.y() += nw.alpha * E::c(t) * Md * pw(x.y(), M - 1);
        return f;
    };
    mc.data.g = {[=](const Point<2>& x, double t) {
        const auto p = Pd(x.x(), x.y());
        const double py = pw(x.y(), M);
        return nw.c * E::dc(t) * py + nw.alpha * E::db(t) * (p.Px + p.Py) -
               nw.k / nw.mu * E::c(t) * Md * (Md - 1) * pw(x.y(), M - 2) + nw.beta_e * E::c(t) * py;
    }};
    mc.data.f_f = [=](const Point<2>& x, double t) {
        const auto r = Ud(x.x(), x.y());
        Point<2> f = mp.rho_f * E::da(t) * r.v - mp.mu_f * E::a(t) * r.lap;
        f.y() += E::c(t) * Md * pw(x.y(), M - 1);
        if (advective)
            f += mp.rho_f * E::a(t) * E::a(t) * (r.g * r.v);
        return f;
    };
    detail::dirichlet_from_exact(mc);
    return mc;
}

/// The three-dimensional fields of the original verification test on
/// Ω_el = (0,1)³, Ω_f = (0,1)²×(-1,0):
///   u = a(t)[y^M z^M, x^M z^M, ξ], d = b(t)[y^M z^M, x^M z^M, -ξ],
///   p = p_E = c(t) z^M.
/// These satisfy the bulk equations with the generated sources but not the
/// normal-flux interface condition (u·n_f + ∂_t d·n_el = 2a ξ on z = 0), so
/// they only serve as a smoke test.
inline ManufacturedCase<3> mms_case_3d(int M = 5, double xi = 1.0, bool advective = false)
{
    if (M < 2)
        throw std::invalid_argument("mms_case_3d: M must be >= 2");
    using detail::pw;
    ManufacturedCase<3> mc;
    mc.M = M;
    mc.xi = xi;
    mc.advective = advective;
    mc.params = mms_params();
    const double Md = M;
    using E = Envelopes;
    // Q = [y^M z^M, x^M z^M] with gradient rows.
    struct QDer {
        Eigen::Vector3d v;
        Eigen::Matrix3d g;
        Eigen::Vector3d lap;
    };
    auto Qd = [M, Md](const Point<3>& x, double third) {
        QDer r;
        const double X = x.x(), Y = x.y(), Z = x.z();
        r.v << pw(Y, M) * pw(Z, M), pw(X, M) * pw(Z, M), third;
        r.g << 0.0, Md * pw(Y, M - 1) * pw(Z, M), Md * pw(Y, M) * pw(Z, M - 1), Md * pw(X, M - 1) * pw(Z, M), 0.0,
            Md * pw(X, M) * pw(Z, M - 1), 0.0, 0.0, 0.0;
        r.lap << Md * (Md - 1) * (pw(Y, M - 2) * pw(Z, M) + pw(Y, M) * pw(Z, M - 2)),
            Md * (Md - 1) * (pw(X, M - 2) * pw(Z, M) + pw(X, M) * pw(Z, M - 2)), 0.0;
        return r;
    };
    mc.exact.u = detail::field<3>(3, [Qd, xi](const Point<3>& x, double t, Eigen::VectorXd& v, Eigen::MatrixXd& g) {
        const auto r = Qd(x, xi);
        v = E::a(t) * r.v;
        g = E::a(t) * r.g;
    });
    mc.exact.d = detail::field<3>(3, [Qd, xi](const Point<3>& x, double t, Eigen::VectorXd& v, Eigen::MatrixXd& g) {
        const auto r = Qd(x, -xi);
        v = E::b(t) * r.v;
        g = E::b(t) * r.g;
    });
    mc.exact.d_t = detail::field<3>(3, [Qd, xi](const Point<3>& x, double t, Eigen::VectorXd& v, Eigen::MatrixXd& g) {
        const auto r = Qd(x, -xi);
        v = E::db(t) * r.v;
        g = E::db(t) * r.g;
    });
    auto p_field = detail::field<3>(1, [M, Md](const Point<3>& x, double t, Eigen::VectorXd& v, Eigen::MatrixXd& g) {
        v = Eigen::VectorXd::Constant(1, E::c(t) * pw(x.z(), M));
        g.resize(1, 3);
        g << 0.0, 0.0, E::c(t) * Md * pw(x.z(), M - 1);
    });
    mc.exact.p_f = p_field;
    mc.exact.p = {p_field};
    const auto mp = mc.params;
    const auto& nw = mp.networks[0];
    // Both vector fields are divergence free, so -div σ = -μ Δd and
    // -div τ = -μ_f Δu.
    mc.data.f_el = [=](const Point<3>& x, double t) {
        const auto r = Qd(x, -xi);
        Point<3> f = mp.rho_el * E::ddb(t) * r.v - mp.mu_el * E::b(t) * r.lap;
        f.z() += nw.alpha * E::c(t) * Md * pw(x.z(), M - 1);
        return f;
    };
    mc.data.g = {[=](const Point<3>& x, double t) {
        const double pz = pw(x.z(), M);
        return nw.c * E::dc(t) * pz - nw.k / nw.mu * E::c(t) * Md * (Md - 1) * pw(x.z(), M - 2) +
               nw.beta_e * E::c(t) * pz;
    }};
    mc.data.f_f = [=](const Point<3>& x, double t) {
        const auto r = Qd(x, xi);
        Point<3> f = mp.rho_f * E::da(t) * r.v - mp.mu_f * E::a(t) * r.lap;
        f.z() += E::c(t) * Md * pw(x.z(), M - 1);
        if (advective)
            f += mp.rho_f * E::a(t) * E::a(t) * (r.g * r.v);
        return f;
    };
    detail::dirichlet_from_exact(mc);
    return mc;
}

/// Project the exact fields at time t onto the solver's spaces.
template <int Dim>
SystemState project_exact(const CoupledSolver<Dim>& s, const ManufacturedCase<Dim>& mc, double t)
{
    auto proj = [t](const DGSpace<Dim>& V, const ExactField<Dim>& f) {
        return V.project(
            [&](const Point<Dim>& x) {
                Eigen::VectorXd v;
                Eigen::MatrixXd g;
                f.eval(x, t, v, g);
                return v;
            },
            f.ncomp);
    };
    std::vector<Vec> P;
    for (const auto& p : mc.exact.p)
        P.push_back(proj(s.space_el(), p));
    return s.initial_state(t, proj(s.space_el(), mc.exact.d), proj(s.space_el(), mc.exact.d_t), std::move(P),
                           proj(s.space_f(), mc.exact.u), proj(s.space_f(), mc.exact.p_f));
}

struct MmsRun {
    double h = 0.0;
    std::size_t dofs = 0;
    int degree = 0;
    double err_abs = 0.0;
    double norm_exact = 0.0;
    double err_rel = 0.0;
    double seconds = 0.0;
};

/// Run `steps` steps from the projected exact state at t = 0 and return the
/// relative energy-norm error at the final time.
template <int Dim>
MmsRun run_mms(const PolyMesh<Dim>& mesh, int degree, const ManufacturedCase<Dim>& mc, double dt, int steps,
               FlowMode mode = FlowMode::stokes, PenaltyConfig pc = {}, AssemblyOptions opt = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    TimeScheme ts;
    ts.dt = dt;
    CoupledSolver<Dim> solver(mesh, degree, mc.params, pc, ts, mode, mc.data, opt);
    auto st = project_exact(solver, mc, 0.0);
    EnergyNorm<Dim> err(solver.space_el(), solver.space_f(), solver.params(), solver.penalties(), &mc.exact);
    EnergyNorm<Dim> ref(solver.space_el(), solver.space_f(), solver.params(), solver.penalties(), &mc.exact, true);
    auto record = [&] {
        err.add(st.t, st.D, st.Z, st.P, st.U, st.Pf);
        ref.add(st.t, st.D, st.Z, st.P, st.U, st.Pf);
    };
    record();
    for (int n = 0; n < steps; ++n) {
        solver.advance(st);
        record();
    }
    MmsRun r;
    r.degree = degree;
    r.dofs = solver.n_dofs();
    double h = 0.0;
    for (const auto& K : mesh.elements)
        h = std::max(h, K.diameter);
    r.h = h;
    r.err_abs = err.report().total();
    r.norm_exact = ref.report().total();
    if (!(r.norm_exact > 0.0))
        throw std::runtime_error("run_mms: exact solution has zero energy norm");
    r.err_rel = r.err_abs / r.norm_exact;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

/// Least-squares slope of log(err) against log(h).
inline double fitted_slope(const std::vector<double>& h, const std::vector<double>& err)
{
    if (h.size() != err.size() || h.size() < 2)
        throw std::invalid_argument("fitted_slope: need at least two matching samples");
    const auto n = static_cast<double>(h.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double X = std::log(h[i]), Y = std::log(err[i]);
        sx += X;
        sy += Y;
        sxx += X * X;
        sxy += X * Y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct ConvergenceRow {
    MmsRun run;
    double rate = std::nan(""); ///< against the previous row of the same degree
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;
    std::map<int, double> slopes;
    std::vector<std::string> warnings;
};

/// Spatial convergence study on the stacked unit squares with n x n cells
/// per subdomain for each n in `cells`.
inline ConvergenceResult convergence_study(const ManufacturedCase<2>& mc, const std::vector<int>& degrees,
                                           const std::vector<int>& cells, double dt = 1e-3, int steps = 5,
                                           FlowMode mode = FlowMode::stokes, PenaltyConfig pc = {})
{
    ConvergenceResult out;
    for (int m : degrees) {
        std::vector<double> hs, es;
        for (int n : cells) {
            const auto mesh = build_structured_mesh(n, n, stacked_unit_squares());
            ConvergenceRow row;
            row.run = run_mms(mesh, m, mc, dt, steps, mode, pc);
            if (!hs.empty()) {
                row.rate = std::log(es.back() / row.run.err_rel) / std::log(hs.back() / row.run.h);
                if (row.run.err_rel >= es.back())
                    out.warnings.push_back("non-monotone error sequence for m=" + std::to_string(m));
            }
            hs.push_back(row.run.h);
            es.push_back(row.run.err_rel);
            out.rows.push_back(row);
        }
        out.slopes[m] = fitted_slope(hs, es);
    }
    return out;
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceResult& res)
{
    os << "m,h,dofs,err,rate\n";
    os.precision(17);
    for (const auto& r : res.rows) {
        os << r.run.degree << ',' << r.run.h << ',' << r.run.dofs << ',' << r.run.err_rel << ',';
        if (!std::isnan(r.rate))
            os << r.rate;
        os << '\n';
    }
}

struct TemporalStudy {
    std::vector<double> dt, err;
    double slope = 0.0;
};

/// Error at a fixed final time T for each time step in `dts` on a fixed mesh.
inline TemporalStudy temporal_study(const ManufacturedCase<2>& mc, const PolyMesh<2>& mesh, int degree, double T,
                                    const std::vector<double>& dts, FlowMode mode = FlowMode::stokes)
{
    TemporalStudy out;
    for (double dt : dts) {
        const auto steps = static_cast<int>(std::llround(T / dt));
        if (std::abs(steps * dt - T) > 1e-12 * T)
            throw std::invalid_argument("temporal_study: dt must divide T");
        out.dt.push_back(dt);
        out.err.push_back(run_mms(mesh, degree, mc, dt, steps, mode).err_rel);
    }
    out.slope = fitted_slope(out.dt, out.err);
    return out;
}

} // namespace polydg
