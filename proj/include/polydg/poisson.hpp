#pragma once

#include <Eigen/SparseCholesky>

#include <chrono>
#include <cmath>
#include <future>
#include <numbers>
#include <random>

#include "agglomerate.hpp"
#include "forms.hpp"
#include "linear_solver.hpp"

namespace polydg {

/// -Δu = f with u = g on the whole boundary.
template <int Dim>
struct PoissonProblem {
    std::function<double(const Point<Dim>&)> u;
    std::function<Point<Dim>(const Point<Dim>&)> grad_u;
    std::function<double(const Point<Dim>&)> f;
};

/// u = Π sin(π x_d).
template <int Dim>
PoissonProblem<Dim> sine_problem()
{
    using std::numbers::pi;
    PoissonProblem<Dim> p;
    p.u = [](const Point<Dim>& x) {
        double v = 1.0;
        for (int d = 0; d < Dim; ++d)
            v *= std::sin(pi * x[d]);
        return v;
    };
    p.grad_u = [](const Point<Dim>& x) {
        Point<Dim> g;
        for (int c = 0; c < Dim; ++c) {
            g[c] = pi * std::cos(pi * x[c]);
            for (int d = 0; d < Dim; ++d)
                if (d != c)
                    g[c] *= std::sin(pi * x[d]);
        }
        return g;
    };
    p.f = [u = p.u](const Point<Dim>& x) { return Dim * pi * pi * u(x); };
    return p;
}

struct PoissonSystem {
    SpMat matrix;
    Vec rhs;
};

/// Penalty on face F: η̄ m² / {h}_H.
template <int Dim>
double poisson_penalty(const PolyMesh<Dim>& mesh, const Face<Dim>& F, double eta_bar, int degree)
{
    return eta_bar * degree * degree / harmonic_h(mesh, F);
}

/// SIP discretization on a single-subdomain mesh (all elements in `el`);
/// every boundary face carries the Dirichlet datum.
template <int Dim>
PoissonSystem assemble_poisson(const DGSpace<Dim>& V, double eta_bar, const PoissonProblem<Dim>& prob)
{
    const auto& mesh = V.mesh();
    if (!mesh.elements_of(Subdomain::f).empty())
        throw std::invalid_argument("assemble_poisson: mesh must have a single subdomain");
    if (!(eta_bar > 0.0))
        throw std::invalid_argument("assemble_poisson: penalty must be positive");
    const auto N = V.n_scalar_dofs();
    Triplets T;
    Vec rhs = Vec::Zero(static_cast<Eigen::Index>(N));
    for (std::size_t k = 0; k < V.n_elements(); ++k) {
        const auto Q = V.quadrature(k);
        const auto B = V.eval(k, Q.points);
        const auto w = local::weights(Q.weights);
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(V.n_basis(), V.n_basis());
        for (int c = 0; c < Dim; ++c)
            L += B.grads[c].transpose() * w.asDiagonal() * B.grads[c];
        const auto d = local::dofs(V, k, 1);
        scatter(T, d, d, L);
        Eigen::VectorXd fq(static_cast<Eigen::Index>(Q.size()));
        for (std::size_t q = 0; q < Q.size(); ++q)
            fq[static_cast<Eigen::Index>(q)] = Q.weights[q] * prob.f(Q.points[q]);
        scatter(rhs, d, B.values.transpose() * fq);
    }
    for (const auto& F : mesh.faces) {
        if (F.kind == FaceKind::Interface)
            continue;
        const double pen = poisson_penalty(mesh, F, eta_bar, V.degree());
        const auto Q = face_quadrature(mesh, F, V.quad_order());
        const auto w = local::weights(Q.weights);
        const auto sides = local::sides_in(V, F);
        const double om = sides.size() == 2 ? 0.5 : 1.0;
        std::vector<BasisTable<Dim>> tabs;
        for (const auto& sd : sides)
            tabs.push_back(V.eval(sd.second, Q.points));
        for (std::size_t s = 0; s < sides.size(); ++s)
            for (std::size_t t = 0; t < sides.size(); ++t)
                scatter(T, local::dofs(V, sides[s].second, 1), local::dofs(V, sides[t].second, 1),
                        local::diffusion_face<Dim>(tabs[s], tabs[t], w, F.normal_from(sides[s].first),
                                                   F.normal_from(sides[t].first), om, om, 1.0, pen));
        if (sides.size() == 1) {
            Eigen::VectorXd g(static_cast<Eigen::Index>(Q.size()));
            for (std::size_t q = 0; q < Q.size(); ++q)
                g[static_cast<Eigen::Index>(q)] = Q.weights[q] * prob.u(Q.points[q]);
            const auto n = F.normal_from(sides[0].first);
            scatter(rhs, local::dofs(V, sides[0].second, 1),
                    pen * tabs[0].values.transpose() * g - local::normal_derivative<Dim>(tabs[0], n).transpose() * g);
        }
    }
    return {to_sparse(N, N, T), rhs};
}

/// Sparse Cholesky solve of the SPD Poisson system.
inline Vec solve_poisson(const PoissonSystem& sys)
{
    Eigen::SimplicialLDLT<SpMat> ldlt(sys.matrix);
    if (ldlt.info() != Eigen::Success)
        throw SolverError("solve_poisson: factorization failed");
    Vec x = ldlt.solve(sys.rhs);
    if (ldlt.info() != Eigen::Success || !x.allFinite())
        throw SolverError("solve_poisson: solve failed");
    return x;
}

struct PoissonErrors {
    double l2 = 0.0;
    double h1 = 0.0; ///< broken gradient seminorm
};

template <int Dim>
PoissonErrors poisson_errors(const DGSpace<Dim>& V, const Vec& x, const PoissonProblem<Dim>& prob)
{
    double l2 = 0.0, h1 = 0.0;
    for (std::size_t k = 0; k < V.n_elements(); ++k) {
        const auto Q = V.quadrature(k, V.quad_order() + 2);
        const auto B = V.eval(k, Q.points);
        const auto c = x.segment(static_cast<Eigen::Index>(V.dof(0, k, 0)), static_cast<Eigen::Index>(V.n_basis()));
        const Eigen::VectorXd vals = B.values * c;
        std::array<Eigen::VectorXd, Dim> g;
        for (int d = 0; d < Dim; ++d)
            g[d] = B.grads[d] * c;
        for (std::size_t q = 0; q < Q.size(); ++q) {
            const auto iq = static_cast<Eigen::Index>(q);
            l2 += Q.weights[q] * std::pow(prob.u(Q.points[q]) - vals[iq], 2);
            const Point<Dim> ge = prob.grad_u(Q.points[q]);
            for (int d = 0; d < Dim; ++d)
                h1 += Q.weights[q] * std::pow(ge[d] - g[d][iq], 2);
        }
    }
    return {std::sqrt(l2), std::sqrt(h1)};
}

// ---------------------------------------------------------------------------
// Benchmark.

/// `count` disjoint disks of diameter eps inside (0.1, 0.9)^2.
inline std::vector<Inclusion> random_inclusions(int count, double eps, unsigned seed)
{
    if (count < 0 || !(eps > 0.0) || eps >= 0.2)
        throw std::invalid_argument("random_inclusions: need count >= 0 and 0 < eps < 0.2");
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    std::vector<Inclusion> out;
    for (int tries = 0; static_cast<int>(out.size()) < count; ++tries) {
        if (tries > 100000)
            throw std::runtime_error("random_inclusions: could not place disjoint disks");
        const Point<2> c(u(rng), u(rng));
        bool ok = true;
        for (const auto& h : out)
            ok = ok && (c - h.center).norm() > 2.0 * eps;
        if (ok)
            out.push_back({c, 0.5 * eps});
    }
    return out;
}

/// Cells per side of the standard mesh resolving disks of diameter eps
/// (cell size eps/2).
inline int resolving_cells(double eps) { return static_cast<int>(std::ceil(2.0 / eps - 1e-9)); }

struct BenchRecord {
    std::string mesh_id;
    std::size_t elements = 0;
    int degree = 0;
    std::size_t dofs = 0;
    double e_l2 = 0.0;
    double e_h1 = 0.0;
    double t_assembly = 0.0;
    double t_solve = 0.0;
    bool timing_reliable = true;
};

struct BenchMesh {
    std::string id;
    PolyMesh<2> mesh;
};

struct BenchOptions {
    double eta_bar = 10.0;
    int repetitions = 3;
    bool parallel = false;
};

namespace detail {
inline double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
} // namespace detail

inline BenchRecord bench_one(const BenchMesh& bm, int degree, const PoissonProblem<2>& prob, const BenchOptions& opt)
{
    using clock = std::chrono::steady_clock;
    const int reps = std::max(1, opt.repetitions);
    std::vector<double> ta, ts;
    Vec x;
    std::optional<DGSpace<2>> V;
    for (int r = 0; r < reps; ++r) {
        auto t0 = clock::now();
        V.emplace(bm.mesh, Subdomain::el, degree);
        const auto sys = assemble_poisson(*V, opt.eta_bar, prob);
        auto t1 = clock::now();
        x = solve_poisson(sys);
        auto t2 = clock::now();
        ta.push_back(std::chrono::duration<double>(t1 - t0).count());
        ts.push_back(std::chrono::duration<double>(t2 - t1).count());
    }
    const auto err = poisson_errors(*V, x, prob);
    BenchRecord r;
    r.mesh_id = bm.id;
    r.elements = V->n_elements();
    r.degree = degree;
    r.dofs = V->n_scalar_dofs();
    r.e_l2 = err.l2;
    r.e_h1 = err.h1;
    r.t_assembly = detail::median(ta);
    r.t_solve = detail::median(ts);
    r.timing_reliable = !opt.parallel;
    return r;
}

/// Solve on every (mesh, degree) pair, in mesh-major order.
inline std::vector<BenchRecord> run_bench(const std::vector<BenchMesh>& meshes, const std::vector<int>& degrees,
                                          const PoissonProblem<2>& prob, const BenchOptions& opt = {})
{
    std::vector<std::pair<const BenchMesh*, int>> jobs;
    for (const auto& m : meshes)
        for (int d : degrees)
            jobs.emplace_back(&m, d);
    std::vector<BenchRecord> out(jobs.size());
    if (!opt.parallel) {
        for (std::size_t i = 0; i < jobs.size(); ++i)
            out[i] = bench_one(*jobs[i].first, jobs[i].second, prob, opt);
        return out;
    }
    std::vector<std::future<BenchRecord>> fut;
    for (const auto& j : jobs)
        fut.push_back(std::async(std::launch::async, [&prob, &opt, j] { return bench_one(*j.first, j.second, prob, opt); }));
    for (std::size_t i = 0; i < jobs.size(); ++i)
        out[i] = fut[i].get();
    return out;
}

struct InclusionBench {
    std::vector<Inclusion> holes;
    BenchMesh standard;
    std::vector<BenchMesh> agglomerated;
};

/// Fine Cartesian mesh resolving the inclusions plus agglomerates of it.
inline InclusionBench inclusion_bench_meshes(int count, double eps, unsigned seed, const std::vector<int>& parts)
{
    InclusionBench b;
    b.holes = random_inclusions(count, eps, seed);
    const int n = resolving_cells(eps);
    b.standard = {"standard-" + std::to_string(n), build_structured_mesh(n, n, square_with_inclusions(b.holes))};
    for (int p : parts)
        b.agglomerated.push_back({"agglo-" + std::to_string(p), agglomerate(b.standard.mesh, p)});
    return b;
}

/// Smallest dof count among records of meshes matching `pred` that reach the
/// target error; npos when none does.
template <class Pred>
std::size_t min_dofs_reaching(const std::vector<BenchRecord>& recs, double target, Pred&& pred)
{
    std::size_t best = npos;
    for (const auto& r : recs)
        if (pred(r) && r.e_l2 <= target)
            best = std::min(best, r.dofs);
    return best;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& recs)
{
    os << "mesh,elements,degree,dofs,E_L2,E_H1,t_assembly,t_solve,timing_reliable\n";
    os.precision(17);
    for (const auto& r : recs)
        os << r.mesh_id << ',' << r.elements << ',' << r.degree << ',' << r.dofs << ',' << r.e_l2 << ',' << r.e_h1
           << ',' << r.t_assembly << ',' << r.t_solve << ',' << (r.timing_reliable ? 1 : 0) << '\n';
}

struct DofAdvantage {
    bool found = false;
    BenchRecord agglomerated;  ///< the winning agglomerated run
    std::size_t standard_dofs = npos; ///< fewest standard dofs reaching its error (npos: none)
};

/// Look for an agglomerated run whose E_L2 is reached by no standard run
/// (degree <= max_degree) with as few dofs. Picks the largest dof ratio.
inline DofAdvantage dof_advantage(const std::vector<BenchRecord>& recs, const std::string& standard_id,
                                  int max_degree = 3)
{
    DofAdvantage best;
    double best_ratio = 0.0;
    for (const auto& a : recs) {
        if (a.mesh_id == standard_id)
            continue;
        const auto need = min_dofs_reaching(recs, a.e_l2, [&](const BenchRecord& r) {
            return r.mesh_id == standard_id && r.degree <= max_degree;
        });
        if (need != npos && need <= a.dofs)
            continue;
        // Unreached targets count as the largest standard run plus one.
        std::size_t bound = need;
        if (bound == npos) {
            bound = 0;
            for (const auto& r : recs)
                if (r.mesh_id == standard_id && r.degree <= max_degree)
                    bound = std::max(bound, r.dofs + 1);
        }
        const double ratio = static_cast<double>(bound) / static_cast<double>(a.dofs);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = {true, a, need};
        }
    }
    return best;
}

} // namespace polydg
