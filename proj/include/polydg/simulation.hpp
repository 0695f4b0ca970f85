#pragma once

#include <filesystem>

#include "agglomerate.hpp"
#include "io.hpp"

namespace polydg {

inline PolyMesh<2> build_run_mesh(const MeshSpec& spec)
{
    auto mesh = build_structured_mesh(spec.nx, spec.ny, geometry_by_name(spec.geometry));
    if (spec.agglomerate > 0)
        mesh = agglomerate(mesh, static_cast<std::size_t>(spec.agglomerate));
    return mesh;
}

/// Zero sources and homogeneous boundary data except the network source
/// g_E(t) = A sin(2π f t).
inline ProblemData<2> source_driven_data(const MaterialParams& mp, double amplitude, double frequency)
{
    ProblemData<2> d;
    auto zero_vec = [](const Point<2>&, double) { return Point<2>(Point<2>::Zero()); };
    auto zero = [](const Point<2>&, double) { return 0.0; };
    d.f_el = d.f_f = d.d_D = d.d_D_dot = d.u_D = zero_vec;
    d.p_D.assign(mp.n_networks(), zero);
    d.g.assign(mp.n_networks(), zero);
    d.g[mp.E] = [amplitude, frequency](const Point<2>&, double t) {
        return amplitude * std::sin(2.0 * std::numbers::pi * frequency * t);
    };
    d.p_out = zero;
    return d;
}

/// Total network inflow ∫_{Ω_el} g_j(t).
template <int Dim>
double network_inflow(const CoupledSolver<Dim>& S, std::size_t j, double t)
{
    const auto& V = S.space_el();
    const Vec one = V.project([](const Point<Dim>&) { return 1.0; }, 1);
    return one.dot(S.loads(t).F_p.at(j));
}

struct SimulationResult {
    std::vector<TimeSample> series;
    std::size_t dofs = 0;
    std::size_t elements = 0;
    std::vector<std::string> snapshots;
};

inline SimulationResult simulate(const RunConfig& cfg, const std::function<void(const SystemState&)>& on_step = {})
{
    const auto mesh = build_run_mesh(cfg.mesh);
    auto mp = cfg.params;
    CoupledSolver<2> S(mesh, cfg.degree, mp, cfg.penalty, cfg.scheme, cfg.mode,
                       source_driven_data(mp, cfg.source_amplitude, cfg.source_frequency));
    const Monitors<2> mon(S.space_f(), cfg.output.sigma_marker);
    SimulationResult res;
    res.dofs = S.n_dofs();
    res.elements = mesh.elements.size();
    const auto steps = static_cast<std::size_t>(std::llround(cfg.final_time / cfg.scheme.dt));

    std::vector<double> pending = cfg.output.snapshot_times;
    std::sort(pending.begin(), pending.end());
    std::size_t next_snap = 0;
    if (!pending.empty() && !cfg.output.snapshot_dir.empty())
        std::filesystem::create_directories(cfg.output.snapshot_dir);

    auto s = S.initial_state_zero_fields(0.0);
    auto record = [&](const SystemState& st) {
        res.series.push_back({st.t, mon.q_out.dot(st.U), mon.q_sigma.dot(st.U), mon.p_sigma.dot(st.Pf),
                              std::sqrt(std::max(S.energy(st), 0.0))});
        while (next_snap < pending.size() && pending[next_snap] < st.t + 0.5 * cfg.scheme.dt) {
            if (!cfg.output.snapshot_dir.empty()) {
                char name[64];
                std::snprintf(name, sizeof name, "snapshot_%06zu.txt", st.n);
                const auto path = (std::filesystem::path(cfg.output.snapshot_dir) / name).string();
                export_fields(path, mesh, cfg.degree, st, mp);
                res.snapshots.push_back(path);
            }
            ++next_snap;
        }
        if (on_step)
            on_step(st);
    };
    record(s);
    for (std::size_t n = 0; n < steps; ++n) {
        S.advance(s);
        record(s);
    }
    return res;
}

/// Run a configuration and write its time series.
inline SimulationResult run_simulation(const RunConfig& cfg)
{
    auto res = simulate(cfg);
    write_timeseries(cfg.output.timeseries, res.series);
    return res;
}

/// Spacing of the last two upward crossings of the mean of `v` over samples
/// with t >= t_from (linear interpolation); NaN with fewer than two crossings.
inline double crossing_period(const std::vector<double>& t, const std::vector<double>& v, double t_from)
{
    double mean = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t_from) {
            mean += v[i];
            ++cnt;
        }
    if (cnt < 3)
        return std::numeric_limits<double>::quiet_NaN();
    mean /= static_cast<double>(cnt);
    std::vector<double> up;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i - 1] < t_from)
            continue;
        const double a = v[i - 1] - mean, b = v[i] - mean;
        if (a < 0.0 && b >= 0.0)
            up.push_back(t[i - 1] + (t[i] - t[i - 1]) * (-a) / (b - a));
    }
    if (up.size() < 2)
        return std::numeric_limits<double>::quiet_NaN();
    return up[up.size() - 1] - up[up.size() - 2];
}

} // namespace polydg
