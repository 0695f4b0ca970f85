#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "polydg/mms.hpp"
#include "polydg/poisson.hpp"
#include "polydg/simulation.hpp"

using namespace polydg;

namespace {

enum Exit : int { ok = 0, validation = 1, solver = 2, check_failed = 3 };

struct RunArgs {
    std::string config, timeseries;
};

struct MmsArgs {
    std::vector<int> degrees{1, 2, 3};
    std::vector<int> cells{2, 4, 8, 16};
    double dt = 1e-3;
    int steps = 5;
    std::string mode = "stokes";
    std::string output;
    bool check = false;
};

struct BenchArgs {
    double eps = 0.02;
    int count = 5;
    unsigned seed = 7;
    std::vector<int> degrees{1, 2, 3};
    std::vector<int> parts{25, 50, 100, 200};
    int repetitions = 3;
    bool parallel = false;
    std::string output;
    bool check = false;
};

struct MeshArgs {
    std::string geometry = "cavity-canal";
    int nx = 1, ny = 1, agglomerate = 0;
    std::string output;
};

int cmd_run(const RunArgs& a)
{
    auto cfg = parse_config(a.config);
    if (!a.timeseries.empty())
        cfg.output.timeseries = a.timeseries;
    const auto res = run_simulation(cfg);
    double peak_sigma = 0.0, peak_out = 0.0;
    for (const auto& s : res.series) {
        peak_sigma = std::max(peak_sigma, std::abs(s.q_sigma));
        peak_out = std::max(peak_out, std::abs(s.q_out));
    }
    std::cout << "elements " << res.elements << ", dofs " << res.dofs << ", steps " << res.series.size() - 1 << '\n'
              << "peak |Q_out| " << peak_out << ", peak |Q_sigma| " << peak_sigma << '\n'
              << "time series written to " << cfg.output.timeseries << '\n';
    for (const auto& p : res.snapshots)
        std::cout << "snapshot " << p << '\n';
    return ok;
}

int cmd_mms(const MmsArgs& a)
{
    const auto res = convergence_study(mms_case_2d(), a.degrees, a.cells, a.dt, a.steps, parse_flow_mode(a.mode));
    if (!a.output.empty()) {
        std::ofstream os(a.output);
        if (!os)
            throw IoError("cannot write '" + a.output + "'");
        write_convergence_csv(os, res);
    } else {
        write_convergence_csv(std::cout, res);
    }
    bool pass = res.warnings.empty();
    for (const auto& [m, slope] : res.slopes) {
        const bool in = std::abs(slope - m) <= 0.2;
        pass = pass && in;
        std::cerr << "m=" << m << " fitted slope " << slope << (in ? "" : "  (outside m +/- 0.2)") << '\n';
    }
    for (const auto& w : res.warnings)
        std::cerr << "warning: " << w << '\n';
    return a.check && !pass ? check_failed : ok;
}

int cmd_bench(const BenchArgs& a)
{
    std::cerr << "building meshes (eps " << a.eps << ", " << a.count << " inclusions, seed " << a.seed << ")\n";
    const auto b = inclusion_bench_meshes(a.count, a.eps, a.seed, a.parts);
    std::vector<BenchMesh> meshes = b.agglomerated;
    meshes.push_back(b.standard);
    BenchOptions opt;
    opt.repetitions = a.repetitions;
    opt.parallel = a.parallel;
    const auto recs = run_bench(meshes, a.degrees, sine_problem<2>(), opt);
    if (!a.output.empty()) {
        std::ofstream os(a.output);
        if (!os)
            throw IoError("cannot write '" + a.output + "'");
        write_bench_csv(os, recs);
    } else {
        write_bench_csv(std::cout, recs);
    }
    const auto adv = dof_advantage(recs, b.standard.id);
    if (adv.found)
        std::cerr << adv.agglomerated.mesh_id << " m=" << adv.agglomerated.degree << " reaches E_L2 "
                  << adv.agglomerated.e_l2 << " with " << adv.agglomerated.dofs << " dofs; the standard mesh needs "
                  << (adv.standard_dofs == npos ? std::string("more than any run") : std::to_string(adv.standard_dofs))
                  << '\n';
    else
        std::cerr << "no agglomerated run beats the standard mesh\n";
    return a.check && !adv.found ? check_failed : ok;
}

int cmd_mesh(const MeshArgs& a)
{
    MeshSpec spec{a.geometry, a.nx, a.ny, a.agglomerate};
    const auto mesh = build_run_mesh(spec);
    check_mesh(mesh);
    std::cout << "elements " << mesh.elements.size() << " (el " << mesh.elements_of(Subdomain::el).size() << ", f "
              << mesh.elements_of(Subdomain::f).size() << "), faces " << mesh.faces.size() << '\n';
    for (auto k : all_face_kinds)
        std::cout << "  " << to_string(k) << ' ' << mesh.count_faces(k) << '\n';
    if (!a.output.empty())
        save_mesh(a.output, mesh);
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"PolyDG solver for poroelasticity coupled with (Navier-)Stokes flow"};
    app.require_subcommand(1);

    RunArgs ra;
    auto* run = app.add_subcommand("run", "coupled simulation from a configuration file");
    run->add_option("config", ra.config, "INI configuration")->required()->check(CLI::ExistingFile);
    run->add_option("--timeseries", ra.timeseries, "override output.timeseries");

    MmsArgs ma;
    auto* mms = app.add_subcommand("mms", "manufactured-solution convergence study");
    mms->add_option("--degrees", ma.degrees, "polynomial degrees")->delimiter(',');
    mms->add_option("--cells", ma.cells, "cells per side of each subdomain")->delimiter(',');
    mms->add_option("--dt", ma.dt, "time step [s]");
    mms->add_option("--steps", ma.steps, "number of steps");
    mms->add_option("--mode", ma.mode, "stokes or navier-stokes");
    mms->add_option("-o,--output", ma.output, "CSV output (default stdout)");
    mms->add_flag("--check", ma.check, "exit 3 if a slope leaves m +/- 0.2");

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench-poisson", "agglomerated vs standard mesh Poisson benchmark");
    bench->add_option("--eps", ba.eps, "inclusion diameter");
    bench->add_option("--count", ba.count, "number of inclusions");
    bench->add_option("--seed", ba.seed, "placement seed");
    bench->add_option("--degrees", ba.degrees, "polynomial degrees")->delimiter(',');
    bench->add_option("--parts", ba.parts, "agglomerate counts")->delimiter(',');
    bench->add_option("--repetitions", ba.repetitions, "timing repetitions (median)");
    bench->add_flag("--parallel", ba.parallel, "run cases concurrently (timings unreliable)");
    bench->add_option("-o,--output", ba.output, "CSV output (default stdout)");
    bench->add_flag("--check", ba.check, "exit 3 if no agglomerated run needs fewer dofs");

    MeshArgs mea;
    auto* mesh = app.add_subcommand("mesh", "build, agglomerate and export a mesh");
    mesh->add_option("--geometry", mea.geometry, "cavity-canal, stacked or stacked-outlet");
    mesh->add_option("--nx", mea.nx, "refinement in x");
    mesh->add_option("--ny", mea.ny, "refinement in y");
    mesh->add_option("--agglomerate", mea.agglomerate, "parts per subdomain (0: none)");
    mesh->add_option("-o,--output", mea.output, "mesh text file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : validation;
    }

    try {
        if (*run)
            return cmd_run(ra);
        if (*mms)
            return cmd_mms(ma);
        if (*bench)
            return cmd_bench(ba);
        return cmd_mesh(mea);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return validation;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return solver;
    } catch (const IoError& e) {
        std::cerr << e.what() << '\n';
        return validation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return validation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return solver;
    }
}
