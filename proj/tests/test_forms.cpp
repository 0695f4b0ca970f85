#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "polydg/agglomerate.hpp"
#include "polydg/forms.hpp"

using namespace polydg;

namespace {

Eigen::MatrixXd dense(const SpMat& m) { return Eigen::MatrixXd(m); }

double min_eig(const SpMat& m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(m));
    return es.eigenvalues().minCoeff();
}

double rel_asym(const SpMat& m) { return asymmetry(m) / std::max(max_abs(m), 1e-300); }

TwoDomainSpec stacked_neumann()
{
    auto g = stacked_unit_squares();
    g.tag = [](const Point<2>&, const Point<2>&, Subdomain s) {
        return s == Subdomain::el ? FaceKind::NeumannEl : FaceKind::OutletF;
    };
    return g;
}

struct Fixture {
    PolyMesh<2> mesh;
    DGSpace<2> el, f;
    Fixture(PolyMesh<2> m, int deg) : mesh(std::move(m)), el(mesh, Subdomain::el, deg), f(mesh, Subdomain::f, deg) {}
};

// Tensor Gauss rule on a rectangle, independent of the simplex rules.
std::vector<std::pair<Point<2>, double>> box_rule(const BoundingBox<2>& b, int n)
{
    const auto g = gauss_legendre_01(n);
    std::vector<std::pair<Point<2>, double>> out;
    const Point<2> L = b.hi - b.lo;
    for (std::size_t i = 0; i < g.first.size(); ++i)
        for (std::size_t j = 0; j < g.first.size(); ++j)
            out.emplace_back(Point<2>(b.lo.x() + L.x() * g.first[i], b.lo.y() + L.y() * g.first[j]),
                             g.second[i] * g.second[j] * L.x() * L.y());
    return out;
}

} // namespace

TEST(Penalty, HandComputedValues)
{
    auto mp = physiological_params();
    PenaltyConfig cfg;
    EXPECT_NEAR(penalty_coefficients(0.1, 2, mp, cfg).eta, 2356600.0, 2356600.0 * 1e-14);
    EXPECT_NEAR(penalty_coefficients(0.5, 2, mp, cfg).gamma_p, 5.0, 5e-14);
    const double zeta = 10.0 * 1e-16 / (std::sqrt(3.5e-3) * 0.01);
    EXPECT_NEAR(penalty_coefficients(0.01, 2, mp, cfg).zeta[0], zeta, zeta * 1e-14);
    EXPECT_NEAR(zeta, 1.690e-12, 1e-15);
    EXPECT_NEAR(penalty_coefficients(0.2, 2, mp, cfg).gamma_v, 10.0 * 3.5e-3 / 0.2, 1e-17);
}

TEST(Penalty, DegreeScaling)
{
    const auto mp = physiological_params();
    PenaltyConfig cfg;
    const auto p1 = penalty_coefficients(0.1, 2, mp, cfg, 1);
    const auto p3 = penalty_coefficients(0.1, 2, mp, cfg, 3);
    EXPECT_DOUBLE_EQ(p3.eta, 9.0 * p1.eta);
    EXPECT_DOUBLE_EQ(p3.gamma_v, 9.0 * p1.gamma_v);
    EXPECT_DOUBLE_EQ(p3.zeta[0], 9.0 * p1.zeta[0]);
    EXPECT_DOUBLE_EQ(p3.gamma_p, p1.gamma_p);
    cfg.degree_scaling = false;
    EXPECT_DOUBLE_EQ(penalty_coefficients(0.1, 2, mp, cfg, 3).eta, 2356600.0);
}

TEST(Penalty, InterfaceFaceRejected)
{
    const auto mesh = build_structured_mesh(2, 2, stacked_unit_squares());
    for (const auto& F : mesh.faces)
        if (F.kind == FaceKind::Interface) {
            EXPECT_THROW(penalty_coefficients(mesh, F, unit_params(), PenaltyConfig{}), std::invalid_argument);
            return;
        }
    FAIL() << "no interface face";
}

TEST(Poroelastic, SymmetryAndMass)
{
    Fixture fx(agglomerate(build_structured_mesh(4, 4, stacked_unit_squares()), 5), 2);
    auto mp = unit_params();
    mp.lambda = 3.7;
    mp.mu_el = 1.3;
    const auto pb = assemble_poroelastic(fx.el, mp, PenaltyConfig{});
    EXPECT_LT(rel_asym(pb.A_el), 1e-12);
    EXPECT_LT(rel_asym(pb.A[0]), 1e-12);
    // Orthonormal basis: unweighted mass is the identity.
    EXPECT_LT((dense(pb.M_scalar) - Eigen::MatrixXd::Identity(pb.M_scalar.rows(), pb.M_scalar.cols()))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-11);
}

TEST(Poroelastic, ConstantFieldEnergy)
{
    const Point<2> c(0.3, -0.7);
    // No Dirichlet faces: a constant field is in the kernel.
    {
        Fixture fx(build_structured_mesh(3, 3, stacked_neumann()), 2);
        const auto pb = assemble_poroelastic(fx.el, unit_params(), PenaltyConfig{});
        const Vec w = fx.el.project([&](const Point<2>&) { return c; }, 2);
        EXPECT_NEAR(w.dot(pb.A_el * w), 0.0, 1e-10 * w.squaredNorm() * max_abs(pb.A_el));
    }
    // Dirichlet faces only contribute the penalty term η/2 ∫ |w|² + (w·n)².
    {
        Fixture fx(build_structured_mesh(3, 3, stacked_unit_squares()), 2);
        const auto mp = unit_params();
        const auto pb = assemble_poroelastic(fx.el, mp, PenaltyConfig{});
        const Vec w = fx.el.project([&](const Point<2>&) { return c; }, 2);
        double expect = 0.0;
        for (const auto& F : fx.mesh.faces)
            if (F.kind == FaceKind::DirichletEl) {
                const double eta = penalty_coefficients(fx.mesh, F, mp, PenaltyConfig{}, 2).eta;
                expect += eta * 0.5 * (c.squaredNorm() + std::pow(c.dot(F.normal), 2)) * F.measure;
            }
        EXPECT_NEAR(w.dot(pb.A_el * w), expect, 1e-10 * expect);
    }
}

TEST(Poroelastic, ExchangeSingleCompartment)
{
    Fixture fx(build_structured_mesh(2, 2, stacked_unit_squares()), 1);
    auto mp = unit_params();
    mp.networks[0].beta_e = 2.5;
    mp.beta = Eigen::MatrixXd::Constant(1, 1, 7.0);
    const auto pb = assemble_poroelastic(fx.el, mp, PenaltyConfig{});
    EXPECT_LT((dense(pb.C(0, 0)) - 2.5 * dense(pb.M_scalar)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Poroelastic, ExchangeTwoCompartments)
{
    auto mp = unit_params();
    mp.networks.insert(mp.networks.begin(), Compartment{"A", 1.0, 0.5, 1.0, 1.0, 0.0});
    mp.beta = Eigen::MatrixXd::Zero(2, 2);
    mp.beta(0, 1) = mp.beta(1, 0) = 3.0;
    const auto C = exchange_coefficients(mp);
    EXPECT_DOUBLE_EQ(C(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(C(0, 1), -3.0);
    EXPECT_DOUBLE_EQ(C(1, 0), -3.0);
    EXPECT_DOUBLE_EQ(C(1, 1), 3.0 + mp.networks[1].beta_e);
}

TEST(Poroelastic, CoercivityOnFourElements)
{
    for (int deg : {1, 2}) {
        Fixture fx(agglomerate(build_structured_mesh(4, 4, stacked_unit_squares()), 4), deg);
        ASSERT_EQ(fx.el.n_elements(), 4u);
        const auto pb = assemble_poroelastic(fx.el, physiological_params(), PenaltyConfig{});
        EXPECT_GT(min_eig(pb.A_el), 0.0) << "degree " << deg;
        const auto pu = assemble_poroelastic(fx.el, unit_params(), PenaltyConfig{});
        EXPECT_GT(min_eig(pu.A[0]), 0.0) << "degree " << deg;
    }
}

TEST(Fluid, SymmetryAndStabilization)
{
    Fixture fx(agglomerate(build_structured_mesh(4, 4, stacked_unit_squares()), 6), 2);
    const auto fb = assemble_fluid(fx.f, unit_params(), PenaltyConfig{});
    EXPECT_LT(rel_asym(fb.A_f), 1e-12);
    EXPECT_LT(rel_asym(fb.S), 1e-12);
    EXPECT_GT(min_eig(fb.S), -1e-12 * max_abs(fb.S));
    const Vec q = fx.f.project([](const Point<2>&) { return 2.0; }, 1);
    EXPECT_NEAR(q.dot(fb.S * q), 0.0, 1e-12);
}

TEST(Fluid, ViscousCoercivity)
{
    for (int deg : {1, 2, 3}) {
        Fixture fx(agglomerate(build_structured_mesh(4, 4, stacked_unit_squares()), 6), deg);
        const auto fb = assemble_fluid(fx.f, unit_params(), PenaltyConfig{});
        EXPECT_GT(min_eig(fb.A_f), 0.0) << "degree " << deg;
    }
}

TEST(Fluid, DivergenceFreeFluxResidual)
{
    // u = (y, x), q = 1: B_f(q, u) = -∫ div u + ∫_walls u·n = -1/2.
    Fixture fx(agglomerate(build_structured_mesh(4, 4, stacked_unit_squares()), 5), 1);
    const auto fb = assemble_fluid(fx.f, unit_params(), PenaltyConfig{});
    const Vec u = fx.f.project([](const Point<2>& x) { return Point<2>(x.y(), x.x()); }, 2);
    const Vec q = fx.f.project([](const Point<2>&) { return 1.0; }, 1);
    EXPECT_NEAR(q.dot(fb.B_f * u), -0.5, 1e-12);
}

TEST(Advection, ZeroAdvectingField)
{
    Fixture fx(build_structured_mesh(2, 2, stacked_unit_squares()), 1);
    const auto N = assemble_advection(fx.f, unit_params(), Vec::Zero(2 * fx.f.n_scalar_dofs()));
    EXPECT_EQ(N.nonZeros(), 0);
}

TEST(Advection, SkewSymmetry)
{
    Fixture fx(agglomerate(build_structured_mesh(6, 6, stacked_with_outlet()), 8), 2);
    std::mt19937 rng(7);
    std::normal_distribution<double> nd;
    const auto n = static_cast<Eigen::Index>(2 * fx.f.n_scalar_dofs());
    Vec us(n);
    for (auto& x : us)
        x = nd(rng);
    const auto N = assemble_advection(fx.f, unit_params(), us);
    const double norm = dense(N).norm();
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Vec v(n);
        for (auto& x : v)
            x = nd(rng);
        worst = std::max(worst, std::abs(v.dot(N * v)) / (norm * v.squaredNorm()));
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(Advection, SingleElementOracle)
{
    // One square element; constant u*. Oracle: ρ∫(u*·∇u)·v - ρ/2∮(u*·n) u·v.
    SimplexSoup<2> soup;
    soup.vertices = {Point<2>(0, 0), Point<2>(1, 0), Point<2>(1, 1), Point<2>(0, 1)};
    soup.simplices = {{0, 1, 2}, {0, 2, 3}};
    soup.simplex_element = {0, 0};
    soup.element_subdomain = {Subdomain::f};
    soup.tag = [](auto&&, auto&&, Subdomain) { return FaceKind::WallF; };
    const auto mesh = build_from_simplices(soup);
    DGSpace<2> V(mesh, Subdomain::f, 2);
    auto mp = unit_params();
    mp.rho_f = 1.7;
    const Point<2> a(0.6, -0.4);
    const Vec us = V.project([&](const Point<2>&) { return a; }, 2);
    const auto N = assemble_advection(V, mp, us);
    auto u = [](const Point<2>& x) { return Point<2>(x.x() * x.y(), 1.0 - x.x() * x.x()); };
    auto du = [](const Point<2>& x) { // rows: components, cols: derivatives
        Tensor<2> g;
        g << x.y(), x.x(), -2.0 * x.x(), 0.0;
        return g;
    };
    auto v = [](const Point<2>& x) { return Point<2>(x.y() * x.y(), x.x() + x.y()); };
    double oracle = 0.0;
    for (const auto& [x, w] : box_rule(mesh.elements[0].bbox, 6))
        oracle += w * mp.rho_f * (du(x) * a).dot(v(x));
    const auto g = gauss_legendre_01(6);
    const std::array<std::pair<Point<2>, Point<2>>, 4> sides{{{Point<2>(0, 0), Point<2>(0, -1)},
                                                             {Point<2>(1, 0), Point<2>(1, 0)},
                                                             {Point<2>(0, 1), Point<2>(0, 1)},
                                                             {Point<2>(0, 0), Point<2>(-1, 0)}}};
    for (const auto& [start, n] : sides) {
        const Point<2> dir(std::abs(n.y()), std::abs(n.x()));
        for (std::size_t i = 0; i < g.first.size(); ++i) {
            const Point<2> x = start + g.first[i] * dir;
            oracle -= 0.5 * mp.rho_f * g.second[i] * a.dot(n) * u(x).dot(v(x));
        }
    }
    const Vec U = V.project(u, 2), W = V.project(v, 2);
    EXPECT_NEAR(W.dot(N * U), oracle, 1e-12);
}

TEST(Interface, CouplingOnFlatInterface)
{
    Fixture fx(build_structured_mesh(3, 3, stacked_unit_squares()), 1);
    const auto ib = assemble_interface(fx.el, fx.f, unit_params());
    const Vec p = fx.el.project([](const Point<2>&) { return 1.0; }, 1);
    const Vec w = fx.el.project([](const Point<2>&) { return Point<2>(0.0, -1.0); }, 2);
    const Vec v = fx.f.project([](const Point<2>&) { return Point<2>(0.0, -1.0); }, 2);
    EXPECT_NEAR(p.dot(ib.J_el * w), 1.0, 1e-13);
    // Same geometric integral against the fluid side carries the opposite sign.
    EXPECT_NEAR(p.dot(ib.J_f * v), -1.0, 1e-13);
}

TEST(Interface, FrictionMatrix)
{
    Fixture fx(agglomerate(build_structured_mesh(4, 4, stacked_unit_squares()), 5), 2);
    auto mp = unit_params();
    mp.networks[0].k = 0.25;
    const auto ib = assemble_interface(fx.el, fx.f, mp);
    const auto G = ib.G_joint();
    EXPECT_LT(rel_asym(G), 1e-12);
    EXPECT_GT(min_eig(G), -1e-12 * max_abs(G));
    // Equal tangential traces: w = v = (x, 3) on Σ (y = 0) -> no friction.
    const Vec w = fx.el.project([](const Point<2>& x) { return Point<2>(x.x(), 3.0 + x.y()); }, 2);
    const Vec v = fx.f.project([](const Point<2>& x) { return Point<2>(x.x(), 3.0 - 2.0 * x.y()); }, 2);
    Vec wv(w.size() + v.size());
    wv << w, v;
    EXPECT_NEAR(wv.dot(G * wv), 0.0, 1e-12);
    // Tangential slip of 1 along the unit interface: κ = γ μ_f / √k = 2.
    const Vec one = fx.el.project([](const Point<2>&) { return Point<2>(1.0, 0.0); }, 2);
    Vec sv(one.size() + v.size());
    sv << one, Vec::Zero(v.size());
    EXPECT_NEAR(sv.dot(G * sv), 2.0, 1e-12);

    mp.gamma = 0.0;
    const auto ib0 = assemble_interface(fx.el, fx.f, mp);
    EXPECT_EQ(ib0.G_joint().nonZeros(), 0);
}

TEST(Backflow, OutflowGivesZero)
{
    Fixture fx(build_structured_mesh(3, 3, stacked_with_outlet()), 1);
    const Vec un = fx.f.project([](const Point<2>&) { return Point<2>(0.2, -1.0); }, 2);
    EXPECT_EQ(assemble_backflow(fx.f, unit_params(), un).nonZeros(), 0);
}

TEST(Backflow, UniformInflow)
{
    Fixture fx(build_structured_mesh(3, 3, stacked_with_outlet()), 1);
    auto mp = unit_params();
    mp.rho_f = 1000.0;
    const Point<2> u(0.5, 1.0); // u·n = -1 on the bottom outlet
    const Vec un = fx.f.project([&](const Point<2>&) { return u; }, 2);
    const auto BW = assemble_backflow(fx.f, mp, un);
    EXPECT_NEAR(un.dot(BW * un), -0.5 * mp.rho_f * u.squaredNorm(), 1e-9);
    EXPECT_LT(rel_asym(BW), 1e-14);
    mp.gamma = 0.0;
    EXPECT_EQ(dense(assemble_backflow(fx.f, mp, un)), dense(BW));
}

TEST(Loads, ZeroAndConstantData)
{
    Fixture fx(agglomerate(build_structured_mesh(4, 4, stacked_with_outlet()), 4), 2);
    const auto mp = unit_params();
    ProblemData<2> none;
    const auto L0 = assemble_loads(fx.el, fx.f, mp, PenaltyConfig{}, none, 0.0);
    EXPECT_EQ(L0.F_el.norm() + L0.F_p[0].norm() + L0.F_f.norm() + L0.F_c.norm(), 0.0);

    ProblemData<2> d;
    d.g = {[](const Point<2>&, double) { return 3.0; }};
    d.p_out = [](const Point<2>&, double t) { return 2.0 * t; };
    const auto L = assemble_loads(fx.el, fx.f, mp, PenaltyConfig{}, d, 1.5);
    const Vec basis_int = fx.el.project([](const Point<2>&) { return 1.0; }, 1);
    EXPECT_LT((L.F_p[0] - 3.0 * basis_int).cwiseAbs().maxCoeff(), 1e-12);
    // -∫_out p̄ v·n with v = (0, 1), n = (0, -1), |Γ_out| = 1.
    const Vec v = fx.f.project([](const Point<2>&) { return Point<2>(0.0, 1.0); }, 2);
    EXPECT_NEAR(v.dot(L.F_f), 3.0, 1e-12);
}

TEST(Assembly, ThreadCountInvariance)
{
    Fixture fx(agglomerate(build_structured_mesh(6, 6, stacked_unit_squares()), 10), 2);
    const auto mp = physiological_params();
    const auto a = assemble_poroelastic(fx.el, mp, PenaltyConfig{}, {1});
    const auto b = assemble_poroelastic(fx.el, mp, PenaltyConfig{}, {3});
    EXPECT_LE(max_abs(a.A_el - b.A_el), 1e-12 * max_abs(a.A_el));
    EXPECT_LE(max_abs(a.B[0] - b.B[0]), 1e-12 * max_abs(a.B[0]));
    const auto fa = assemble_fluid(fx.f, mp, PenaltyConfig{}, {1});
    const auto fb = assemble_fluid(fx.f, mp, PenaltyConfig{}, {4});
    EXPECT_LE(max_abs(fa.A_f - fb.A_f), 1e-12 * max_abs(fa.A_f));
    Vec us = Vec::LinSpaced(2 * fx.f.n_scalar_dofs(), -1.0, 1.0);
    const auto na = assemble_advection(fx.f, mp, us, {1});
    const auto nb = assemble_advection(fx.f, mp, us, {2});
    EXPECT_LE(max_abs(na - nb), 1e-12 * max_abs(na));
}

TEST(Assembly, TripletRoundTrip)
{
    Fixture fx(build_structured_mesh(2, 2, stacked_unit_squares()), 1);
    const auto pb = assemble_poroelastic(fx.el, unit_params(), PenaltyConfig{});
    const std::string path = ::testing::TempDir() + "/a_el.txt";
    write_triplets(pb.A_el, path);
    EXPECT_EQ(max_abs(read_triplets(path) - pb.A_el), 0.0);
}
