#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "polydg/agglomerate.hpp"
#include "polydg/dg_space.hpp"
#include "polydg/trace.hpp"

using namespace polydg;

namespace {

PolyMesh<2> unit_cells(const std::vector<std::array<int, 2>>& cells)
{
    SimplexSoup<2> soup;
    std::map<std::array<int, 2>, std::size_t> ids;
    auto vid = [&](int i, int j) {
        auto [it, fresh] = ids.try_emplace({i, j}, soup.vertices.size());
        if (fresh)
            soup.vertices.emplace_back(i, j);
        return it->second;
    };
    for (const auto& c : cells) {
        const auto a = vid(c[0], c[1]), b = vid(c[0] + 1, c[1]), d = vid(c[0] + 1, c[1] + 1),
                   e = vid(c[0], c[1] + 1);
        soup.simplices.push_back({a, b, d});
        soup.simplices.push_back({a, d, e});
        soup.simplex_element.insert(soup.simplex_element.end(), {0, 0});
    }
    soup.element_subdomain = {Subdomain::el};
    soup.tag = [](auto&&, auto&&, Subdomain) { return FaceKind::DirichletEl; };
    return build_from_simplices(soup);
}

// Analytic integral of x^a y^b over a rectangle.
double rect_monomial(const BoundingBox<2>& r, int a, int b)
{
    auto prim = [](double lo, double hi, int k) { return (std::pow(hi, k + 1) - std::pow(lo, k + 1)) / (k + 1); };
    return prim(r.lo.x(), r.hi.x(), a) * prim(r.lo.y(), r.hi.y(), b);
}

// Elements of structured/agglomerated meshes consist of cell pairs of simplices.
std::vector<BoundingBox<2>> cells_of(const PolyMesh<2>& m, const Element<2>& K)
{
    std::vector<BoundingBox<2>> out;
    for (std::size_t s = 0; s + 1 < K.simplices.size(); s += 2) {
        BoundingBox<2> b;
        for (int t = 0; t < 2; ++t)
            for (const auto& p : m.simplex_points(K.simplices[s + t]))
                b.extend(p);
        out.push_back(b);
    }
    return out;
}

PolyMesh<2> agglomerated_stack(int n, std::size_t parts)
{
    return agglomerate(build_structured_mesh(n, n, stacked_unit_squares()), parts);
}

} // namespace

TEST(Quadrature, GaussLegendreIsExact)
{
    for (int n = 1; n <= 8; ++n) {
        const auto [x, w] = gauss_legendre_01(n);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                s += w[i] * std::pow(x[i], k);
            EXPECT_NEAR(s, 1.0 / (k + 1), 1e-15) << "n=" << n << " k=" << k;
        }
    }
}

TEST(Quadrature, ReferenceSimplexWeights)
{
    for (int order = 1; order <= 14; ++order) {
        const auto& r2 = reference_simplex_rule<2>(order);
        const auto& r3 = reference_simplex_rule<3>(order);
        EXPECT_NEAR(r2.measure(), 0.5, 1e-15);
        EXPECT_NEAR(r3.measure(), 1.0 / 6.0, 1e-15);
        for (double w : r2.weights)
            EXPECT_GT(w, 0.0);
        // x^a y^b over the reference triangle = a! b! / (a+b+2)!
        for (int a = 0; a <= order; ++a)
            for (int b = 0; a + b <= order; ++b) {
                const double exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                const double num =
                    r2.integrate([&](const Point<2>& p) { return std::pow(p.x(), a) * std::pow(p.y(), b); });
                EXPECT_NEAR(num, exact, 1e-14 * std::max(1.0, exact)) << a << "," << b;
            }
    }
}

TEST(Quadrature, UnitSquare)
{
    const auto m = unit_cells({{0, 0}});
    const auto Q = element_quadrature(m, m.elements[0], 4);
    EXPECT_NEAR(Q.measure(), 1.0, 1e-15);
    EXPECT_NEAR(Q.integrate([](const Point<2>& p) { return p.x() * p.y(); }), 0.25, 1e-15);
}

TEST(Quadrature, LShapeQuintic)
{
    const auto m = unit_cells({{0, 0}, {1, 0}, {0, 1}});
    const auto Q = element_quadrature(m, m.elements[0], 5);
    EXPECT_NEAR(Q.measure(), 3.0, 1e-14);
    EXPECT_NEAR(Q.integrate([](const Point<2>& p) { return std::pow(p.x(), 5); }), 65.0 / 6.0, 1e-13);
}

TEST(Quadrature, RandomPolynomialsOnAgglomerates)
{
    const auto m = agglomerated_stack(8, 5);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int deg = 2; deg <= 8; deg += 2) {
        std::vector<std::pair<std::array<int, 2>, double>> terms;
        for (const auto& e : monomial_exponents<2>(deg))
            terms.emplace_back(e, U(rng));
        for (const auto& K : m.elements) {
            double exact = 0.0;
            for (const auto& c : cells_of(m, K))
                for (const auto& [e, a] : terms)
                    exact += a * rect_monomial(c, e[0], e[1]);
            const auto Q = element_quadrature(m, K, deg);
            const double num = Q.integrate([&](const Point<2>& p) {
                double v = 0.0;
                for (const auto& [e, a] : terms)
                    v += a * std::pow(p.x(), e[0]) * std::pow(p.y(), e[1]);
                return v;
            });
            double scale = 0.0;
            for (const auto& c : cells_of(m, K))
                for (const auto& [e, a] : terms)
                    scale += std::abs(a * rect_monomial(c, e[0], e[1]));
            EXPECT_NEAR(num, exact, 1e-12 * scale);
            EXPECT_NEAR(Q.measure(), K.measure, 1e-12 * K.measure);
        }
    }
}

TEST(Quadrature, FaceRule)
{
    const auto m = build_stacked_cubes(1);
    for (const auto& F : m.faces) {
        const auto Q = face_quadrature(m, F, 3);
        EXPECT_NEAR(Q.measure(), F.measure, 1e-14);
    }
    const auto m2 = build_structured_mesh(3, 3, stacked_unit_squares());
    for (const auto& F : m2.faces) {
        const auto Q = face_quadrature(m2, F, 5);
        const Point<2> a = m2.vertices[F.vertices[0]], b = m2.vertices[F.vertices[1]];
        // ∫ (x^3) along a segment: exact via endpoint formula in parameter t.
        const double exact = Q.integrate([](const Point<2>& p) { return p.x() * p.x() * p.x(); });
        double ref = 0.0;
        const auto [t, w] = gauss_legendre_01(10);
        for (int i = 0; i < 10; ++i) {
            const Point<2> p = a + t[i] * (b - a);
            ref += w[i] * p.x() * p.x() * p.x() * F.measure;
        }
        EXPECT_NEAR(exact, ref, 1e-15);
    }
}

TEST(Quadrature, Cube3D)
{
    const auto m = build_stacked_cubes(2);
    double s = 0.0, sx = 0.0;
    for (const auto& K : m.elements) {
        const auto Q = element_quadrature(m, K, 4);
        s += Q.measure();
        sx += Q.integrate([](const Point<3>& p) { return p.x() * p.y() * p.z() * p.z(); });
    }
    EXPECT_NEAR(s, 2.0, 1e-14);
    EXPECT_NEAR(sx, 0.25 * 2.0 / 3.0, 1e-14);
}

TEST(DGSpace, Dimensions)
{
    const auto m = build_structured_mesh(2, 2, stacked_unit_squares());
    for (int deg = 1; deg <= 5; ++deg) {
        DGSpace<2> V(m, Subdomain::el, deg);
        EXPECT_EQ(V.n_basis(), binomial(deg + 2, 2));
        EXPECT_EQ(V.n_scalar_dofs(), 4 * binomial(deg + 2, 2));
    }
    const auto m3 = build_stacked_cubes(1);
    DGSpace<3> V3(m3, Subdomain::f, 3);
    EXPECT_EQ(V3.n_basis(), 20u);
}

TEST(DGSpace, OrthonormalOnAgglomerates)
{
    for (std::size_t parts : {1u, 3u, 7u}) {
        const auto m = agglomerated_stack(8, parts);
        for (int deg = 1; deg <= 6; ++deg)
            for (auto s : {Subdomain::el, Subdomain::f}) {
                DGSpace<2> V(m, s, deg);
                for (std::size_t k = 0; k < V.n_elements(); ++k) {
                    const Eigen::MatrixXd G = V.local_gram(k);
                    EXPECT_LT((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff(), 1e-10)
                        << "parts=" << parts << " m=" << deg;
                }
            }
    }
}

TEST(DGSpace, FirstBasisIsConstant)
{
    const auto m = agglomerated_stack(4, 3);
    DGSpace<2> V(m, Subdomain::el, 3);
    for (std::size_t k = 0; k < V.n_elements(); ++k) {
        const auto Q = V.quadrature(k);
        const auto T = V.eval(k, Q.points);
        const double c = 1.0 / std::sqrt(V.element(k).measure);
        for (std::size_t q = 0; q < Q.size(); ++q) {
            EXPECT_NEAR(std::abs(T.values(q, 0)), c, 1e-12 * c);
            EXPECT_NEAR(T.grads[0](q, 0), 0.0, 1e-12);
            EXPECT_NEAR(T.grads[1](q, 0), 0.0, 1e-12);
        }
    }
}

TEST(DGSpace, FiniteDifferenceGradients)
{
    const auto m = agglomerated_stack(6, 4);
    DGSpace<2> V(m, Subdomain::f, 3);
    std::mt19937 rng(3);
    double worst = 0.0;
    for (std::size_t k = 0; k < V.n_elements(); ++k) {
        const auto& K = V.element(k);
        const double step = 1e-6 * K.diameter;
        std::uniform_real_distribution<double> ux(K.bbox.lo.x() + step, K.bbox.hi.x() - step);
        std::uniform_real_distribution<double> uy(K.bbox.lo.y() + step, K.bbox.hi.y() - step);
        for (int trial = 0; trial < 10; ++trial) {
            const Point<2> x(ux(rng), uy(rng));
            const auto T = V.eval(k, {x});
            for (int d = 0; d < 2; ++d) {
                Point<2> xp = x, xm = x;
                xp[d] += step;
                xm[d] -= step;
                const auto Tp = V.eval(k, {xp}), Tm = V.eval(k, {xm});
                const Eigen::RowVectorXd fd = (Tp.values - Tm.values) / (2 * step);
                const double scale = std::max(1.0, T.grads[d].cwiseAbs().maxCoeff());
                worst = std::max(worst, (fd - T.grads[d]).cwiseAbs().maxCoeff() / scale);
            }
        }
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(DGSpace, ProjectionReproducesPolynomials)
{
    const auto m = agglomerated_stack(6, 5);
    for (int deg = 1; deg <= 4; ++deg) {
        DGSpace<2> V(m, Subdomain::el, deg);
        EXPECT_EQ(V.project([](const Point<2>&) { return 0.0; }, 1).norm(), 0.0);
        auto f = [deg](const Point<2>& p) {
            return 0.3 + std::pow(p.x() - 0.2, deg) - 2.0 * std::pow(p.y(), deg - 1) * p.x();
        };
        const auto x = V.project(f, 1);
        for (std::size_t k = 0; k < V.n_elements(); ++k) {
            const auto Q = V.quadrature(k);
            const auto vals = V.evaluate(x, 1, k, Q.points);
            for (std::size_t q = 0; q < Q.size(); ++q)
                EXPECT_NEAR(vals(q, 0), f(Q.points[q]), 1e-12);
        }
        // Linear reproduction of f(x) = x, vector-valued.
        const auto xv = V.project([](const Point<2>& p) { return Eigen::Vector2d(p.x(), -p.y()); }, 2);
        const auto Q = V.quadrature(0);
        const auto vals = V.evaluate(xv, 2, 0, Q.points);
        for (std::size_t q = 0; q < Q.size(); ++q) {
            EXPECT_NEAR(vals(q, 0), Q.points[q].x(), 1e-12);
            EXPECT_NEAR(vals(q, 1), -Q.points[q].y(), 1e-12);
        }
    }
}

TEST(DGSpace, ProjectionConvergence)
{
    auto f = [](const Point<2>& p) { return std::sin(M_PI * p.x()) * std::sin(M_PI * p.y()); };
    auto l2_error = [&](int n) {
        const auto m = build_structured_mesh(n, n, stacked_unit_squares());
        DGSpace<2> V(m, Subdomain::el, 2);
        const auto x = V.project(f, 1);
        double e2 = 0.0;
        for (std::size_t k = 0; k < V.n_elements(); ++k) {
            const auto Q = V.quadrature(k, 10);
            const auto vals = V.evaluate(x, 1, k, Q.points);
            for (std::size_t q = 0; q < Q.size(); ++q)
                e2 += Q.weights[q] * std::pow(vals(q, 0) - f(Q.points[q]), 2);
        }
        return std::sqrt(e2);
    };
    const double e1 = l2_error(8), e2 = l2_error(16);
    EXPECT_NEAR(std::log2(e1 / e2), 3.0, 0.15);
}

TEST(Trace, ScalarInternal)
{
    const auto m = build_structured_mesh(2, 2, stacked_unit_squares());
    for (const auto& F : m.faces) {
        if (!is_internal(F.kind))
            continue;
        const auto c = jump_avg<2>(F, 3.0, 3.0);
        EXPECT_EQ(c.jump.norm(), 0.0);
        EXPECT_EQ(c.average, 3.0);
        Face<2> G = F;
        G.normal = Point<2>(1.0, 0.0);
        const auto j = jump_avg<2>(G, 1.0, 0.0);
        EXPECT_EQ(j.jump, Point<2>(1.0, 0.0));
        EXPECT_EQ(j.average, 0.5);
        break;
    }
}

TEST(Trace, DirichletAndMismatch)
{
    const auto m = build_structured_mesh(1, 1, stacked_unit_squares());
    for (const auto& F : m.faces) {
        if (F.kind == FaceKind::DirichletEl) {
            const auto j = jump_avg<2>(F, Point<2>(1.0, 2.0), std::nullopt);
            EXPECT_EQ(j.average, Point<2>(1.0, 2.0));
            EXPECT_NEAR((j.jump - sym_outer<2>(Point<2>(1.0, 2.0), F.normal)).norm(), 0.0, 1e-15);
            EXPECT_THROW(jump_avg<2>(F, 1.0, 2.0), std::invalid_argument);
        }
        if (F.kind == FaceKind::Interface) {
            EXPECT_THROW(jump_avg<2>(F, 1.0, 2.0), std::invalid_argument);
            const Point<2> w(1.0, 5.0), v(1.0, -2.0);
            EXPECT_NEAR(interface_tangential_jump<2>(F, w, v).norm(), 0.0, 1e-15);
            EXPECT_EQ(interface_average<2>(F, 4.0), 4.0);
            // w ⊙ n_el + v ⊙ n_f with equal traces: zero jump.
            EXPECT_NEAR(interface_jump<2>(F, w, w).norm(), 0.0, 1e-15);
        }
    }
    Tensor<2> t;
    t << 1, 2, 3, 4;
    const auto& F = m.faces.front();
    if (F.two_sided()) {
        EXPECT_NEAR(jump_avg<2>(F, t, std::optional<Tensor<2>>(t)).jump.norm(), 0.0, 1e-15);
    }
}

TEST(Trace, PolynomialFieldHasNoInternalJumps)
{
    const auto m = agglomerated_stack(6, 5);
    const int deg = 3;
    DGSpace<2> V(m, Subdomain::el, deg);
    auto f = [](const Point<2>& p) { return 1.0 + p.x() * p.x() * p.y() - 3.0 * p.y() * p.y() * p.y(); };
    const auto x = V.project(f, 1);
    double worst = 0.0;
    for (const auto& F : m.faces) {
        if (F.kind != FaceKind::InternalEl)
            continue;
        const auto Q = face_quadrature(m, F, 2 * deg + 2);
        const auto vp = V.evaluate(x, 1, V.local_element(F.owners[0]), Q.points);
        const auto vm = V.evaluate(x, 1, V.local_element(F.owners[1]), Q.points);
        for (std::size_t q = 0; q < Q.size(); ++q)
            worst = std::max(worst, jump_avg<2>(F, vp(q, 0), vm(q, 0)).jump.norm());
    }
    EXPECT_LT(worst, 1e-11);
}
