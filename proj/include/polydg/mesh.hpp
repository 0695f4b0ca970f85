#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "geometry.hpp"

namespace polydg {

enum class Subdomain : std::uint8_t { el = 0, f = 1 };

enum class FaceKind : std::uint8_t {
    InternalEl,
    InternalF,
    DirichletEl,
    NeumannEl,
    WallF,
    OutletF,
    Interface,
};

inline constexpr std::array<FaceKind, 7> all_face_kinds = {
    FaceKind::InternalEl, FaceKind::InternalF, FaceKind::DirichletEl, FaceKind::NeumannEl,
    FaceKind::WallF,      FaceKind::OutletF,   FaceKind::Interface,
};

inline std::string_view to_string(Subdomain s) { return s == Subdomain::el ? "el" : "f"; }

inline std::string_view to_string(FaceKind k)
{
    switch (k) {
    case FaceKind::InternalEl: return "InternalEl";
    case FaceKind::InternalF: return "InternalF";
    case FaceKind::DirichletEl: return "DirichletEl";
    case FaceKind::NeumannEl: return "NeumannEl";
    case FaceKind::WallF: return "WallF";
    case FaceKind::OutletF: return "OutletF";
    case FaceKind::Interface: return "Interface";
    }
    return "?";
}

inline Subdomain parse_subdomain(std::string_view s)
{
    if (s == "el")
        return Subdomain::el;
    if (s == "f")
        return Subdomain::f;
    throw std::invalid_argument("unknown subdomain '" + std::string(s) + "'");
}

inline FaceKind parse_face_kind(std::string_view s)
{
    for (auto k : all_face_kinds)
        if (to_string(k) == s)
            return k;
    throw std::invalid_argument("unknown face kind '" + std::string(s) + "'");
}

inline bool is_internal(FaceKind k) { return k == FaceKind::InternalEl || k == FaceKind::InternalF; }
inline bool is_boundary(FaceKind k) { return !is_internal(k) && k != FaceKind::Interface; }

/// Subdomain a face kind belongs to. Interface faces belong to both; returns el.
inline Subdomain face_subdomain(FaceKind k)
{
    switch (k) {
    case FaceKind::InternalF:
    case FaceKind::WallF:
    case FaceKind::OutletF: return Subdomain::f;
    default: return Subdomain::el;
    }
}

template <int Dim>
using Simplex = std::array<std::size_t, Dim + 1>;

template <int Dim>
using Facet = std::array<std::size_t, Dim>;

template <int Dim>
struct Element {
    Subdomain subdomain = Subdomain::el;
    std::vector<Simplex<Dim>> simplices;
    BoundingBox<Dim> bbox;
    double measure = 0.0;
    double diameter = 0.0;
    std::vector<std::size_t> faces;
};

/// A simplicial facet. The normal points outward from owners[0]; for internal
/// and interface faces the second owner sees -normal. Interface faces always
/// list the el element first, so `normal` is n_el there.
template <int Dim>
struct Face {
    FaceKind kind = FaceKind::InternalEl;
    Facet<Dim> vertices{};
    std::array<std::size_t, 2> owners{npos, npos};
    std::array<std::size_t, 2> owner_simplex{npos, npos};
    Point<Dim> normal = Point<Dim>::Zero();
    Point<Dim> centroid = Point<Dim>::Zero();
    double measure = 0.0;
    int marker = 0;

    [[nodiscard]] bool two_sided() const { return owners[1] != npos; }
    [[nodiscard]] int side_of(std::size_t element) const
    {
        if (owners[0] == element)
            return 0;
        if (owners[1] == element)
            return 1;
        return -1;
    }
    /// Outward normal as seen from side s.
    [[nodiscard]] Point<Dim> normal_from(int s) const { return s == 0 ? normal : Point<Dim>(-normal); }
};

template <int Dim>
struct PolyMesh {
    std::vector<Point<Dim>> vertices;
    std::vector<Element<Dim>> elements;
    std::vector<Face<Dim>> faces;
    /// Elements of each subdomain, in global order.
    std::array<std::vector<std::size_t>, 2> by_subdomain;
    /// Position of each element inside by_subdomain[its subdomain].
    std::vector<std::size_t> local_index;

    [[nodiscard]] std::size_t n_elements(Subdomain s) const { return by_subdomain[static_cast<int>(s)].size(); }
    [[nodiscard]] const std::vector<std::size_t>& elements_of(Subdomain s) const
    {
        return by_subdomain[static_cast<int>(s)];
    }
    [[nodiscard]] Point<Dim> vertex(std::size_t i) const { return vertices[i]; }

    [[nodiscard]] std::array<Point<Dim>, Dim + 1> simplex_points(const Simplex<Dim>& s) const
    {
        std::array<Point<Dim>, Dim + 1> p;
        for (int i = 0; i <= Dim; ++i)
            p[i] = vertices[s[i]];
        return p;
    }
    [[nodiscard]] std::array<Point<Dim>, Dim> facet_points(const Facet<Dim>& f) const
    {
        std::array<Point<Dim>, Dim> p;
        for (int i = 0; i < Dim; ++i)
            p[i] = vertices[f[i]];
        return p;
    }

    [[nodiscard]] double subdomain_measure(Subdomain s) const
    {
        double m = 0.0;
        for (auto e : elements_of(s))
            m += elements[e].measure;
        return m;
    }

    /// The element across an interface face from `element` (involution on owners).
    [[nodiscard]] std::size_t interface_partner(std::size_t face, std::size_t element) const
    {
        const auto& F = faces.at(face);
        if (F.kind != FaceKind::Interface)
            throw std::invalid_argument("interface_partner: face is not an interface face");
        const int s = F.side_of(element);
        if (s < 0)
            throw std::invalid_argument("interface_partner: element does not own the face");
        return F.owners[1 - s];
    }

    [[nodiscard]] std::size_t count_faces(FaceKind k) const
    {
        return static_cast<std::size_t>(
            std::count_if(faces.begin(), faces.end(), [k](const Face<Dim>& f) { return f.kind == k; }));
    }
};

/// Maximum pairwise distance between the vertices of an element.
template <int Dim>
double element_diameter(const PolyMesh<Dim>& mesh, const Element<Dim>& K)
{
    std::vector<std::size_t> ids;
    for (const auto& s : K.simplices)
        ids.insert(ids.end(), s.begin(), s.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    double h = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j)
            h = std::max(h, (mesh.vertices[ids[i]] - mesh.vertices[ids[j]]).norm());
    return h;
}

inline double harmonic_h(double h_plus, double h_minus) { return 2.0 * h_plus * h_minus / (h_plus + h_minus); }

/// {h}_H of a face: harmonic mean of the owners' diameters, or h_K for one owner.
template <int Dim>
double harmonic_h(const PolyMesh<Dim>& mesh, const Face<Dim>& F)
{
    const double hp = mesh.elements[F.owners[0]].diameter;
    if (!F.two_sided())
        return hp;
    return harmonic_h(hp, mesh.elements[F.owners[1]].diameter);
}

/// Input for mesh construction: a conforming simplex soup grouped into
/// elements. Facets shared inside an element are dropped; the rest become
/// faces classified by ownership and, on the boundary, by `tag`.
struct FaceTag {
    FaceKind kind;
    int marker;
};

template <int Dim>
struct SimplexSoup {
    std::vector<Point<Dim>> vertices;
    std::vector<Simplex<Dim>> simplices;
    std::vector<std::size_t> simplex_element;
    std::vector<Subdomain> element_subdomain;
    std::function<FaceKind(const Point<Dim>& centroid, const Point<Dim>& normal, Subdomain)> tag;
    std::function<int(const Point<Dim>& centroid, FaceKind)> marker;
    /// Tags keyed by sorted facet vertices; takes precedence over tag/marker.
    const std::map<Facet<Dim>, FaceTag>* inherited = nullptr;
};

namespace detail {
template <int Dim>
Facet<Dim> facet_of(const Simplex<Dim>& s, int omit)
{
    Facet<Dim> f{};
    int k = 0;
    for (int i = 0; i <= Dim; ++i)
        if (i != omit)
            f[k++] = s[i];
    return f;
}

template <int Dim>
Facet<Dim> sorted(Facet<Dim> f)
{
    std::sort(f.begin(), f.end());
    return f;
}
} // namespace detail

template <int Dim>
PolyMesh<Dim> build_from_simplices(const SimplexSoup<Dim>& soup)
{
    PolyMesh<Dim> mesh;
    mesh.vertices = soup.vertices;
    const std::size_t n_el = soup.element_subdomain.size();
    if (soup.simplices.size() != soup.simplex_element.size())
        throw std::invalid_argument("build_from_simplices: simplex/element map size mismatch");
    mesh.elements.resize(n_el);
    for (std::size_t e = 0; e < n_el; ++e)
        mesh.elements[e].subdomain = soup.element_subdomain[e];

    for (std::size_t s = 0; s < soup.simplices.size(); ++s) {
        const std::size_t e = soup.simplex_element[s];
        if (e >= n_el)
            throw std::invalid_argument("build_from_simplices: element index out of range");
        auto& K = mesh.elements[e];
        K.simplices.push_back(soup.simplices[s]);
        const auto pts = mesh.simplex_points(soup.simplices[s]);
        const double vol = simplex_measure<Dim>(pts);
        if (!(vol > 0.0))
            throw std::invalid_argument("build_from_simplices: degenerate simplex");
        K.measure += vol;
        for (const auto& p : pts)
            K.bbox.extend(p);
    }
    for (std::size_t e = 0; e < n_el; ++e) {
        auto& K = mesh.elements[e];
        if (K.simplices.empty())
            throw std::invalid_argument("build_from_simplices: empty element");
        K.diameter = element_diameter(mesh, K);
        const int sd = static_cast<int>(K.subdomain);
        mesh.by_subdomain[sd].push_back(e);
    }
    mesh.local_index.assign(n_el, npos);
    for (auto& list : mesh.by_subdomain)
        for (std::size_t i = 0; i < list.size(); ++i)
            mesh.local_index[list[i]] = i;

    struct Incidence {
        std::size_t element, simplex_in_element;
        int omit;
        std::size_t simplex_global;
    };
    std::map<Facet<Dim>, std::vector<Incidence>> incidence;
    std::vector<std::size_t> counter(n_el, 0);
    for (std::size_t s = 0; s < soup.simplices.size(); ++s) {
        const std::size_t e = soup.simplex_element[s];
        const std::size_t local = counter[e]++;
        for (int i = 0; i <= Dim; ++i)
            incidence[detail::sorted<Dim>(detail::facet_of<Dim>(soup.simplices[s], i))].push_back({e, local, i, s});
    }

    for (const auto& [key, inc] : incidence) {
        if (inc.size() > 2)
            throw std::invalid_argument("build_from_simplices: non-manifold facet");
        if (inc.size() == 2 && inc[0].element == inc[1].element)
            continue;
        Face<Dim> F;
        std::array<Incidence, 2> sides{inc[0], inc[0]};
        if (inc.size() == 2) {
            sides = {inc[0], inc[1]};
            const auto s0 = mesh.elements[sides[0].element].subdomain;
            const auto s1 = mesh.elements[sides[1].element].subdomain;
            if (s0 == s1) {
                F.kind = s0 == Subdomain::el ? FaceKind::InternalEl : FaceKind::InternalF;
                if (sides[0].element > sides[1].element)
                    std::swap(sides[0], sides[1]);
            } else {
                F.kind = FaceKind::Interface;
                if (s0 == Subdomain::f)
                    std::swap(sides[0], sides[1]);
            }
            F.owners = {sides[0].element, sides[1].element};
            F.owner_simplex = {sides[0].simplex_in_element, sides[1].simplex_in_element};
        } else {
            F.owners = {sides[0].element, npos};
            F.owner_simplex = {sides[0].simplex_in_element, npos};
        }
        const auto& S = soup.simplices[sides[0].simplex_global];
        F.vertices = detail::facet_of<Dim>(S, sides[0].omit);
        const auto fp = mesh.facet_points(F.vertices);
        F.normal = facet_normal<Dim>(fp, mesh.vertices[S[sides[0].omit]]);
        F.measure = simplex_measure<Dim>(fp);
        F.centroid.setZero();
        for (const auto& p : fp)
            F.centroid += p / Dim;
        const FaceTag* known = nullptr;
        if (soup.inherited) {
            auto it = soup.inherited->find(key);
            if (it != soup.inherited->end())
                known = &it->second;
        }
        if (inc.size() == 1 && known) {
            F.kind = known->kind;
        } else if (inc.size() == 1) {
            if (!soup.tag)
                throw std::invalid_argument("build_from_simplices: boundary facet but no tagger");
            F.kind = soup.tag(F.centroid, F.normal, mesh.elements[F.owners[0]].subdomain);
            if (!is_boundary(F.kind) || face_subdomain(F.kind) != mesh.elements[F.owners[0]].subdomain)
                throw std::invalid_argument("build_from_simplices: tagger returned kind " +
                                            std::string(to_string(F.kind)) + " for a boundary facet");
        }
        if (known)
            F.marker = known->marker;
        else if (soup.marker)
            F.marker = soup.marker(F.centroid, F.kind);
        const std::size_t id = mesh.faces.size();
        mesh.faces.push_back(F);
        mesh.elements[F.owners[0]].faces.push_back(id);
        if (F.two_sided())
            mesh.elements[F.owners[1]].faces.push_back(id);
    }
    return mesh;
}

/// Verify the structural invariants of a mesh. Throws std::logic_error
/// describing the first violation.
template <int Dim>
void check_mesh(const PolyMesh<Dim>& mesh, double rel_tol = 1e-12)
{
    auto fail = [](const std::string& what) { throw std::logic_error("mesh invariant violated: " + what); };
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        const auto& K = mesh.elements[e];
        double sum = 0.0;
        for (const auto& s : K.simplices)
            sum += simplex_measure<Dim>(mesh.simplex_points(s));
        if (std::abs(sum - K.measure) > rel_tol * K.measure)
            fail("sub-simplex measures of element " + std::to_string(e));
        // Divergence theorem: sum |F| n_F = 0 and sum |F| x_F . n_F = Dim |K|.
        Point<Dim> flux = Point<Dim>::Zero();
        double vol = 0.0, bmeasure = 0.0;
        for (auto fi : K.faces) {
            const auto& F = mesh.faces[fi];
            const int s = F.side_of(e);
            if (s < 0)
                fail("face list of element " + std::to_string(e));
            const Point<Dim> n = F.normal_from(s);
            flux += F.measure * n;
            vol += F.measure * F.centroid.dot(n);
            bmeasure += F.measure;
        }
        if (flux.norm() > 1e-10 * bmeasure)
            fail("face normals/measures do not close element " + std::to_string(e));
        if (std::abs(vol / Dim - K.measure) > 1e-10 * K.measure)
            fail("boundary faces do not enclose the measure of element " + std::to_string(e));
    }
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& F = mesh.faces[i];
        if (std::abs(F.normal.norm() - 1.0) > 1e-12)
            fail("non-unit normal on face " + std::to_string(i));
        if (is_internal(F.kind)) {
            if (!F.two_sided())
                fail("internal face with one owner");
            const auto s0 = mesh.elements[F.owners[0]].subdomain, s1 = mesh.elements[F.owners[1]].subdomain;
            if (s0 != s1 || s0 != face_subdomain(F.kind))
                fail("internal face across subdomains");
        } else if (F.kind == FaceKind::Interface) {
            if (!F.two_sided() || mesh.elements[F.owners[0]].subdomain != Subdomain::el ||
                mesh.elements[F.owners[1]].subdomain != Subdomain::f)
                fail("interface face must be owned by (el, f)");
            if (mesh.interface_partner(i, mesh.interface_partner(i, F.owners[0])) != F.owners[0])
                fail("interface pairing is not an involution");
        } else {
            if (F.two_sided())
                fail("boundary face with two owners");
            if (mesh.elements[F.owners[0]].subdomain != face_subdomain(F.kind))
                fail("boundary face kind does not match owner subdomain");
        }
    }
}

// ---------------------------------------------------------------------------
// Structured generators.

enum class CellLabel : std::uint8_t { el, f, hole };

/// Description of a rectangular two-domain geometry on a Cartesian grid.
/// The grid has (nx * x_factor) x (ny * y_factor) cells; each cell is
/// classified by its center and split into two triangles.
struct TwoDomainSpec {
    std::string name;
    BoundingBox<2> box;
    int x_factor = 1;
    int y_factor = 1;
    bool require_both = true;
    std::function<CellLabel(const Point<2>&)> classify;
    std::function<FaceKind(const Point<2>&, const Point<2>&, Subdomain)> tag;
    std::function<int(const Point<2>&, FaceKind)> marker;
};

inline PolyMesh<2> build_structured_mesh(int nx, int ny, const TwoDomainSpec& geo)
{
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("build_structured_mesh: nx, ny must be >= 1");
    const int Nx = nx * geo.x_factor, Ny = ny * geo.y_factor;
    const Point<2> lo = geo.box.lo, hi = geo.box.hi;
    if (!(hi.x() > lo.x() && hi.y() > lo.y()))
        throw std::invalid_argument("build_structured_mesh: degenerate bounding box");
    const double dx = (hi.x() - lo.x()) / Nx, dy = (hi.y() - lo.y()) / Ny;

    std::vector<CellLabel> label(static_cast<std::size_t>(Nx) * Ny);
    std::vector<std::size_t> vmap(static_cast<std::size_t>(Nx + 1) * (Ny + 1), npos);
    SimplexSoup<2> soup;
    auto vid = [&](int i, int j) {
        auto& slot = vmap[static_cast<std::size_t>(j) * (Nx + 1) + i];
        if (slot == npos) {
            slot = soup.vertices.size();
            soup.vertices.emplace_back(i == Nx ? hi.x() : lo.x() + i * dx, j == Ny ? hi.y() : lo.y() + j * dy);
        }
        return slot;
    };
    std::array<std::size_t, 2> count{0, 0};
    for (int j = 0; j < Ny; ++j) {
        for (int i = 0; i < Nx; ++i) {
            const Point<2> c(lo.x() + (i + 0.5) * dx, lo.y() + (j + 0.5) * dy);
            const CellLabel L = geo.classify(c);
            if (L == CellLabel::hole)
                continue;
            const Subdomain sd = L == CellLabel::el ? Subdomain::el : Subdomain::f;
            ++count[static_cast<int>(sd)];
            const std::size_t e = soup.element_subdomain.size();
            soup.element_subdomain.push_back(sd);
            const auto v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            soup.simplices.push_back({v00, v10, v11});
            soup.simplices.push_back({v00, v11, v01});
            soup.simplex_element.insert(soup.simplex_element.end(), {e, e});
        }
    }
    if (soup.element_subdomain.empty())
        throw std::invalid_argument("build_structured_mesh: geometry '" + geo.name + "' has no cells");
    if (geo.require_both && (count[0] == 0 || count[1] == 0))
        throw std::invalid_argument("build_structured_mesh: geometry '" + geo.name +
                                    "' has a zero-measure subdomain");
    soup.tag = geo.tag;
    soup.marker = geo.marker;
    return build_from_simplices(soup);
}

/// Omega_el = (0,1)^2 above Omega_f = (0,1)x(-1,0), interface y = 0.
/// All outer boundaries are Dirichlet (el) / wall (f).
inline TwoDomainSpec stacked_unit_squares()
{
    TwoDomainSpec g;
    g.name = "stacked";
    g.box.lo = Point<2>(0.0, -1.0);
    g.box.hi = Point<2>(1.0, 1.0);
    g.x_factor = 1;
    g.y_factor = 2;
    g.classify = [](const Point<2>& c) { return c.y() > 0.0 ? CellLabel::el : CellLabel::f; };
    g.tag = [](const Point<2>&, const Point<2>&, Subdomain s) {
        return s == Subdomain::el ? FaceKind::DirichletEl : FaceKind::WallF;
    };
    return g;
}

/// Same stacked squares, but the bottom of the fluid box is an outlet and the
/// top of the poroelastic box is a Neumann boundary.
inline TwoDomainSpec stacked_with_outlet()
{
    auto g = stacked_unit_squares();
    g.name = "stacked-outlet";
    g.tag = [](const Point<2>& c, const Point<2>&, Subdomain s) {
        if (s == Subdomain::el)
            return c.y() > 1.0 - 1e-12 ? FaceKind::NeumannEl : FaceKind::DirichletEl;
        return c.y() < -1.0 + 1e-12 ? FaceKind::OutletF : FaceKind::WallF;
    };
    return g;
}

/// Two-dimensional analogue of the tissue/ventricle geometry: a poroelastic
/// block (lengths in metres) containing a fluid cavity drained by a vertical
/// canal that exits through the bottom boundary. The canal walls are part of
/// the interface; faces there carry marker 1, the cavity interface marker 0.
/// The outer tissue boundary is traction free and impermeable (NeumannEl).
/// Base grid is 16 x 20 cells of 2.5 mm.
inline TwoDomainSpec cavity_canal_geometry()
{
    TwoDomainSpec g;
    g.name = "cavity-canal";
    g.box.lo = Point<2>(0.0, 0.0);
    g.box.hi = Point<2>(0.04, 0.05);
    g.x_factor = 16;
    g.y_factor = 20;
    constexpr double cav_x0 = 0.010, cav_x1 = 0.030, cav_y0 = 0.025, cav_y1 = 0.035;
    constexpr double can_x0 = 0.0175, can_x1 = 0.0225;
    g.classify = [=](const Point<2>& c) {
        const bool cavity = c.x() > cav_x0 && c.x() < cav_x1 && c.y() > cav_y0 && c.y() < cav_y1;
        const bool canal = c.x() > can_x0 && c.x() < can_x1 && c.y() < cav_y0;
        return cavity || canal ? CellLabel::f : CellLabel::el;
    };
    g.tag = [](const Point<2>& c, const Point<2>&, Subdomain s) {
        if (s == Subdomain::f)
            return c.y() < 1e-12 ? FaceKind::OutletF : FaceKind::WallF;
        return FaceKind::NeumannEl;
    };
    g.marker = [=](const Point<2>& c, FaceKind k) {
        if (k != FaceKind::Interface)
            return 0;
        return c.y() < cav_y0 - 1e-12 ? 1 : 0;
    };
    return g;
}

/// Unit square with circular inclusions removed (staircase approximation on
/// the Cartesian grid); single subdomain, Dirichlet everywhere.
struct Inclusion {
    Point<2> center;
    double radius;
};

inline TwoDomainSpec square_with_inclusions(std::vector<Inclusion> holes)
{
    TwoDomainSpec g;
    g.name = "inclusions";
    g.box.lo = Point<2>(0.0, 0.0);
    g.box.hi = Point<2>(1.0, 1.0);
    g.require_both = false;
    g.classify = [holes = std::move(holes)](const Point<2>& c) {
        for (const auto& h : holes)
            if ((c - h.center).norm() < h.radius)
                return CellLabel::hole;
        return CellLabel::el;
    };
    g.tag = [](const Point<2>&, const Point<2>&, Subdomain) { return FaceKind::DirichletEl; };
    return g;
}

/// Unit cube (0,1)^3 above (0,1)^2 x (-1,0), Kuhn split of n^3 hexahedra per
/// subdomain into 6 tetrahedra each. Each hexahedron is one element.
inline PolyMesh<3> build_stacked_cubes(int n)
{
    if (n < 1)
        throw std::invalid_argument("build_stacked_cubes: n must be >= 1");
    const int Nz = 2 * n;
    const double h = 1.0 / n;
    SimplexSoup<3> soup;
    auto vid = [&](int i, int j, int k) {
        return static_cast<std::size_t>((k * (n + 1) + j) * (n + 1) + i);
    };
    for (int k = 0; k <= Nz; ++k)
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i)
                soup.vertices.emplace_back(i * h, j * h, -1.0 + k * h);
    // Kuhn triangulation: the 6 monotone lattice paths from corner 000 to 111.
    static constexpr std::array<std::array<int, 3>, 6> perms = {
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (int k = 0; k < Nz; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const std::size_t e = soup.element_subdomain.size();
                soup.element_subdomain.push_back(k >= n ? Subdomain::el : Subdomain::f);
                for (const auto& p : perms) {
                    std::array<int, 3> c{i, j, k};
                    Simplex<3> s{};
                    s[0] = vid(c[0], c[1], c[2]);
                    for (int q = 0; q < 3; ++q) {
                        ++c[p[q]];
                        s[q + 1] = vid(c[0], c[1], c[2]);
                    }
                    soup.simplices.push_back(s);
                    soup.simplex_element.push_back(e);
                }
            }
    soup.tag = [](const Point<3>&, const Point<3>&, Subdomain s) {
        return s == Subdomain::el ? FaceKind::DirichletEl : FaceKind::WallF;
    };
    return build_from_simplices(soup);
}

} // namespace polydg
