#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "coupled_solver.hpp"

namespace polydg {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

inline double parse_double(const std::string& s)
{
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ')
        ++b;
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e)
        throw IoError("not a number: '" + s + "'");
    return v;
}

inline std::ofstream open_out(const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot write '" + path + "'");
    return os;
}

inline std::ifstream open_in(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot read '" + path + "'");
    return is;
}

inline void expect(std::istream& is, const std::string& word)
{
    std::string w;
    if (!(is >> w) || w != word)
        throw IoError("expected '" + word + "', found '" + w + "'");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Mesh text format (see docs/file_formats.md).

template <int Dim>
void write_mesh(std::ostream& os, const PolyMesh<Dim>& mesh)
{
    os << "polydg-mesh 1\ndim " << Dim << "\nvertices " << mesh.vertices.size() << '\n';
    for (const auto& v : mesh.vertices) {
        for (int d = 0; d < Dim; ++d)
            os << (d ? " " : "") << detail::fmt(v[d]);
        os << '\n';
    }
    os << "elements " << mesh.elements.size() << '\n';
    for (const auto& K : mesh.elements) {
        os << to_string(K.subdomain) << ' ' << K.simplices.size();
        for (const auto& s : K.simplices)
            for (auto v : s)
                os << ' ' << v;
        os << '\n';
    }
    os << "faces " << mesh.faces.size() << '\n';
    for (const auto& F : mesh.faces) {
        os << to_string(F.kind) << ' ' << F.marker;
        for (auto o : F.owners)
            os << ' ' << (o == npos ? -1 : static_cast<long long>(o));
        for (auto v : F.vertices)
            os << ' ' << v;
        os << '\n';
    }
}

/// Rebuilds the mesh from its simplices; boundary tags and markers come from
/// the face records.
template <int Dim>
PolyMesh<Dim> read_mesh(std::istream& is)
{
    std::string w;
    int version = 0, dim = 0;
    detail::expect(is, "polydg-mesh");
    is >> version;
    detail::expect(is, "dim");
    is >> dim;
    if (version != 1 || dim != Dim)
        throw IoError("read_mesh: unsupported version or dimension");
    SimplexSoup<Dim> soup;
    std::size_t n = 0;
    detail::expect(is, "vertices");
    is >> n;
    soup.vertices.resize(n);
    for (auto& v : soup.vertices)
        for (int d = 0; d < Dim; ++d) {
            is >> w;
            v[d] = detail::parse_double(w);
        }
    detail::expect(is, "elements");
    is >> n;
    soup.element_subdomain.resize(n);
    for (std::size_t e = 0; e < n; ++e) {
        std::size_t ns = 0;
        is >> w >> ns;
        soup.element_subdomain[e] = parse_subdomain(w);
        for (std::size_t k = 0; k < ns; ++k) {
            Simplex<Dim> s;
            for (auto& v : s)
                is >> v;
            soup.simplices.push_back(s);
            soup.simplex_element.push_back(e);
        }
    }
    detail::expect(is, "faces");
    is >> n;
    std::map<Facet<Dim>, FaceTag> tags;
    for (std::size_t f = 0; f < n; ++f) {
        int marker = 0;
        long long o0 = 0, o1 = 0;
        Facet<Dim> fv;
        is >> w >> marker >> o0 >> o1;
        for (auto& v : fv)
            is >> v;
        std::sort(fv.begin(), fv.end());
        tags[fv] = FaceTag{parse_face_kind(w), marker};
    }
    if (!is)
        throw IoError("read_mesh: truncated input");
    soup.inherited = &tags;
    auto mesh = build_from_simplices(soup);
    if (mesh.faces.size() != n)
        throw IoError("read_mesh: face records do not match the simplices");
    return mesh;
}

template <int Dim>
void save_mesh(const std::string& path, const PolyMesh<Dim>& mesh)
{
    auto os = detail::open_out(path);
    write_mesh(os, mesh);
}

template <int Dim>
PolyMesh<Dim> load_mesh(const std::string& path)
{
    auto is = detail::open_in(path);
    return read_mesh<Dim>(is);
}

// ---------------------------------------------------------------------------
// Field snapshots: the mesh followed by coefficient blocks and point values
// at the sub-simplex vertices of every element.

struct NamedField {
    std::string name;
    int ncomp = 1;
    Subdomain subdomain = Subdomain::el;
    Vec coeffs;
};

template <int Dim>
void write_fields(std::ostream& os, const PolyMesh<Dim>& mesh, int degree, double t,
                  const std::vector<NamedField>& fields)
{
    write_mesh(os, mesh);
    os << "time " << detail::fmt(t) << "\ndegree " << degree << "\nfields " << fields.size() << '\n';
    for (const auto& fd : fields) {
        DGSpace<Dim> V(mesh, fd.subdomain, degree);
        if (static_cast<std::size_t>(fd.coeffs.size()) != fd.ncomp * V.n_scalar_dofs())
            throw std::invalid_argument("write_fields: field '" + fd.name + "' has the wrong length");
        os << "field " << fd.name << ' ' << to_string(fd.subdomain) << ' ' << fd.ncomp << ' ' << fd.coeffs.size()
           << '\n';
        for (Eigen::Index i = 0; i < fd.coeffs.size(); ++i)
            os << detail::fmt(fd.coeffs[i]) << '\n';
        std::size_t npts = 0;
        for (std::size_t k = 0; k < V.n_elements(); ++k)
            npts += (Dim + 1) * V.element(k).simplices.size();
        os << "points " << npts << '\n';
        for (std::size_t k = 0; k < V.n_elements(); ++k) {
            std::vector<Point<Dim>> pts;
            for (const auto& s : V.element(k).simplices)
                for (auto v : s)
                    pts.push_back(mesh.vertices[v]);
            const auto vals = V.evaluate(fd.coeffs, fd.ncomp, k, pts);
            for (std::size_t q = 0; q < pts.size(); ++q) {
                os << V.global_element(k);
                for (int d = 0; d < Dim; ++d)
                    os << ' ' << detail::fmt(pts[q][d]);
                for (int c = 0; c < fd.ncomp; ++c)
                    os << ' ' << detail::fmt(vals(static_cast<Eigen::Index>(q), c));
                os << '\n';
            }
        }
    }
}

template <int Dim>
struct FieldFile {
    PolyMesh<Dim> mesh;
    double t = 0.0;
    int degree = 0;
    std::vector<NamedField> fields;
};

template <int Dim>
FieldFile<Dim> read_fields(std::istream& is)
{
    FieldFile<Dim> out;
    out.mesh = read_mesh<Dim>(is);
    std::string w;
    std::size_t nf = 0;
    detail::expect(is, "time");
    is >> w;
    out.t = detail::parse_double(w);
    detail::expect(is, "degree");
    is >> out.degree;
    detail::expect(is, "fields");
    is >> nf;
    for (std::size_t i = 0; i < nf; ++i) {
        NamedField fd;
        Eigen::Index n = 0;
        detail::expect(is, "field");
        is >> fd.name >> w >> fd.ncomp >> n;
        fd.subdomain = parse_subdomain(w);
        fd.coeffs.resize(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            is >> w;
            fd.coeffs[k] = detail::parse_double(w);
        }
        std::size_t npts = 0;
        detail::expect(is, "points");
        is >> npts;
        std::string line;
        std::getline(is, line);
        for (std::size_t k = 0; k < npts; ++k)
            std::getline(is, line);
        out.fields.push_back(std::move(fd));
    }
    if (!is)
        throw IoError("read_fields: truncated input");
    return out;
}

/// Snapshot of a coupled state: D, Z, P_<name> on el; U, Pf on f.
template <int Dim>
std::vector<NamedField> state_fields(const SystemState& s, const MaterialParams& mp)
{
    std::vector<NamedField> f{{"D", Dim, Subdomain::el, s.D}, {"Z", Dim, Subdomain::el, s.Z}};
    for (std::size_t j = 0; j < s.P.size(); ++j)
        f.push_back({"P_" + mp.networks[j].name, 1, Subdomain::el, s.P[j]});
    f.push_back({"U", Dim, Subdomain::f, s.U});
    f.push_back({"Pf", 1, Subdomain::f, s.Pf});
    return f;
}

template <int Dim>
void export_fields(const std::string& path, const PolyMesh<Dim>& mesh, int degree, const SystemState& s,
                   const MaterialParams& mp)
{
    auto os = detail::open_out(path);
    write_fields(os, mesh, degree, s.t, state_fields<Dim>(s, mp));
}

// ---------------------------------------------------------------------------
// Time series.

struct TimeSample {
    double t = 0.0, q_out = 0.0, q_sigma = 0.0, p_sigma = 0.0, energy = 0.0;
};

inline void write_timeseries(std::ostream& os, const std::vector<TimeSample>& series)
{
    if (series.empty())
        throw std::invalid_argument("write_timeseries: empty series");
    os << "time,Q_out,Q_sigma,P_sigma,energy\n";
    for (const auto& r : series)
        os << detail::fmt(r.t) << ',' << detail::fmt(r.q_out) << ',' << detail::fmt(r.q_sigma) << ','
           << detail::fmt(r.p_sigma) << ',' << detail::fmt(r.energy) << '\n';
}

inline void write_timeseries(const std::string& path, const std::vector<TimeSample>& series)
{
    auto os = detail::open_out(path);
    write_timeseries(os, series);
}

inline std::vector<TimeSample> read_timeseries(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != "time,Q_out,Q_sigma,P_sigma,energy")
        throw IoError("read_timeseries: bad header");
    std::vector<TimeSample> out;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::array<double, 5> v{};
        std::stringstream ss(line);
        std::string cell;
        for (auto& x : v) {
            if (!std::getline(ss, cell, ','))
                throw IoError("read_timeseries: short row '" + line + "'");
            x = detail::parse_double(cell);
        }
        out.push_back({v[0], v[1], v[2], v[3], v[4]});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run configuration.

struct ConfigError : std::runtime_error {
    std::vector<std::string> errors;
    explicit ConfigError(std::vector<std::string> e) : std::runtime_error(join(e)), errors(std::move(e)) {}

private:
    static std::string join(const std::vector<std::string>& e)
    {
        std::string s = "invalid configuration:";
        for (const auto& x : e)
            s += "\n  " + x;
        return s;
    }
};

struct MeshSpec {
    std::string geometry = "cavity-canal";
    int nx = 1, ny = 1;
    int agglomerate = 0; ///< parts per subdomain, 0 keeps the grid
};

struct OutputSpec {
    std::string timeseries = "timeseries.csv";
    std::string snapshot_dir;
    std::vector<double> snapshot_times;
    int sigma_marker = 0;
};

struct RunConfig {
    MeshSpec mesh;
    int degree = 1;
    MaterialParams params = physiological_params();
    PenaltyConfig penalty;
    TimeScheme scheme;
    double final_time = 3.0;
    FlowMode mode = FlowMode::stokes;
    double source_amplitude = 0.2 * std::numbers::pi; ///< g_E(t) = A sin(2π f t)
    double source_frequency = 1.0;
    OutputSpec output;
};

inline TwoDomainSpec geometry_by_name(const std::string& name)
{
    if (name == "cavity-canal")
        return cavity_canal_geometry();
    if (name == "stacked")
        return stacked_unit_squares();
    if (name == "stacked-outlet")
        return stacked_with_outlet();
    throw std::invalid_argument("unknown geometry '" + name + "'");
}

inline MaterialParams preset_by_name(const std::string& name)
{
    if (name == "physiological")
        return physiological_params();
    if (name == "unit")
        return unit_params();
    throw std::invalid_argument("unknown preset '" + name + "'");
}

namespace detail {

/// A value with an optional unit suffix, "1000 kg/m^3".
struct Quantity {
    std::string number, unit;
};

inline Quantity split_unit(const std::string& raw)
{
    std::string s = raw;
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    const auto sp = s.find_first_of(" \t");
    if (sp == std::string::npos)
        return {s, ""};
    const auto u = s.find_first_not_of(" \t", sp);
    return {s.substr(0, sp), s.substr(u)};
}

class ConfigReader {
public:
    explicit ConfigReader(const boost::property_tree::ptree& tree) : tree_(tree) {}

    void real(const std::string& key, const std::string& unit, double& target)
    {
        const auto raw = take(key);
        if (!raw)
            return;
        const auto q = split_unit(*raw);
        if (!q.unit.empty() && q.unit != unit) {
            errors.push_back(key + ": unit mismatch, expected '" + (unit.empty() ? "-" : unit) + "', got '" + q.unit +
                             "'");
            return;
        }
        try {
            target = parse_double(q.number);
        } catch (const IoError&) {
            errors.push_back(key + ": not a number: '" + *raw + "'");
        }
    }

    void integer(const std::string& key, int& target)
    {
        const auto raw = take(key);
        if (!raw)
            return;
        const auto q = split_unit(*raw);
        int v = 0;
        const auto r = std::from_chars(q.number.data(), q.number.data() + q.number.size(), v);
        if (r.ec != std::errc() || r.ptr != q.number.data() + q.number.size() || !q.unit.empty())
            errors.push_back(key + ": not an integer: '" + *raw + "'");
        else
            target = v;
    }

    void text(const std::string& key, std::string& target)
    {
        if (const auto raw = take(key))
            target = split_unit(*raw).number + (split_unit(*raw).unit.empty() ? "" : " " + split_unit(*raw).unit);
    }

    void boolean(const std::string& key, bool& target)
    {
        const auto raw = take(key);
        if (!raw)
            return;
        const auto v = split_unit(*raw).number;
        if (v == "true" || v == "1" || v == "yes")
            target = true;
        else if (v == "false" || v == "0" || v == "no")
            target = false;
        else
            errors.push_back(key + ": not a boolean: '" + *raw + "'");
    }

    void reals(const std::string& key, const std::string& unit, std::vector<double>& target)
    {
        const auto raw = take(key);
        if (!raw)
            return;
        target.clear();
        std::stringstream ss(*raw);
        std::string item;
        while (std::getline(ss, item, ',')) {
            double v = 0.0;
            const auto before = errors.size();
            auto q = split_unit(item);
            if (q.number.empty())
                continue;
            if (!q.unit.empty() && q.unit != unit) {
                errors.push_back(key + ": unit mismatch, expected '" + unit + "', got '" + q.unit + "'");
                continue;
            }
            try {
                v = parse_double(q.number);
            } catch (const IoError&) {
                errors.push_back(key + ": not a number: '" + item + "'");
            }
            if (errors.size() == before)
                target.push_back(v);
        }
    }

    void require(const std::string& key)
    {
        if (!tree_.get_optional<std::string>(path(key)))
            errors.push_back("missing key " + key);
    }

    /// Flag every key that was not consumed.
    void reject_unknown()
    {
        for (const auto& [sec, child] : tree_) {
            if (child.empty() && !child.data().empty()) {
                errors.push_back("unexpected key '" + sec + "' outside a section");
                continue;
            }
            if (!known_sections_.count(sec)) {
                errors.push_back("unknown section [" + sec + "]");
                continue;
            }
            for (const auto& kv : child)
                if (!used_.count(sec + "." + kv.first))
                    errors.push_back("unknown key " + sec + "." + kv.first);
        }
    }

    void section(const std::string& s) { known_sections_.insert(s); }

    std::vector<std::string> errors;

private:
    static boost::property_tree::ptree::path_type path(const std::string& key) { return {key, '.'}; }

    std::optional<std::string> take(const std::string& key)
    {
        used_.insert(key);
        const auto v = tree_.get_optional<std::string>(path(key));
        if (!v)
            return std::nullopt;
        return *v;
    }

    const boost::property_tree::ptree& tree_;
    std::set<std::string> used_, known_sections_;
};

} // namespace detail

/// Parse and validate an INI run configuration. All problems are collected
/// and thrown together as a ConfigError.
inline RunConfig parse_config_stream(std::istream& is)
{
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
    }
    detail::ConfigReader rd(tree);
    RunConfig c;
    for (const char* s : {"mesh", "space", "physics", "time", "output"})
        rd.section(s);

    for (const char* k : {"mesh.geometry", "space.degree", "physics.preset"})
        rd.require(k);
    rd.text("mesh.geometry", c.mesh.geometry);
    rd.integer("mesh.nx", c.mesh.nx);
    rd.integer("mesh.ny", c.mesh.ny);
    rd.integer("mesh.agglomerate", c.mesh.agglomerate);

    rd.integer("space.degree", c.degree);
    rd.real("space.eta", "", c.penalty.eta);
    double zeta = c.penalty.zeta[0];
    rd.real("space.zeta", "", zeta);
    c.penalty.zeta = {zeta};
    rd.real("space.gamma_v", "", c.penalty.gamma_v);
    rd.real("space.gamma_p", "", c.penalty.gamma_p);
    rd.boolean("space.degree_scaling", c.penalty.degree_scaling);

    std::string preset = "physiological";
    rd.text("physics.preset", preset);
    try {
        c.params = preset_by_name(preset);
    } catch (const std::invalid_argument& e) {
        rd.errors.push_back(std::string("physics.preset: ") + e.what());
    }
    auto& mp = c.params;
    auto& nw = mp.networks.at(mp.E);
    rd.real("physics.rho_el", "kg/m^3", mp.rho_el);
    rd.real("physics.rho_f", "kg/m^3", mp.rho_f);
    rd.real("physics.mu_el", "Pa", mp.mu_el);
    rd.real("physics.lambda", "Pa", mp.lambda);
    rd.real("physics.mu_f", "Pa s", mp.mu_f);
    rd.real("physics.alpha_E", "", nw.alpha);
    rd.real("physics.c_E", "m^2/N", nw.c);
    rd.real("physics.k_E", "m^2", nw.k);
    rd.real("physics.mu_E", "Pa s", nw.mu);
    rd.real("physics.beta_e_E", "m^2/(N s)", nw.beta_e);
    rd.real("physics.gamma", "", mp.gamma);
    std::string mode = "stokes";
    rd.text("physics.mode", mode);
    try {
        c.mode = parse_flow_mode(mode);
    } catch (const std::invalid_argument& e) {
        rd.errors.push_back(std::string("physics.mode: ") + e.what());
    }
    rd.real("physics.source_amplitude", "1/s", c.source_amplitude);
    rd.real("physics.source_frequency", "Hz", c.source_frequency);

    rd.real("time.dt", "s", c.scheme.dt);
    rd.real("time.T", "s", c.final_time);
    rd.real("time.theta", "", c.scheme.theta);
    rd.real("time.beta", "", c.scheme.beta);
    rd.real("time.gamma", "", c.scheme.gamma);

    rd.text("output.timeseries", c.output.timeseries);
    rd.text("output.snapshot_dir", c.output.snapshot_dir);
    rd.reals("output.snapshot_times", "s", c.output.snapshot_times);
    rd.integer("output.sigma_marker", c.output.sigma_marker);

    rd.reject_unknown();

    // Range checks.
    auto& err = rd.errors;
    try {
        geometry_by_name(c.mesh.geometry);
    } catch (const std::invalid_argument& e) {
        err.push_back(std::string("mesh.geometry: ") + e.what());
    }
    if (c.mesh.nx < 1 || c.mesh.ny < 1)
        err.push_back("mesh.nx, mesh.ny must be >= 1");
    if (c.mesh.agglomerate < 0)
        err.push_back("mesh.agglomerate must be >= 0");
    if (c.degree < 1 || c.degree > 8)
        err.push_back("space.degree must lie in [1, 8]");
    try {
        c.penalty.validate(mp.n_networks());
    } catch (const std::invalid_argument& e) {
        err.push_back(std::string("space: ") + e.what());
    }
    for (const auto& v : mp.violations())
        err.push_back("physics: " + v);
    try {
        c.scheme.validate();
    } catch (const std::invalid_argument& e) {
        err.push_back(std::string("time: ") + e.what());
    }
    if (!(c.final_time > 0.0))
        err.push_back("time.T must be > 0");
    else if (c.scheme.dt > 0.0 && c.scheme.dt > c.final_time)
        err.push_back("time.dt must not exceed time.T");
    if (!(c.source_frequency >= 0.0))
        err.push_back("physics.source_frequency must be >= 0");
    for (double ts : c.output.snapshot_times)
        if (!(ts >= 0.0 && ts <= c.final_time))
            err.push_back("output.snapshot_times: " + detail::fmt(ts) + " outside [0, T]");
    if (c.output.timeseries.empty())
        err.push_back("output.timeseries must not be empty");
    if (!err.empty())
        throw ConfigError(err);
    return c;
}

inline RunConfig parse_config_string(const std::string& text)
{
    std::istringstream is(text);
    return parse_config_stream(is);
}

inline RunConfig parse_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError({"cannot read '" + path + "'"});
    return parse_config_stream(is);
}

} // namespace polydg
