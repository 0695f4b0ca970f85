#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mesh.hpp"

namespace polydg {

/// One fluid network of the poroelastic medium.
struct Compartment {
    std::string name = "E";
    double mu = 1.0;     // viscosity [Pa s]
    double alpha = 1.0;  // Biot-Willis coefficient [-]
    double c = 1.0;      // storage coefficient [m^2/N]
    double k = 1.0;      // isotropic permeability [m^2]
    double beta_e = 0.0; // external exchange [m^2/(N s)]
};

struct MaterialParams {
    double rho_el = 1.0;
    double rho_f = 1.0;
    double mu_el = 1.0;
    double lambda = 1.0;
    double mu_f = 1.0;
    std::vector<Compartment> networks{Compartment{}};
    /// Inter-network exchange coefficients beta_jk (symmetric, zero diagonal).
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(1, 1);
    /// Index of the network exchanging mass through the interface.
    std::size_t E = 0;
    /// Slip rate of the BJS condition.
    double gamma = 1.0;

    [[nodiscard]] std::size_t n_networks() const { return networks.size(); }
    [[nodiscard]] const Compartment& exchange_network() const { return networks.at(E); }

    /// Coefficient of the BJS friction term.
    [[nodiscard]] double bjs_coefficient() const { return gamma * mu_f / std::sqrt(exchange_network().k); }

    /// All violated constraints, empty when valid.
    [[nodiscard]] std::vector<std::string> violations() const
    {
        std::vector<std::string> out;
        auto positive = [&](double v, const std::string& what) {
            if (!(v > 0.0))
                out.push_back(what + " must be > 0");
        };
        positive(rho_el, "rho_el");
        positive(rho_f, "rho_f");
        positive(mu_el, "mu_el");
        positive(mu_f, "mu_f");
        if (!(lambda >= 0.0))
            out.push_back("lambda must be >= 0");
        if (!(gamma >= 0.0))
            out.push_back("slip rate must be >= 0");
        if (networks.empty())
            out.push_back("at least one network is required");
        for (const auto& n : networks) {
            positive(n.mu, "mu_" + n.name);
            positive(n.c, "c_" + n.name);
            positive(n.k, "k_" + n.name);
            if (!(n.alpha > 0.0 && n.alpha <= 1.0))
                out.push_back("alpha_" + n.name + " must be in (0, 1]");
            if (!(n.beta_e >= 0.0))
                out.push_back("beta_e_" + n.name + " must be >= 0");
        }
        if (E >= networks.size())
            out.push_back("exchange network index out of range");
        const auto J = static_cast<Eigen::Index>(networks.size());
        if (beta.rows() != J || beta.cols() != J) {
            out.push_back("beta must be a square matrix over the networks");
        } else {
            if ((beta - beta.transpose()).cwiseAbs().maxCoeff() > 0.0)
                out.push_back("beta must be symmetric");
            if (beta.minCoeff() < 0.0)
                out.push_back("beta must be nonnegative");
        }
        return out;
    }

    void validate() const
    {
        const auto v = violations();
        if (v.empty())
            return;
        std::string msg = "invalid material parameters:";
        for (const auto& s : v)
            msg += "\n  " + s;
        throw std::invalid_argument(msg);
    }
};

/// Physiological parameter set with a single network E.
inline MaterialParams physiological_params()
{
    MaterialParams p;
    p.rho_el = 1000.0;
    p.rho_f = 1000.0;
    p.mu_el = 216.0;
    p.lambda = 11567.0;
    p.mu_f = 3.5e-3;
    p.networks = {Compartment{"E", 3.5e-3, 0.49, 1e-6, 1e-16, 0.0}};
    p.beta = Eigen::MatrixXd::Zero(1, 1);
    p.E = 0;
    p.gamma = 1.0;
    return p;
}

/// All coefficients one except alpha_E = 0.5.
inline MaterialParams unit_params()
{
    MaterialParams p;
    p.networks = {Compartment{"E", 1.0, 0.5, 1.0, 1.0, 1.0}};
    p.beta = Eigen::MatrixXd::Zero(1, 1);
    p.gamma = 1.0;
    return p;
}

struct PenaltyConfig {
    double eta = 10.0;
    /// One constant per network; a single entry is broadcast to all networks.
    std::vector<double> zeta{10.0};
    double gamma_v = 10.0;
    double gamma_p = 10.0;
    /// Multiply eta, zeta and gamma_v by m^2 (off: the plain 1/h scaling).
    bool degree_scaling = true;

    [[nodiscard]] double degree_factor(int degree) const { return degree_scaling ? double(degree) * degree : 1.0; }

    [[nodiscard]] double zeta_for(std::size_t j) const { return zeta.size() == 1 ? zeta[0] : zeta.at(j); }

    void validate(std::size_t n_networks) const
    {
        if (!(eta > 0.0 && gamma_v > 0.0 && gamma_p > 0.0))
            throw std::invalid_argument("penalty constants must be > 0");
        if (zeta.size() != 1 && zeta.size() != n_networks)
            throw std::invalid_argument("need one zeta per network or a single value");
        for (double z : zeta)
            if (!(z > 0.0))
                throw std::invalid_argument("penalty constants must be > 0");
    }
};

struct FacePenalties {
    double eta = 0.0;
    std::vector<double> zeta;
    double gamma_v = 0.0;
    double gamma_p = 0.0;
};

/// Penalty coefficients from the harmonic mean face size {h}_H.
inline FacePenalties penalty_coefficients(double h_harm, int dim, const MaterialParams& mp, const PenaltyConfig& cfg,
                                          int degree = 1)
{
    const double s = cfg.degree_factor(degree);
    FacePenalties out;
    out.eta = s * cfg.eta * (2.0 * mp.mu_el + dim * mp.lambda) / h_harm;
    out.zeta.resize(mp.networks.size());
    for (std::size_t j = 0; j < mp.networks.size(); ++j)
        out.zeta[j] = s * cfg.zeta_for(j) * mp.networks[j].k / (std::sqrt(mp.networks[j].mu) * h_harm);
    out.gamma_v = s * cfg.gamma_v * mp.mu_f / h_harm;
    out.gamma_p = cfg.gamma_p * h_harm;
    return out;
}

template <int Dim>
FacePenalties penalty_coefficients(const PolyMesh<Dim>& mesh, const Face<Dim>& F, const MaterialParams& mp,
                                   const PenaltyConfig& cfg, int degree = 1)
{
    if (F.kind == FaceKind::Interface)
        throw std::invalid_argument("penalty_coefficients: interface faces carry no penalty");
    return penalty_coefficients(harmonic_h(mesh, F), Dim, mp, cfg, degree);
}

} // namespace polydg
