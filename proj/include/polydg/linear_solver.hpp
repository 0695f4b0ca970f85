#pragma once

#include <Eigen/SparseLU>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "sparse.hpp"

namespace polydg {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Sparse LU with row/column equilibration and iterative refinement.
/// last_residual() is ‖R(b - Ax)‖ / ‖Rb‖ with R the row scaling.
class LinearSolver {
public:
    double tolerance = 1e-10;
    int max_refinements = 8;
    int ruiz_passes = 20;

    LinearSolver() = default;
    explicit LinearSolver(const SpMat& a) { factorize(a); }

    void factorize(const SpMat& a)
    {
        if (a.rows() != a.cols())
            throw std::invalid_argument("LinearSolver: matrix is not square");
        a_ = a;
        a_.makeCompressed();
        const auto n = a_.rows();
        r_ = Vec::Ones(n);
        c_ = Vec::Ones(n);
        // Ruiz equilibration: repeatedly divide rows and columns by the square
        // root of their largest entry.
        for (int pass = 0; pass < ruiz_passes; ++pass) {
            Vec rmax = Vec::Zero(n), cmax = Vec::Zero(n);
            for (int k = 0; k < a_.outerSize(); ++k)
                for (SpMat::InnerIterator it(a_, k); it; ++it) {
                    const double v = std::abs(it.value()) * r_[it.row()] * c_[it.col()];
                    rmax[it.row()] = std::max(rmax[it.row()], v);
                    cmax[it.col()] = std::max(cmax[it.col()], v);
                }
            for (Eigen::Index i = 0; i < n; ++i) {
                if (rmax[i] == 0.0)
                    throw SolverError("LinearSolver: zero row " + std::to_string(i));
                if (cmax[i] == 0.0)
                    throw SolverError("LinearSolver: zero column " + std::to_string(i));
                r_[i] /= std::sqrt(rmax[i]);
                c_[i] /= std::sqrt(cmax[i]);
            }
            if ((rmax.array() - 1.0).abs().maxCoeff() < 1e-2 && (cmax.array() - 1.0).abs().maxCoeff() < 1e-2)
                break;
        }
        scaled_ = r_.asDiagonal() * a_ * c_.asDiagonal();
        scaled_.makeCompressed();
        lu_.compute(scaled_);
        if (lu_.info() != Eigen::Success)
            throw SolverError("LinearSolver: factorization failed: " + lu_.lastErrorMessage());
        ready_ = true;
    }

    [[nodiscard]] bool ready() const { return ready_; }
    [[nodiscard]] Eigen::Index size() const { return a_.rows(); }

    [[nodiscard]] Vec solve(const Vec& b) const
    {
        if (!ready_)
            throw std::logic_error("LinearSolver: solve before factorize");
        if (b.size() != a_.rows())
            throw std::invalid_argument("LinearSolver: right-hand side has wrong length");
        // Residuals are measured on the row-equilibrated system R A x = R b.
        const Vec rb = r_.asDiagonal() * b;
        const double bn = rb.norm();
        if (bn == 0.0)
            return Vec::Zero(b.size());
        Vec x = c_.asDiagonal() * Vec(lu_.solve(rb));
        Vec res = r_.asDiagonal() * (b - a_ * x);
        for (int it = 0; it < max_refinements && res.norm() > tolerance * bn; ++it) {
            x += c_.asDiagonal() * Vec(lu_.solve(res));
            res = r_.asDiagonal() * (b - a_ * x);
        }
        last_residual_ = res.norm() / bn;
        if (!std::isfinite(last_residual_) || last_residual_ > tolerance) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "LinearSolver: relative residual %.3e above tolerance %.1e", last_residual_,
                          tolerance);
            throw SolverError(buf);
        }
        return x;
    }

    [[nodiscard]] double last_residual() const { return last_residual_; }

private:
    SpMat a_, scaled_;
    Vec r_, c_;
    Eigen::SparseLU<SpMat> lu_;
    bool ready_ = false;
    mutable double last_residual_ = 0.0;
};

inline Vec solve_linear(const SpMat& a, const Vec& b) { return LinearSolver(a).solve(b); }

} // namespace polydg
