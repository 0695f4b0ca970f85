#pragma once

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Sparse>

namespace polydg {

using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;
using Vec = Eigen::VectorXd;

/// Add a dense local block at the given global rows/cols.
inline void scatter(Triplets& out, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols,
                    const Eigen::MatrixXd& block)
{
    for (Eigen::Index j = 0; j < block.cols(); ++j)
        for (Eigen::Index i = 0; i < block.rows(); ++i)
            if (block(i, j) != 0.0)
                out.emplace_back(static_cast<int>(rows[i]), static_cast<int>(cols[j]), block(i, j));
}

inline void scatter(Vec& out, const std::vector<std::size_t>& rows, const Eigen::VectorXd& local)
{
    for (Eigen::Index i = 0; i < local.size(); ++i)
        out[static_cast<Eigen::Index>(rows[i])] += local[i];
}

inline SpMat to_sparse(std::size_t rows, std::size_t cols, const Triplets& t)
{
    SpMat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

/// Run body(begin, end, out) over [0, n) split into `threads` contiguous
/// chunks, each with its own triplet list; the lists are concatenated in
/// chunk order, so the result does not depend on scheduling.
template <class Body>
Triplets chunked_triplets(std::size_t n, int threads, Body&& body)
{
    const std::size_t nt = std::max<std::size_t>(1, std::min<std::size_t>(threads > 0 ? threads : 1, n));
    std::vector<Triplets> parts(nt);
    auto range = [&](std::size_t c) { return std::pair{c * n / nt, (c + 1) * n / nt}; };
    if (nt == 1) {
        body(std::size_t{0}, n, parts[0]);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t c = 0; c < nt; ++c)
            pool.emplace_back([&, c] {
                const auto [b, e] = range(c);
                body(b, e, parts[c]);
            });
        for (auto& th : pool)
            th.join();
    }
    Triplets all;
    for (auto& p : parts)
        all.insert(all.end(), p.begin(), p.end());
    return all;
}

/// Sparse triplet text format: "rows cols nnz" then one "i j value" line per
/// stored entry (0-based, column-major order, %.17g).
inline void write_triplets(const SpMat& m, const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot write " + path);
    os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n' << std::setprecision(17);
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

inline SpMat read_triplets(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot read " + path);
    long rows = 0, cols = 0, nnz = 0;
    is >> rows >> cols >> nnz;
    Triplets t;
    t.reserve(static_cast<std::size_t>(nnz));
    for (long k = 0; k < nnz; ++k) {
        long i = 0, j = 0;
        double v = 0.0;
        if (!(is >> i >> j >> v))
            throw std::runtime_error("truncated triplet file " + path);
        t.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }
    return to_sparse(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), t);
}

/// max |A - A^T| / max |A|, 0 for a zero matrix.
inline double asymmetry(const SpMat& a)
{
    const SpMat d = a - SpMat(a.transpose());
    double md = 0.0, ma = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
        for (SpMat::InnerIterator it(d, k); it; ++it)
            md = std::max(md, std::abs(it.value()));
    for (int k = 0; k < a.outerSize(); ++k)
        for (SpMat::InnerIterator it(a, k); it; ++it)
            ma = std::max(ma, std::abs(it.value()));
    return ma > 0.0 ? md / ma : 0.0;
}

inline double max_abs(const SpMat& a)
{
    double m = 0.0;
    for (int k = 0; k < a.outerSize(); ++k)
        for (SpMat::InnerIterator it(a, k); it; ++it)
            m = std::max(m, std::abs(it.value()));
    return m;
}

} // namespace polydg
