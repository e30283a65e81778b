#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "pcbf/matrix.hpp"

namespace pcbf::test {

// Small seeded generator for hand-rolled property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    Matrix matrix(std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
        Matrix m(r, c);
        for (std::size_t i = 0; i < m.size(); ++i)
            m[i] = uniform(lo, hi);
        return m;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
    return e;
}

inline double max_diff(const Matrix& a, const Matrix& b) { return (to_eigen(a) - to_eigen(b)).cwiseAbs().maxCoeff(); }

inline double spectral_radius(const Matrix& a) {
    return to_eigen(a).eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace pcbf::test

#include "pcbf/lifted_model.hpp"

namespace pcbf::test {

// Random single-input model with spectral radius ~0.98 plus an output row
// whose relative degree is exactly rho: c0 is orthogonal to B, AB, ...,
// A^(rho-2) B (Gram-Schmidt) and generically not to A^(rho-1) B.
struct RelDegreeInstance {
    LtiModel model;
    Matrix c0;
};

inline RelDegreeInstance random_rel_degree_instance(Gen& g, std::size_t n, int rho) {
    for (;;) {
        Matrix a = g.matrix(n, n);
        const double radius = spectral_radius(a);
        if (radius < 1e-3)
            continue;
        a *= 0.98 / radius;
        const Matrix b = g.matrix(n, 1);
        std::vector<Eigen::VectorXd> basis;
        Eigen::VectorXd col = to_eigen(b);
        const Eigen::MatrixXd ae = to_eigen(a);
        for (int j = 0; j + 1 < rho; ++j) {
            Eigen::VectorXd v = col;
            for (const auto& q : basis)
                v -= q.dot(v) * q;
            if (v.norm() > 1e-8)
                basis.push_back(v.normalized());
            col = ae * col;
        }
        Eigen::VectorXd c = to_eigen(g.matrix(n, 1));
        for (const auto& q : basis)
            c -= q.dot(c) * q;
        if (c.norm() < 1e-3)
            continue;
        c.normalize();
        Matrix c0(1, n);
        for (std::size_t i = 0; i < n; ++i)
            c0(0, i) = c(static_cast<Eigen::Index>(i));
        LtiModel model(a, b, 1.0);
        // Keep only well-conditioned instances: the first nonzero Markov
        // parameter must clearly exceed the zero threshold.
        Matrix ca = c0;
        for (int j = 0; j + 1 < rho; ++j)
            ca = ca * a;
        if (std::abs((ca * b)[0]) < 1e-2)
            continue;
        if (relative_degree(model, c0, static_cast<int>(n) + rho) != rho)
            continue;
        return {std::move(model), std::move(c0)};
    }
}

} // namespace pcbf::test

#include "pcbf/qls_solver.hpp"

namespace pcbf::test {

// Exact projection oracle: enumerates every active subset S with |S| <= m and
// independent rows, solves the equality-constrained projection
//   nu = t + G_S' mu,  G_S nu = g_S
// and returns the unique candidate that is primal feasible with mu >= 0.
// nullopt means no KKT point exists, i.e. the polyhedron is empty.
inline std::optional<Eigen::VectorXd> projection_oracle(const QlsProblem& qp, double tol = 1e-9) {
    const Eigen::MatrixXd g = to_eigen(qp.g_mat);
    const Eigen::VectorXd lo = to_eigen(qp.g_vec);
    const Eigen::VectorXd t = to_eigen(qp.target);
    const auto p = static_cast<int>(g.rows());
    const auto m = static_cast<int>(g.cols());
    std::optional<Eigen::VectorXd> best;
    for (unsigned mask = 0; mask < (1u << p); ++mask) {
        std::vector<int> s;
        for (int i = 0; i < p; ++i)
            if (mask & (1u << i))
                s.push_back(i);
        if (static_cast<int>(s.size()) > m)
            continue;
        Eigen::VectorXd nu = t;
        Eigen::VectorXd mu;
        if (!s.empty()) {
            Eigen::MatrixXd gs(s.size(), m);
            Eigen::VectorXd ls(s.size());
            for (std::size_t k = 0; k < s.size(); ++k) {
                gs.row(static_cast<Eigen::Index>(k)) = g.row(s[k]);
                ls(static_cast<Eigen::Index>(k)) = lo(s[k]);
            }
            const Eigen::MatrixXd gram = gs * gs.transpose();
            Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
            if (lu.rank() < gram.rows())
                continue;
            mu = lu.solve(ls - gs * t);
            if (mu.minCoeff() < -tol)
                continue;
            nu = t + gs.transpose() * mu;
        }
        if (p > 0 && (g * nu - lo).minCoeff() < -tol)
            continue;
        if (!best || (nu - t).norm() < (*best - t).norm())
            best = nu;
    }
    return best;
}

// Random bounded polyhedron {nu : G nu >= g} in R^m that contains a point
// with margin, plus a target typically outside it.
inline QlsProblem random_feasible_qls(Gen& gen, std::size_t m, std::size_t p) {
    const Matrix center = gen.matrix(m, 1, -2, 2);
    Matrix g_mat(p, m);
    Matrix g_vec(p, 1);
    for (std::size_t i = 0; i < p; ++i) {
        Matrix row = gen.matrix(1, m);
        if (i < 2 * m) {
            // Box rows keep the set bounded.
            row = Matrix(1, m);
            row(0, i / 2) = (i % 2 == 0) ? 1.0 : -1.0;
        }
        row *= gen.uniform(0.2, 5.0);
        g_mat.set_block(i, 0, row);
        g_vec(i, 0) = (row * center)[0] - gen.uniform(0.05, 3.0);
    }
    return {gen.matrix(m, 1, -8, 8), std::move(g_mat), std::move(g_vec)};
}

} // namespace pcbf::test

#include "pcbf/barrier.hpp"

namespace pcbf::test {

// A single-input chain instance whose dynamics stay bounded while the
// top-level constraint is active (u = -(c x + d) / (c B)). Unstable zero
// dynamics would let the state grow until absolute slacks lose meaning.
struct ChainInstance {
    LtiModel model;
    AffineBarrierChain chain;
};

inline ChainInstance random_stable_chain(Gen& g, std::size_t n, int rho, double d0) {
    for (;;) {
        auto inst = random_rel_degree_instance(g, n, rho);
        auto chain = build_affine_chain(inst.c0, d0, inst.model, g.uniform(0.2, 0.8), rho);
        const ChainConstraintRow row = chain_constraint_row(chain, inst.model);
        const Matrix k = (-1.0 / row.row[0]) * row.affine_state;
        if (spectral_radius(inst.model.a() + inst.model.b() * k) < 0.99)
            return {std::move(inst.model), std::move(chain)};
    }
}

} // namespace pcbf::test
