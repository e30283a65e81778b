#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcbf/matrix.hpp"

namespace pcbf {

// minimize ||nu - target||_2  subject to  g_mat * nu >= g_vec.
struct QlsProblem {
    Matrix target; // m x 1
    Matrix g_mat;  // p x m
    Matrix g_vec;  // p x 1

    void validate() const {
        if (target.cols() != 1 || target.rows() == 0)
            throw DimensionError("QlsProblem: target must be a nonempty column, got " + target.shape());
        if (g_vec.cols() != 1 || g_mat.rows() != g_vec.rows())
            throw DimensionError("QlsProblem: constraint shapes " + g_mat.shape() + " and " + g_vec.shape() +
                                 " disagree");
        if (g_mat.rows() > 0 && g_mat.cols() != target.rows())
            throw DimensionError("QlsProblem: constraint matrix " + g_mat.shape() + " incompatible with target " +
                                 target.shape());
        target.require_finite("QlsProblem");
        g_mat.require_finite("QlsProblem");
        g_vec.require_finite("QlsProblem");
    }
};

enum class QlsStatus { optimal, infeasible, iteration_limit };

[[nodiscard]] inline const char* to_string(QlsStatus s) {
    switch (s) {
    case QlsStatus::optimal:
        return "optimal";
    case QlsStatus::infeasible:
        return "infeasible";
    case QlsStatus::iteration_limit:
        return "iteration_limit";
    }
    return "unknown";
}

struct QlsSolution {
    Matrix nu;
    std::vector<std::size_t> active_set; // ascending constraint indices
    std::vector<double> multipliers;     // one per constraint, zero off the active set
    int iterations = 0;
    QlsStatus status = QlsStatus::iteration_limit;
    // Largest constraint violation at the end of the feasibility phase.
    double phase1_violation = 0.0;
};

struct QlsOptions {
    int max_iter = 100;
    double feasibility_tol = 1e-8;
    // Seed the optimality phase with the previous solve's active set.
    bool warm_start = false;
};

// Primal active-set method with a Phase-1 feasibility search.
//
// Rows are scaled to unit norm internally, so step and ratio computations do
// not depend on how the caller scaled each half-space. Phase 1 minimizes the
// largest violation s over (nu, s) with a vertex-following LP started at the
// target; it stops as soon as s <= 0. Phase 2 runs the usual null-space
// projection / ratio test / multiplier drop loop. Ties in both the blocking
// and the dropping rule go to the lowest constraint index.
class ActiveSetQlsSolver {
public:
    explicit ActiveSetQlsSolver(QlsOptions options = {}) : options_(options) {
        if (options_.max_iter < 1)
            throw std::invalid_argument("ActiveSetQlsSolver: max_iter must be at least 1");
    }

    [[nodiscard]] const QlsOptions& options() const noexcept { return options_; }
    [[nodiscard]] const std::vector<std::size_t>& last_active_set() const noexcept { return last_active_; }
    void reset_warm_start() { last_active_.clear(); }

    QlsSolution solve(const QlsProblem& problem) {
        problem.validate();
        setup(problem);

        QlsSolution sol;
        sol.nu = problem.target;
        sol.multipliers.assign(p_, 0.0);

        // Zero rows are either vacuous or an immediate certificate.
        for (std::size_t i = 0; i < p_; ++i)
            if (norms_[i] == 0.0 && problem.g_vec(i, 0) > options_.feasibility_tol) {
                sol.status = QlsStatus::infeasible;
                sol.phase1_violation = problem.g_vec(i, 0);
                last_active_.clear();
                return sol;
            }

        std::vector<double> nu(problem.target.data());
        int iterations = 0;

        if (max_violation(problem, nu) > options_.feasibility_tol) {
            const auto phase1 = find_feasible_point(problem, nu, iterations);
            if (!phase1) {
                sol.iterations = iterations;
                sol.status = QlsStatus::iteration_limit;
                sol.nu = Matrix::column(nu);
                return sol;
            }
            sol.phase1_violation = *phase1;
            if (*phase1 > options_.feasibility_tol) {
                sol.iterations = iterations;
                sol.status = QlsStatus::infeasible;
                sol.nu = Matrix::column(nu);
                last_active_.clear();
                return sol;
            }
        } else {
            // Target already admissible: the projection is the identity.
            if (options_.warm_start)
                last_active_.clear();
            sol.iterations = 0;
            sol.status = QlsStatus::optimal;
            return sol;
        }

        std::vector<std::size_t> working;
        if (options_.warm_start)
            for (std::size_t i : last_active_)
                if (i < p_ && norms_[i] > 0.0 && std::abs(slack(i, nu)) <= row_tol(i))
                    try_add(working, i);

        std::vector<double> lambda;
        const bool converged = optimality_phase(problem, nu, working, lambda, iterations);
        sol.iterations = iterations;
        sol.nu = Matrix::column(nu);
        if (!converged) {
            sol.status = QlsStatus::iteration_limit;
            return sol;
        }
        for (std::size_t k = 0; k < working.size(); ++k)
            sol.multipliers[working[k]] = lambda[k] / norms_[working[k]];
        sol.active_set = working;
        std::sort(sol.active_set.begin(), sol.active_set.end());
        sol.status = QlsStatus::optimal;
        last_active_ = sol.active_set;
        return sol;
    }

private:
    void setup(const QlsProblem& problem) {
        m_ = problem.target.rows();
        p_ = problem.g_mat.rows();
        a_.assign(p_ * m_, 0.0);
        b_.assign(p_, 0.0);
        norms_.assign(p_, 0.0);
        for (std::size_t i = 0; i < p_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m_; ++j)
                s += problem.g_mat(i, j) * problem.g_mat(i, j);
            norms_[i] = std::sqrt(s);
            if (norms_[i] == 0.0)
                continue;
            for (std::size_t j = 0; j < m_; ++j)
                a_[i * m_ + j] = problem.g_mat(i, j) / norms_[i];
            b_[i] = problem.g_vec(i, 0) / norms_[i];
        }
    }

    [[nodiscard]] double dot_row(std::size_t i, const std::vector<double>& v) const {
        double s = 0.0;
        for (std::size_t j = 0; j < m_; ++j)
            s += a_[i * m_ + j] * v[j];
        return s;
    }

    // Normalized slack a_i nu - b_i.
    [[nodiscard]] double slack(std::size_t i, const std::vector<double>& nu) const { return dot_row(i, nu) - b_[i]; }

    // Normalized tolerance that is never looser than the absolute one.
    [[nodiscard]] double row_tol(std::size_t i) const {
        return options_.feasibility_tol * std::min(1.0, 1.0 / norms_[i]);
    }

    [[nodiscard]] double max_violation(const QlsProblem& problem, const std::vector<double>& nu) const {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < p_; ++i) {
            double gx = 0.0;
            for (std::size_t j = 0; j < m_; ++j)
                gx += problem.g_mat(i, j) * nu[j];
            worst = std::max(worst, problem.g_vec(i, 0) - gx);
        }
        return p_ == 0 ? 0.0 : worst;
    }

    // Gram matrix of the working rows; throws SingularMatrixError when dependent.
    [[nodiscard]] Matrix gram(const std::vector<std::size_t>& w) const {
        Matrix g(w.size(), w.size());
        for (std::size_t r = 0; r < w.size(); ++r)
            for (std::size_t c = 0; c < w.size(); ++c) {
                double s = 0.0;
                for (std::size_t j = 0; j < m_; ++j)
                    s += a_[w[r] * m_ + j] * a_[w[c] * m_ + j];
                g(r, c) = s;
            }
        return g;
    }

    void try_add(std::vector<std::size_t>& working, std::size_t i) const {
        if (working.size() >= m_)
            return;
        working.push_back(i);
        try {
            (void)pcbf::solve(gram(working), Matrix(working.size(), 1, 1.0));
        } catch (const SingularMatrixError&) {
            working.pop_back();
        }
    }

    // Phase 1: LP over z = (nu, s), minimize s s.t. a_i nu + s >= b_i.
    // Returns the final largest (unnormalized) violation, or nullopt on
    // hitting the iteration limit.
    std::optional<double> find_feasible_point(const QlsProblem& problem, std::vector<double>& nu, int& iterations) {
        const std::size_t nz = m_ + 1;
        double s = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < p_; ++i)
            if (norms_[i] > 0.0)
                s = std::max(s, -slack(i, nu));

        auto zrow = [&](std::size_t i, std::size_t j) { return j < m_ ? a_[i * m_ + j] : 1.0; };
        std::vector<std::size_t> working;

        while (true) {
            if (s <= 0.0)
                return max_violation(problem, nu);
            if (iterations >= options_.max_iter)
                return std::nullopt;
            ++iterations;

            const std::size_t k = working.size();
            Matrix mrows(k, nz);
            for (std::size_t r = 0; r < k; ++r)
                for (std::size_t j = 0; j < nz; ++j)
                    mrows(r, j) = zrow(working[r], j);
            Matrix cost(nz, 1);
            cost(m_, 0) = 1.0;

            std::vector<double> dir(nz, 0.0);
            std::optional<std::size_t> drop;
            bool have_dir = false;

            if (k < nz) {
                Matrix proj = cost;
                Matrix y(k, 1);
                if (k > 0) {
                    try {
                        y = pcbf::solve(mrows * mrows.transpose(), mrows * cost);
                    } catch (const SingularMatrixError&) {
                        working.pop_back();
                        continue;
                    }
                    proj = cost - mrows.transpose() * y;
                }
                if (proj.max_abs() > 1e-12) {
                    for (std::size_t j = 0; j < nz; ++j)
                        dir[j] = -proj[j];
                    have_dir = true;
                } else {
                    drop = most_negative(y, working);
                    if (!drop)
                        return max_violation(problem, nu); // LP optimum
                    working.erase(working.begin() + static_cast<std::ptrdiff_t>(*drop));
                    continue;
                }
            } else {
                Matrix lambda;
                try {
                    lambda = pcbf::solve(mrows.transpose(), cost);
                } catch (const SingularMatrixError&) {
                    working.pop_back();
                    continue;
                }
                drop = most_negative(lambda, working);
                if (!drop)
                    return max_violation(problem, nu);
                Matrix unit(nz, 1);
                unit(*drop, 0) = 1.0;
                const Matrix d = pcbf::solve(mrows, unit);
                for (std::size_t j = 0; j < nz; ++j)
                    dir[j] = d[j];
                working.erase(working.begin() + static_cast<std::ptrdiff_t>(*drop));
                have_dir = true;
            }
            if (!have_dir)
                continue;

            // Step: stop at s = 0 if that comes first.
            double alpha = std::numeric_limits<double>::infinity();
            std::optional<std::size_t> blocking;
            if (dir[m_] < 0.0)
                alpha = s / -dir[m_];
            for (std::size_t i = 0; i < p_; ++i) {
                if (norms_[i] == 0.0 || std::find(working.begin(), working.end(), i) != working.end())
                    continue;
                double rate = dir[m_];
                for (std::size_t j = 0; j < m_; ++j)
                    rate += a_[i * m_ + j] * dir[j];
                if (rate >= -1e-14)
                    continue;
                const double room = std::max(0.0, slack(i, nu) + s);
                const double ai = room / -rate;
                if (ai < alpha) {
                    alpha = ai;
                    blocking = i;
                }
            }
            if (!std::isfinite(alpha))
                return std::nullopt; // cannot happen for a descent direction with dir[m_] < 0
            for (std::size_t j = 0; j < m_; ++j)
                nu[j] += alpha * dir[j];
            s += alpha * dir[m_];
            if (blocking)
                working.push_back(*blocking);
        }
    }

    // Index (into `working`) of the most negative multiplier, lowest constraint
    // index on ties; nullopt when all multipliers are nonnegative.
    [[nodiscard]] static std::optional<std::size_t> most_negative(const Matrix& lambda,
                                                                  const std::vector<std::size_t>& working) {
        std::optional<std::size_t> pick;
        for (std::size_t k = 0; k < working.size(); ++k) {
            if (lambda[k] >= -1e-12)
                continue;
            if (!pick || lambda[k] < lambda[*pick] ||
                (lambda[k] == lambda[*pick] && working[k] < working[*pick]))
                pick = k;
        }
        return pick;
    }

    bool optimality_phase(const QlsProblem& problem, std::vector<double>& nu, std::vector<std::size_t>& working,
                          std::vector<double>& lambda_out, int& iterations) {
        double scale = 1.0;
        for (double t : problem.target.data())
            scale = std::max(scale, std::abs(t));
        const double step_tol = 1e-13 * scale;

        while (iterations < options_.max_iter) {
            ++iterations;
            std::vector<double> grad(m_);
            for (std::size_t j = 0; j < m_; ++j)
                grad[j] = nu[j] - problem.target[j];

            std::vector<double> dir(m_);
            Matrix y(working.size(), 1);
            if (working.empty()) {
                for (std::size_t j = 0; j < m_; ++j)
                    dir[j] = -grad[j];
            } else {
                Matrix n_grad(working.size(), 1);
                for (std::size_t r = 0; r < working.size(); ++r) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < m_; ++j)
                        s += a_[working[r] * m_ + j] * grad[j];
                    n_grad(r, 0) = s;
                }
                try {
                    y = pcbf::solve(gram(working), n_grad);
                } catch (const SingularMatrixError&) {
                    working.pop_back(); // most recently added dependent row
                    continue;
                }
                for (std::size_t j = 0; j < m_; ++j) {
                    double s = grad[j];
                    for (std::size_t r = 0; r < working.size(); ++r)
                        s -= a_[working[r] * m_ + j] * y[r];
                    dir[j] = -s;
                }
            }

            double dir_norm = 0.0;
            for (double d : dir)
                dir_norm = std::max(dir_norm, std::abs(d));

            if (dir_norm <= step_tol) {
                const auto drop = most_negative(y, working);
                if (!drop) {
                    lambda_out.assign(y.data().begin(), y.data().end());
                    return true;
                }
                working.erase(working.begin() + static_cast<std::ptrdiff_t>(*drop));
                continue;
            }

            double alpha = 1.0;
            std::optional<std::size_t> blocking;
            for (std::size_t i = 0; i < p_; ++i) {
                if (norms_[i] == 0.0 || std::find(working.begin(), working.end(), i) != working.end())
                    continue;
                const double rate = dot_row(i, dir);
                if (rate >= -1e-14 * dir_norm)
                    continue;
                const double ai = std::max(0.0, slack(i, nu)) / -rate;
                if (ai < alpha) {
                    alpha = ai;
                    blocking = i;
                }
            }
            for (std::size_t j = 0; j < m_; ++j)
                nu[j] += alpha * dir[j];
            if (blocking)
                working.push_back(*blocking);
        }
        return false;
    }

    QlsOptions options_;
    std::vector<std::size_t> last_active_;

    // Per-solve scratch.
    std::size_t m_ = 0;
    std::size_t p_ = 0;
    std::vector<double> a_;
    std::vector<double> b_;
    std::vector<double> norms_;
};

[[nodiscard]] inline QlsSolution solve_qls(const QlsProblem& problem, int max_iter = 100) {
    QlsOptions opts;
    opts.max_iter = max_iter;
    ActiveSetQlsSolver solver(opts);
    return solver.solve(problem);
}

struct KktReport {
    double stationarity = 0.0;       // max |nu - target - G^T lambda|
    double primal_feasibility = 0.0; // max(0, max_i g_i - G_i nu)
    double complementarity = 0.0;    // max |lambda_i (G_i nu - g_i)|
    double multiplier_sign = 0.0;    // max(0, -min lambda_i)

    [[nodiscard]] double worst() const {
        return std::max({stationarity, primal_feasibility, complementarity, multiplier_sign});
    }
    [[nodiscard]] bool satisfied(double tol = 1e-8) const { return worst() <= tol; }
};

// Residuals of the optimality conditions at s.nu using the multipliers stored
// in s.
[[nodiscard]] inline KktReport check_kkt(const QlsProblem& problem, const QlsSolution& s) {
    problem.validate();
    const std::size_t m = problem.target.rows();
    const std::size_t p = problem.g_mat.rows();
    if (s.nu.rows() != m || s.multipliers.size() != p)
        throw DimensionError("check_kkt: solution shape does not match problem");

    KktReport r;
    for (std::size_t j = 0; j < m; ++j) {
        double v = s.nu[j] - problem.target[j];
        for (std::size_t i = 0; i < p; ++i)
            v -= problem.g_mat(i, j) * s.multipliers[i];
        r.stationarity = std::max(r.stationarity, std::abs(v));
    }
    for (std::size_t i = 0; i < p; ++i) {
        double gx = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            gx += problem.g_mat(i, j) * s.nu[j];
        const double sl = gx - problem.g_vec(i, 0);
        r.primal_feasibility = std::max(r.primal_feasibility, -sl);
        r.complementarity = std::max(r.complementarity, std::abs(s.multipliers[i] * sl));
        r.multiplier_sign = std::max(r.multiplier_sign, -s.multipliers[i]);
    }
    return r;
}

} // namespace pcbf
