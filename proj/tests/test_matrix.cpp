#include <gtest/gtest.h>

#include "pcbf/matrix.hpp"
#include "support.hpp"

using pcbf::Matrix;
using pcbf::test::Gen;
using pcbf::test::max_diff;

namespace {

// Independent triple loop used as the product oracle.
Matrix naive_product(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k)
                s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

} // namespace

TEST(Matrix, ConstructionChecksShapeAndFiniteness) {
    EXPECT_THROW(Matrix(2, 2, std::vector<double>{1.0, 2.0}), pcbf::DimensionError);
    EXPECT_THROW((Matrix{{1.0, 2.0}, {3.0}}), pcbf::DimensionError);
    EXPECT_THROW((Matrix{{1.0, std::nan("")}}), pcbf::NonFiniteError);
    const Matrix m{{1, 2, 3}, {4, 5, 6}};
    EXPECT_EQ(m.rows(), 2u);
    EXPECT_EQ(m.cols(), 3u);
    EXPECT_EQ(m(1, 2), 6.0);
    EXPECT_EQ(m.transpose()(2, 1), 6.0);
}

TEST(MatMul, IdentityLeavesMatrixUnchanged) {
    const Matrix m{{1, 2}, {3, 4}};
    EXPECT_EQ(pcbf::mat_mul(Matrix::identity(2), m), m);
}

TEST(MatMul, ShiftSquared) {
    const Matrix a{{1, 1}, {0, 1}};
    const Matrix expected{{1, 2}, {0, 1}};
    EXPECT_EQ(pcbf::mat_mul(a, a), expected);
    EXPECT_EQ(naive_product(a, a), expected);
}

TEST(MatMul, ZeroAnnihilates) {
    Gen g(1);
    const Matrix b = g.matrix(3, 4);
    EXPECT_EQ(pcbf::mat_mul(Matrix::zeros(2, 3), b), Matrix::zeros(2, 4));
}

TEST(MatMul, MismatchNamesBothShapes) {
    try {
        (void)pcbf::mat_mul(Matrix(2, 3), Matrix(2, 3));
        FAIL() << "expected DimensionError";
    } catch (const pcbf::DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    }
}

TEST(MatMul, AgreesWithNaiveProductOnRandomShapes) {
    Gen g(2);
    for (int trial = 0; trial < 100; ++trial) {
        const auto r = static_cast<std::size_t>(g.integer(1, 6));
        const auto k = static_cast<std::size_t>(g.integer(1, 6));
        const auto c = static_cast<std::size_t>(g.integer(1, 6));
        const Matrix a = g.matrix(r, k);
        const Matrix b = g.matrix(k, c);
        EXPECT_LE(max_diff(pcbf::mat_mul(a, b), naive_product(a, b)), 1e-14);
    }
}

TEST(MatPow, ZeroPowerIsIdentity) {
    Gen g(3);
    EXPECT_EQ(pcbf::mat_pow(g.matrix(3, 3), 0), Matrix::identity(3));
}

TEST(MatPow, ShiftCubed) {
    const Matrix expected{{1, 3}, {0, 1}};
    EXPECT_EQ(pcbf::mat_pow(Matrix{{1, 1}, {0, 1}}, 3), expected);
}

TEST(MatPow, IdentityIsIdempotent) { EXPECT_EQ(pcbf::mat_pow(Matrix::identity(4), 7), Matrix::identity(4)); }

TEST(MatPow, RejectsNonSquare) { EXPECT_THROW((void)pcbf::mat_pow(Matrix(2, 3), 2), pcbf::DimensionError); }

TEST(MatPow, ExponentsAdd) {
    Gen g(4);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(g.integer(1, 5));
        const Matrix a = g.matrix(n, n);
        const auto p = static_cast<unsigned>(g.integer(0, 6));
        const auto q = static_cast<unsigned>(g.integer(0, 6));
        EXPECT_LE(max_diff(pcbf::mat_pow(a, p + q), pcbf::mat_pow(a, p) * pcbf::mat_pow(a, q)), 1e-12);
    }
}

TEST(PowerSum, Examples) {
    EXPECT_EQ(pcbf::power_sum(Matrix::identity(2), 3), 3.0 * Matrix::identity(2));
    EXPECT_EQ(pcbf::power_sum(Matrix::zeros(2, 2), 5), Matrix::identity(2));
    EXPECT_EQ(pcbf::power_sum(Matrix{{1, 1}, {0, 1}}, 3), (Matrix{{3, 3}, {0, 3}}));
    EXPECT_THROW((void)pcbf::power_sum(Matrix(2, 3), 2), pcbf::DimensionError);
    EXPECT_THROW((void)pcbf::power_sum(Matrix::identity(2), 0), std::invalid_argument);
}

TEST(PowerSum, MatchesRolloutAccumulation) {
    Gen g(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(g.integer(1, 5));
        const Matrix a = g.matrix(n, n);
        const Matrix b = g.matrix(n, 2);
        const auto l = static_cast<unsigned>(g.integer(1, 7));
        Matrix acc(n, 2);
        Matrix term = b;
        for (unsigned i = 0; i < l; ++i) {
            acc += term;
            term = naive_product(a, term);
        }
        EXPECT_LE(max_diff(pcbf::power_sum(a, l) * b, acc), 1e-12);
    }
}

TEST(Solve, Examples) {
    const Matrix b{{1}, {-2}};
    EXPECT_EQ(pcbf::solve(Matrix::identity(2), b), b);
    EXPECT_LE(max_diff(pcbf::solve(Matrix{{2, 0}, {0, 4}}, Matrix{{2}, {8}}), Matrix{{1}, {2}}), 1e-15);
}

TEST(Solve, SingularReportsPivot) {
    try {
        (void)pcbf::solve(Matrix{{1, 1}, {1, 1}}, Matrix{{1}, {1}});
        FAIL() << "expected SingularMatrixError";
    } catch (const pcbf::SingularMatrixError& e) {
        EXPECT_LT(std::abs(e.pivot()), 1e-12);
    }
}

TEST(Solve, ResidualIsSmallOnRandomSystems) {
    Gen g(6);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<std::size_t>(g.integer(1, 8));
        const Matrix a = g.matrix(n, n) + 2.0 * Matrix::identity(n);
        const Matrix b = g.matrix(n, 2);
        const Matrix x = pcbf::solve(a, b);
        EXPECT_LE((a * x - b).max_abs(), 1e-9 * std::max(1.0, b.max_abs()));
    }
}

TEST(Stacking, VstackAndBlockDiag) {
    const Matrix a{{1, 2}};
    const Matrix b{{3, 4}};
    EXPECT_EQ(pcbf::vstack(a, b), (Matrix{{1, 2}, {3, 4}}));
    EXPECT_EQ(pcbf::vstack(Matrix(), b), b);
    EXPECT_EQ(pcbf::block_diag(Matrix{{1}}, Matrix{{2}, {3}}), (Matrix{{1, 0}, {0, 2}, {0, 3}}));
    EXPECT_THROW((void)pcbf::vstack(a, Matrix(1, 3)), pcbf::DimensionError);
}
