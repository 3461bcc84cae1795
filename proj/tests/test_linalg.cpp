#include <catch2/catch_amalgamated.hpp>

#include "tensorkit/linalg.hpp"

#include "support.hpp"

using namespace tensorkit;
using testsupport::random_matrix;
using testsupport::random_spd;

TEST_CASE("svd of simple diagonal matrices") {
    const SvdResult id = svd(Matrix::Identity(3, 3));
    CHECK(id.s.isApprox(Vector::Ones(3)));

    Matrix d(2, 2);
    d << 3, 0, 0, 4;
    const SvdResult dec = svd(d);
    CHECK(dec.s(0) == Catch::Approx(4.0));
    CHECK(dec.s(1) == Catch::Approx(3.0));
}

TEST_CASE("svd reconstruction, ordering and orthonormality") {
    Rng rng(29);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix m = random_matrix(6, 4, rng);
        const SvdResult dec = svd(m);
        CHECK((m - dec.u * dec.s.asDiagonal() * dec.vt).cwiseAbs().maxCoeff() <
              1e-10 * m.norm());
        for (Eigen::Index i = 0; i + 1 < dec.s.size(); ++i) CHECK(dec.s(i) >= dec.s(i + 1));
        CHECK(dec.s.minCoeff() >= 0.0);
        CHECK((dec.u.transpose() * dec.u - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((dec.vt * dec.vt.transpose() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("svd sign convention is deterministic") {
    Rng rng(31);
    const Matrix m = random_matrix(5, 3, rng);
    const SvdResult a = svd(m);
    const SvdResult b = svd(m);
    CHECK(a.u == b.u);
    for (Eigen::Index j = 0; j < a.u.cols(); ++j) {
        Eigen::Index arg = 0;
        a.u.col(j).cwiseAbs().maxCoeff(&arg);
        CHECK(a.u(arg, j) >= 0.0);
    }
}

TEST_CASE("svd rejects non-finite input") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(svd(m), numeric_error);
}

TEST_CASE("svd contract holds on matrices large enough for the blocked path") {
    Rng rng(53);
    const Matrix m = random_matrix(24, 20, rng);
    const SvdResult dec = svd(m);
    CHECK((m - dec.u * dec.s.asDiagonal() * dec.vt).cwiseAbs().maxCoeff() < 1e-10 * m.norm());
    CHECK((dec.u.transpose() * dec.u - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-10);
    for (Eigen::Index j = 0; j < dec.u.cols(); ++j) {
        Eigen::Index arg = 0;
        dec.u.col(j).cwiseAbs().maxCoeff(&arg);
        CHECK(dec.u(arg, j) >= 0.0);
    }
}

TEST_CASE("truncated svd satisfies the Eckart-Young residual identity") {
    Rng rng(37);
    const Matrix m = random_matrix(6, 4, rng);
    const SvdResult full = svd(m);
    for (std::size_t k = 1; k <= 4; ++k) {
        const SvdResult trunc = svd_truncated(m, k);
        const double resid = (m - trunc.u * trunc.s.asDiagonal() * trunc.vt).squaredNorm();
        double tail = 0.0;
        for (Eigen::Index i = static_cast<Eigen::Index>(k); i < full.s.size(); ++i)
            tail += full.s(i) * full.s(i);
        CHECK(resid == Catch::Approx(tail).margin(1e-10));
    }
    CHECK_THROWS_AS(svd_truncated(m, 0), argument_error);
    CHECK_THROWS_AS(svd_truncated(m, 5), argument_error);
}

TEST_CASE("cholesky solve") {
    Rng rng(41);
    const Matrix b = random_matrix(4, 2, rng);
    CHECK((chol_solve(Matrix::Identity(4, 4), b) - b).cwiseAbs().maxCoeff() == 0.0);

    const Matrix a = random_spd(4, rng);
    const Matrix x = chol_solve(a, b);
    CHECK((a * x - b).norm() <= 1e-9 * b.norm());

    Matrix not_pd = Matrix::Identity(3, 3);
    not_pd(2, 2) = -1.0;
    CHECK_THROWS_AS(chol_solve(not_pd, Matrix::Ones(3, 1)), numeric_error);
    CHECK_THROWS_WITH(chol_solve(not_pd, Matrix::Ones(3, 1)),
                      Catch::Matchers::ContainsSubstring("pivot 2"));
}

TEST_CASE("pseudo-inverse") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2.0;
    const Matrix p = pinv(d);
    CHECK(p(0, 0) == Catch::Approx(0.5));
    CHECK(p(1, 1) == 0.0);

    // Moore-Penrose property on a rank-deficient 5x3.
    Rng rng(43);
    const Matrix base = random_matrix(5, 2, rng) * random_matrix(2, 3, rng);
    const Matrix pi = pinv(base);
    CHECK((base * pi * base - base).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((pi * base * pi - pi).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("qr is orthonormal with a non-negative diagonal") {
    Rng rng(47);
    const Matrix m = random_matrix(6, 4, rng);
    const QrResult dec = qr(m);
    CHECK((dec.q.transpose() * dec.q - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((dec.q * dec.r - m).cwiseAbs().maxCoeff() < 1e-10);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(dec.r(i, i) >= 0.0);
}
