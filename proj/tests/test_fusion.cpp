#include <catch2/catch_amalgamated.hpp>

#include "tensorkit/fusion.hpp"

#include "support.hpp"

using namespace tensorkit;
using testsupport::random_matrix;
using testsupport::random_tensor;

namespace {

bool trace_non_increasing(const std::vector<double>& trace, double slack) {
    for (std::size_t i = 0; i + 1 < trace.size(); ++i)
        if (trace[i + 1] > trace[i] + slack) return false;
    return true;
}

// Coupled pair generated from shared mode-0 factors. Well-separated factor
// columns and comparable norms of the two blocks keep the equal-weight
// alternation out of its known slow regimes.
CoupledData coupled_synthetic(std::size_t rank, std::uint64_t seed) {
    Rng rng(seed);
    const auto r = static_cast<Eigen::Index>(rank);
    const Matrix a = testsupport::orthonormal_columns(5, r, rng);
    const Matrix b = testsupport::orthonormal_columns(4, r, rng);
    const Matrix c = testsupport::orthonormal_columns(3, r, rng);
    const Matrix v = random_matrix(6, r, rng);
    Vector w(r);
    for (Eigen::Index i = 0; i < r; ++i) w(i) = 1.0 - 0.4 * static_cast<double>(i) / r;
    const Tensor x = testsupport::cpd_tensor_naive({a, b, c}, w);
    Matrix y = a * v.transpose();
    y *= 0.5 * frobenius_norm(x) / y.norm();
    return CoupledData{x, y};
}

std::vector<Matrix> parafac2_synthetic(std::size_t rank, const std::vector<std::size_t>& rows,
                                       std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    const auto r = static_cast<Eigen::Index>(rank);
    const Matrix v = testsupport::orthonormal_columns(static_cast<Eigen::Index>(cols), r, rng);
    Matrix h = testsupport::orthonormal_columns(r, r, rng);
    for (Eigen::Index i = 0; i < r; ++i) h.col(i) *= 1.0 - 0.2 * static_cast<double>(i) / r;
    std::vector<Matrix> slices;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Matrix p = testsupport::orthonormal_columns(static_cast<Eigen::Index>(rows[k]), r, rng);
        Vector s(r);
        for (Eigen::Index i = 0; i < r; ++i) s(i) = 1.0 + rng.uniform();
        slices.push_back(p * h * s.asDiagonal() * v.transpose());
    }
    return slices;
}

} // namespace

TEST_CASE("cmtf fits exactly coupled synthetic data") {
    const CoupledData data = coupled_synthetic(2, 211);
    const CmtfResult res = cmtf(data, 2);
    CHECK(res.error_trace.back() <= 1e-6);

    // the returned pair stays consistent: Y ~ A V^T with the normalised A
    const double side_resid =
        (data.side - res.cpd.factor(0) * res.side_factor.transpose()).norm();
    CHECK(side_resid / data.side.norm() <= 1e-5);
    CHECK(rel_error(data.tensor, res.cpd) <= 1e-5);
}

TEST_CASE("cmtf with an empty side matrix reduces to cpd_als") {
    Rng rng(223);
    const Tensor x = random_tensor({4, 3, 3}, rng);
    FitOptions opts;
    opts.seed = 3;
    opts.max_iter = 15;
    const CpdResult als = cpd_als(x, 2, opts);
    const CmtfResult coupled = cmtf(CoupledData{x, Matrix::Zero(4, 0)}, 2, opts);
    REQUIRE(als.error_trace.size() == coupled.error_trace.size());
    for (std::size_t i = 0; i < als.error_trace.size(); ++i)
        CHECK(std::abs(als.error_trace[i] - coupled.error_trace[i]) <= 1e-10);
    for (std::size_t n = 0; n < 3; ++n)
        CHECK((als.form.factor(n) - coupled.cpd.factor(n)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((als.form.weights() - coupled.cpd.weights()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("cmtf validates the coupling") {
    Rng rng(227);
    const Tensor x = random_tensor({4, 3, 3}, rng);
    CHECK_THROWS_AS(cmtf(CoupledData{x, Matrix::Zero(5, 2)}, 2), dimension_error);
    CHECK_THROWS_AS(cmtf(CoupledData{random_tensor({4, 3}, rng), Matrix::Zero(4, 2)}, 2),
                    dimension_error);
    CHECK_THROWS_AS(cmtf(CoupledData{x, Matrix::Zero(4, 2)}, 0), argument_error);
}

TEST_CASE("cmtf objective trace is non-increasing") {
    Rng rng(229);
    for (int trial = 0; trial < 5; ++trial) {
        const Tensor x = random_tensor({4, 3, 3}, rng);
        const Matrix y = random_matrix(4, 5, rng);
        FitOptions opts;
        opts.max_iter = 25;
        opts.seed = static_cast<std::uint64_t>(trial);
        const CmtfResult res = cmtf(CoupledData{x, y}, 2, opts);
        CHECK(trace_non_increasing(res.error_trace, 1e-10));
    }
}

TEST_CASE("parafac2 recovers data generated under its model") {
    const auto slices = parafac2_synthetic(2, {5, 6, 7, 8}, 4, 233);
    const Parafac2Result res = parafac2(Parafac2Data{slices}, 2);
    CHECK(res.error_trace.back() <= 1e-5);
}

TEST_CASE("parafac2 fits a single slice at full rank to machine precision") {
    Rng rng(239);
    const Matrix x = random_matrix(6, 4, rng);
    const Parafac2Result res = parafac2(Parafac2Data{{x}}, 4);
    CHECK(res.error_trace.back() <= 1e-10);
}

TEST_CASE("parafac2 cross-products are identical across slices") {
    const auto slices = parafac2_synthetic(3, {6, 7, 8}, 5, 241);
    const Parafac2Result res = parafac2(Parafac2Data{slices}, 3);
    const Matrix ref = res.u[0].transpose() * res.u[0];
    for (std::size_t k = 1; k < res.u.size(); ++k)
        CHECK((res.u[k].transpose() * res.u[k] - ref).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("parafac2 residual trace is non-increasing on random slices") {
    Rng rng(251);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Matrix> slices;
        for (std::size_t k = 0; k < 3; ++k) slices.push_back(random_matrix(5 + k, 4, rng));
        FitOptions opts;
        opts.max_iter = 25;
        opts.seed = static_cast<std::uint64_t>(trial);
        const Parafac2Result res = parafac2(Parafac2Data{slices}, 2, opts);
        CHECK(trace_non_increasing(res.error_trace, 1e-10));
    }
}

TEST_CASE("parafac2 argument validation") {
    Rng rng(257);
    std::vector<Matrix> slices{random_matrix(5, 4, rng), random_matrix(6, 4, rng)};
    CHECK_THROWS_AS(parafac2(Parafac2Data{slices}, 5), argument_error);
    CHECK_THROWS_AS(parafac2(Parafac2Data{slices}, 0), argument_error);
    slices.push_back(random_matrix(6, 3, rng));
    CHECK_THROWS_AS(parafac2(Parafac2Data{slices}, 2), dimension_error);
    CHECK_THROWS_AS(parafac2(Parafac2Data{}, 1), dimension_error);
}
