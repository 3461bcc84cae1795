#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tensorkit/decompositions.hpp"
#include "tensorkit/errors.hpp"
#include "tensorkit/linalg.hpp"
#include "tensorkit/rng.hpp"
#include "tensorkit/tensor.hpp"

namespace tensorkit {

/// Tensor-valued Gaussian with Kronecker-separable covariance: one symmetric
/// positive-definite factor per mode. Under row-major vectorisation the
/// implied covariance of vec(X) is factor(0) kron ... kron factor(N-1),
/// mode 0 varying slowest.
class TensorNormal {
public:
    TensorNormal() = default;

    TensorNormal(Tensor mean, std::vector<Matrix> factors)
        : mean_(std::move(mean)), factors_(std::move(factors)) {
        if (factors_.size() != mean_.order())
            throw dimension_error("one covariance factor per mode is required");
        chol_.reserve(factors_.size());
        for (std::size_t n = 0; n < factors_.size(); ++n) {
            const Matrix& s = factors_[n];
            const auto dim = static_cast<Eigen::Index>(mean_.shape()[n]);
            if (s.rows() != dim || s.cols() != dim)
                throw dimension_error("covariance factor " + std::to_string(n) +
                                      " does not match mode dimension");
            if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12)
                throw validation_error("covariance factor " + std::to_string(n) +
                                       " is not symmetric");
            try {
                chol_.push_back(cholesky(s));
            } catch (const numeric_error&) {
                throw numeric_error("covariance factor " + std::to_string(n) +
                                    " is not positive definite");
            }
        }
    }

    const Tensor& mean() const { return mean_; }
    const std::vector<Matrix>& factors() const { return factors_; }
    const Matrix& factor(std::size_t n) const { return factors_.at(n); }
    const std::vector<Matrix>& cholesky_factors() const { return chol_; }
    const Shape& shape() const { return mean_.shape(); }

private:
    Tensor mean_;
    std::vector<Matrix> factors_;
    std::vector<Matrix> chol_; // cached lower Cholesky factors
};

/// Parameter counts of the separable model versus the unstructured
/// multivariate Gaussian on the same data.
struct DofCount {
    std::uint64_t eta_tensor = 0;
    std::uint64_t eta_multi = 0;
    double ratio = 0.0;
};

namespace detail {

inline double centred_mahalanobis_sq(const TensorNormal& m, const Tensor& x) {
    std::vector<double> values(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        values[i] = x.values()[i] - m.mean().values()[i];
    Shape shape = x.shape();
    // Whitening by L_n^{-1} along every mode turns the Mahalanobis form
    // into a plain squared norm.
    for (std::size_t n = 0; n < shape.size(); ++n) {
        const Matrix unf = unfold_vals(values, shape, n);
        const Matrix solved =
            m.cholesky_factors()[n].triangularView<Eigen::Lower>().solve(unf);
        values = fold_vals(solved, shape, n);
    }
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()))
        .squaredNorm();
}

inline double separable_logdet(const TensorNormal& m) {
    const double total = static_cast<double>(element_count(m.shape()));
    double logdet = 0.0;
    for (std::size_t n = 0; n < m.shape().size(); ++n) {
        double mode_logdet = 0.0;
        const Matrix& l = m.cholesky_factors()[n];
        for (Eigen::Index i = 0; i < l.rows(); ++i) mode_logdet += std::log(l(i, i));
        logdet += (total / static_cast<double>(m.shape()[n])) * 2.0 * mode_logdet;
    }
    return logdet;
}

} // namespace detail

/// Log density of vec(x) under the separable Gaussian, computed without
/// ever forming the full covariance.
inline double logpdf(const TensorNormal& m, const Tensor& x) {
    if (x.shape() != m.shape()) throw dimension_error("sample shape does not match the model");
    constexpr double log_two_pi = 1.8378770664093454836;
    const double total = static_cast<double>(detail::element_count(m.shape()));
    return -0.5 * (total * log_two_pi + detail::separable_logdet(m) +
                   detail::centred_mahalanobis_sq(m, x));
}

/// Draw `count` samples X = M + Z x_1 L_1 ... x_N L_N with Z i.i.d.
/// standard normal; deterministic for a given seed.
inline std::vector<Tensor> sample(const TensorNormal& m, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw argument_error("sample count must be >= 1");
    Rng rng(seed);
    const Shape& shape = m.shape();
    std::vector<Tensor> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<double> values(m.mean().size());
        for (double& v : values) v = rng.normal();
        Shape cur_shape = shape;
        for (std::size_t n = 0; n < shape.size(); ++n) {
            auto [next, next_shape] =
                detail::mode_apply(values, cur_shape, n, m.cholesky_factors()[n]);
            values = std::move(next);
            cur_shape = std::move(next_shape);
        }
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += m.mean().values()[i];
        out.emplace_back(shape, std::move(values), m.mean().modes());
    }
    return out;
}

struct TensorNormalFitResult {
    TensorNormal model;
    int iterations = 0;
    std::vector<double> loglik_trace; // total log-likelihood after each cycle
    bool converged = false;
};

/// Maximum-likelihood fit by the flip-flop algorithm: the mean is the sample
/// average and each covariance factor is refreshed in turn from the mode-n
/// unfoldings of the centred samples whitened by the other factors. Factors
/// are initialised to the identity; after convergence all but the last are
/// normalised to unit trace-average, the residual scale absorbed by the
/// last. An optional ridge is added to each update for near-singular cases.
inline TensorNormalFitResult fit(const std::vector<Tensor>& samples, const FitOptions& opts = {},
                                 double ridge = 0.0) {
    detail::validate(opts);
    if (ridge < 0.0) throw argument_error("ridge must be non-negative");
    if (samples.size() < 2) throw argument_error("fit requires at least two samples");
    const Shape shape = samples[0].shape();
    for (const auto& s : samples)
        if (s.shape() != shape) throw dimension_error("samples must share one shape");

    const std::size_t order = shape.size();
    const std::size_t count = samples.size();
    const double total = static_cast<double>(detail::element_count(shape));
    for (std::size_t n = 0; n < order; ++n) {
        if (static_cast<double>(count) * total / static_cast<double>(shape[n]) <=
            static_cast<double>(shape[n]))
            std::cerr << "tensorkit: warning: flip-flop update for mode " << n
                      << " is underdetermined (K*P/I_n <= I_n); consider more samples or a ridge\n";
    }

    std::vector<double> mean_values(samples[0].size(), 0.0);
    for (const auto& s : samples)
        for (std::size_t i = 0; i < mean_values.size(); ++i) mean_values[i] += s.values()[i];
    for (double& v : mean_values) v /= static_cast<double>(count);
    Tensor mean(shape, mean_values, samples[0].modes());

    std::vector<std::vector<double>> centred(count);
    for (std::size_t k = 0; k < count; ++k) {
        centred[k].resize(mean_values.size());
        for (std::size_t i = 0; i < mean_values.size(); ++i)
            centred[k][i] = samples[k].values()[i] - mean_values[i];
    }

    std::vector<Matrix> factors(order);
    std::vector<Matrix> chol(order);
    for (std::size_t n = 0; n < order; ++n) {
        factors[n] = Matrix::Identity(static_cast<Eigen::Index>(shape[n]),
                                      static_cast<Eigen::Index>(shape[n]));
        chol[n] = factors[n];
    }

    auto loglik = [&]() {
        double logdet = 0.0;
        for (std::size_t n = 0; n < order; ++n) {
            double mode_logdet = 0.0;
            for (Eigen::Index i = 0; i < chol[n].rows(); ++i)
                mode_logdet += std::log(chol[n](i, i));
            logdet += (total / static_cast<double>(shape[n])) * 2.0 * mode_logdet;
        }
        constexpr double log_two_pi = 1.8378770664093454836;
        double maha = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
            std::vector<double> values = centred[k];
            for (std::size_t n = 0; n < order; ++n) {
                const Matrix solved = chol[n].triangularView<Eigen::Lower>().solve(
                    detail::unfold_vals(values, shape, n));
                values = detail::fold_vals(solved, shape, n);
            }
            maha += Eigen::Map<const Vector>(values.data(),
                                             static_cast<Eigen::Index>(values.size()))
                        .squaredNorm();
        }
        return -0.5 * (static_cast<double>(count) * (total * log_two_pi + logdet) + maha);
    };

    TensorNormalFitResult res;
    bool converged = false;
    int iterations = 0;
    for (int it = 1; it <= opts.max_iter && !converged; ++it) {
        double max_change = 0.0;
        for (std::size_t n = 0; n < order; ++n) {
            const auto dim = static_cast<Eigen::Index>(shape[n]);
            Matrix update = Matrix::Zero(dim, dim);
            for (std::size_t k = 0; k < count; ++k) {
                // Whiten every other mode, then accumulate the mode-n
                // scatter.
                std::vector<double> values = centred[k];
                for (std::size_t m = 0; m < order; ++m) {
                    if (m == n) continue;
                    const Matrix solved = chol[m].triangularView<Eigen::Lower>().solve(
                        detail::unfold_vals(values, shape, m));
                    values = detail::fold_vals(solved, shape, m);
                }
                const Matrix unf = detail::unfold_vals(values, shape, n);
                update += unf * unf.transpose();
            }
            update *= static_cast<double>(shape[n]) / (static_cast<double>(count) * total);
            if (ridge > 0.0) update += ridge * Matrix::Identity(dim, dim);
            update = 0.5 * (update + update.transpose());

            const double base = factors[n].norm();
            max_change = std::max(max_change, (update - factors[n]).norm() / base);
            factors[n] = update;
            try {
                chol[n] = cholesky(factors[n]);
            } catch (const numeric_error&) {
                throw numeric_error("flip-flop update for mode " + std::to_string(n) +
                                    " is singular; consider a positive ridge");
            }
        }
        res.loglik_trace.push_back(loglik());
        iterations = it;
        if (opts.verbose)
            std::cerr << "flip-flop cycle " << it << ": loglik " << res.loglik_trace.back() << "\n";
        converged = max_change < opts.tol;
    }
    res.iterations = iterations;
    res.converged = converged;

    // Resolve the scale indeterminacy: unit trace-average everywhere but the
    // last factor, which absorbs the product of the removed scales.
    double carried = 1.0;
    for (std::size_t n = 0; n + 1 < order; ++n) {
        const double scale = factors[n].trace() / static_cast<double>(shape[n]);
        factors[n] /= scale;
        carried *= scale;
    }
    factors[order - 1] *= carried;

    res.model = TensorNormal(std::move(mean), std::move(factors));
    return res;
}

/// Closed-form parameter counts behind the separable-vs-unstructured ratio.
inline DofCount dof_ratio(const Shape& shape) {
    if (shape.empty()) throw argument_error("shape must have at least one mode");
    for (std::size_t d : shape)
        if (d < 1) throw argument_error("shape entries must be >= 1");
    std::uint64_t total = 1;
    for (std::size_t d : shape) total *= static_cast<std::uint64_t>(d);
    std::uint64_t cov_params = 0;
    for (std::size_t d : shape) {
        const auto dd = static_cast<std::uint64_t>(d);
        cov_params += dd * (dd + 1) / 2;
    }
    DofCount out;
    out.eta_tensor = total + cov_params;
    out.eta_multi = total + total * (total + 1) / 2;
    out.ratio = static_cast<double>(out.eta_tensor) / static_cast<double>(out.eta_multi);
    return out;
}

/// Maximum-a-posteriori label under class-conditional separable Gaussians;
/// exact ties resolve to the lexicographically smallest label.
inline std::string classify_conditional(
    const std::vector<std::pair<std::string, TensorNormal>>& models,
    const std::vector<double>& priors, const Tensor& x) {
    if (models.size() < 2) throw argument_error("classification needs at least two models");
    if (priors.size() != models.size())
        throw argument_error("one prior per model is required");
    double sum = 0.0;
    for (double p : priors) {
        if (p < 0.0) throw argument_error("priors must be non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw argument_error("priors must sum to 1");

    std::string best_label;
    double best_score = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < models.size(); ++i) {
        const double log_prior =
            priors[i] > 0.0 ? std::log(priors[i]) : -std::numeric_limits<double>::infinity();
        const double score = logpdf(models[i].second, x) + log_prior;
        if (first || score > best_score ||
            (score == best_score && models[i].first < best_label)) {
            best_label = models[i].first;
            best_score = score;
            first = false;
        }
    }
    return best_label;
}

} // namespace tensorkit
