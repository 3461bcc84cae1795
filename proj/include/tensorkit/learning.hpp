#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tensorkit/decompositions.hpp"
#include "tensorkit/errors.hpp"
#include "tensorkit/tensor.hpp"

namespace tensorkit {

/// Equal-shape labelled tensor samples; labels are -1 or +1.
struct TensorDataset {
    std::vector<Tensor> samples;
    std::vector<int> labels;
};

namespace detail {

inline void validate_dataset(const TensorDataset& d, bool require_both_classes) {
    if (d.samples.empty()) throw data_error("dataset is empty");
    if (d.samples.size() != d.labels.size())
        throw data_error("sample and label counts differ");
    const Shape& shape = d.samples[0].shape();
    for (const auto& s : d.samples)
        if (s.shape() != shape) throw dimension_error("dataset samples must share one shape");
    bool pos = false, neg = false;
    for (int y : d.labels) {
        if (y == 1) pos = true;
        else if (y == -1) neg = true;
        else throw data_error("labels must be -1 or +1");
    }
    if (require_both_classes && !(pos && neg))
        throw data_error("training data must contain both classes");
}

// Solve the LS-SVM KKT system
//   [ 0  y^T           ] [b]   [0]
//   [ y  Omega + I/c   ] [a] = [1]
// with a linear kernel on `features` scaled by 1/eta, and map the dual
// solution back to the primal weight vector.
inline std::pair<Vector, double> solve_ls_svm(const Matrix& features, const Vector& labels,
                                              double c, double eta) {
    const Eigen::Index m = features.rows();
    Matrix system = Matrix::Zero(m + 1, m + 1);
    system.block(1, 0, m, 1) = labels;
    system.block(0, 1, 1, m) = labels.transpose();
    const Matrix kernel = (features * features.transpose()) / eta;
    system.block(1, 1, m, m) =
        labels.asDiagonal() * kernel * labels.asDiagonal() + Matrix::Identity(m, m) / c;

    Vector rhs = Vector::Ones(m + 1);
    rhs(0) = 0.0;
    const Vector sol = Eigen::FullPivLU<Matrix>(system).solve(rhs);
    const double bias = sol(0);
    const Vector alpha = sol.tail(m);
    Vector w = Vector::Zero(features.cols());
    for (Eigen::Index i = 0; i < m; ++i) w += alpha(i) * labels(i) * features.row(i).transpose();
    return {w / eta, bias};
}

} // namespace detail

/// Plain vector LS-SVM; the default base learner of the TEL ensemble.
class LsSvmClassifier {
public:
    explicit LsSvmClassifier(double c = 1.0) : c_(c) {
        if (!(c > 0.0)) throw argument_error("ls-svm regularisation c must be positive");
    }

    LsSvmClassifier(Vector weights, double bias, double c)
        : weights_(std::move(weights)), bias_(bias), c_(c) {}

    void train(const Matrix& features, const Vector& labels) {
        std::tie(weights_, bias_) = detail::solve_ls_svm(features, labels, c_, 1.0);
    }

    double decision(const Vector& x) const { return weights_.dot(x) + bias_; }
    int predict(const Vector& x) const { return decision(x) >= 0.0 ? 1 : -1; }

    const Vector& weights() const { return weights_; }
    double bias() const { return bias_; }
    double c() const { return c_; }

private:
    Vector weights_;
    double bias_ = 0.0;
    double c_ = 1.0;
};

/// Rank-1 support tensor machine: decision(X) = <X, w1 o ... o wN> + b.
struct LsstmModel {
    std::vector<Vector> mode_vectors;
    double bias = 0.0;
    double c = 1.0;

    Shape shape() const {
        Shape s(mode_vectors.size());
        for (std::size_t n = 0; n < mode_vectors.size(); ++n)
            s[n] = static_cast<std::size_t>(mode_vectors[n].size());
        return s;
    }
};

struct LsstmTrainResult {
    LsstmModel model;
    int iterations = 0;
    std::vector<double> objective_trace; // regularised LS-SVM loss per sweep
    bool converged = false;
};

namespace detail {

// Contract a sample with every mode vector except `keep`; contracted modes
// keep their position with dimension 1, so the result is the length-I_keep
// vector of the remaining axis.
inline Vector contract_others(const Tensor& x, const std::vector<Vector>& w, std::size_t keep) {
    std::vector<double> values = x.values();
    Shape shape = x.shape();
    for (std::size_t m = 0; m < w.size(); ++m) {
        if (m == keep) continue;
        auto [next, next_shape] = mode_apply(values, shape, m, w[m].transpose());
        values = std::move(next);
        shape = std::move(next_shape);
    }
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline double contract_all(const Tensor& x, const std::vector<Vector>& w) {
    return contract_others(x, w, w.size())(0);
}

} // namespace detail

inline double lsstm_decision(const LsstmModel& m, const Tensor& x) {
    if (x.shape() != m.shape()) throw dimension_error("sample shape does not match the model");
    return detail::contract_all(x, m.mode_vectors) + m.bias;
}

inline int lsstm_predict(const LsstmModel& m, const Tensor& x) {
    return lsstm_decision(m, x) >= 0.0 ? 1 : -1;
}

/// Train the LSSTM by alternating over modes: with all but one mode vector
/// fixed, each sample contracts to a vector and (w_n, b) solve a standard
/// LS-SVM system with the norms of the fixed vectors factored in.
inline LsstmTrainResult lsstm_train(const TensorDataset& d, double c, const FitOptions& opts = {}) {
    detail::validate(opts);
    if (!(c > 0.0)) throw argument_error("lsstm regularisation c must be positive");
    detail::validate_dataset(d, true);

    const Shape& shape = d.samples[0].shape();
    const std::size_t order = shape.size();
    const std::size_t count = d.samples.size();
    Vector labels(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) labels(static_cast<Eigen::Index>(i)) = d.labels[i];

    LsstmTrainResult res;
    std::vector<Vector>& w = res.model.mode_vectors;
    w.reserve(order);
    for (std::size_t n = 0; n < order; ++n)
        w.push_back(Vector::Ones(static_cast<Eigen::Index>(shape[n])) /
                    std::sqrt(static_cast<double>(shape[n])));
    double bias = 0.0;

    auto objective = [&]() {
        double reg = 1.0;
        for (const auto& wn : w) reg *= wn.squaredNorm();
        double loss = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double e =
                1.0 - labels(static_cast<Eigen::Index>(i)) *
                          (detail::contract_all(d.samples[i], w) + bias);
            loss += e * e;
        }
        return 0.5 * reg + 0.5 * c * loss;
    };

    for (int it = 1; it <= opts.max_iter; ++it) {
        double max_change = 0.0;
        for (std::size_t n = 0; n < order; ++n) {
            double eta = 1.0;
            for (std::size_t m = 0; m < order; ++m)
                if (m != n) eta *= w[m].squaredNorm();
            if (!(eta > 0.0))
                throw numeric_error("lsstm mode vector collapsed to zero during training");

            Matrix features(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(shape[n]));
            for (std::size_t i = 0; i < count; ++i)
                features.row(static_cast<Eigen::Index>(i)) =
                    detail::contract_others(d.samples[i], w, n).transpose();

            auto [wn, b] = detail::solve_ls_svm(features, labels, c, eta);
            const double base = w[n].norm();
            max_change = std::max(max_change, (wn - w[n]).norm() / (base > 0.0 ? base : 1.0));
            w[n] = std::move(wn);
            bias = b;
        }
        res.objective_trace.push_back(objective());
        res.iterations = it;
        if (opts.verbose)
            std::cerr << "lsstm sweep " << it << ": objective " << res.objective_trace.back() << "\n";
        if (max_change < opts.tol) {
            res.converged = true;
            break;
        }
    }
    res.model.bias = bias;
    res.model.c = c;
    return res;
}

enum class FormKind { cpd, tkd };

/// Which decomposition feeds the ensemble: CPD with a single rank or
/// Tucker (HOSVD) with per-mode ranks.
struct DecompositionSpec {
    FormKind form = FormKind::cpd;
    std::vector<std::size_t> ranks;
};

/// Tensor ensemble learner: one base classifier per (mode, component) slot
/// of the per-sample decomposition, combined by unweighted majority vote
/// (ties go to +1).
template <class Base = LsSvmClassifier>
struct TelModel {
    struct Slot {
        std::size_t mode = 0;
        std::size_t component = 0;
        Base learner;
    };

    DecompositionSpec spec;
    FitOptions options; // reused to decompose at prediction time
    Shape shape;
    std::vector<Slot> slots;
};

namespace detail {

// Factor columns per slot; the CPD weight is absorbed into the mode-0 slot.
template <class OnSlot>
void tel_slot_vectors(const DecompositionSpec& spec, const Tensor& x, const FitOptions& opts,
                      OnSlot&& on_slot) {
    if (spec.form == FormKind::cpd) {
        const CpdResult r = cpd_als(x, spec.ranks[0], opts);
        for (std::size_t n = 0; n < x.order(); ++n)
            for (std::size_t c = 0; c < spec.ranks[0]; ++c) {
                Vector v = r.form.factor(n).col(static_cast<Eigen::Index>(c));
                if (n == 0) v *= r.form.weights()(static_cast<Eigen::Index>(c));
                on_slot(n, c, std::move(v));
            }
    } else {
        const TkdResult r = hosvd(x, spec.ranks);
        for (std::size_t n = 0; n < x.order(); ++n)
            for (std::size_t c = 0; c < spec.ranks[n]; ++c)
                on_slot(n, c, Vector(r.form.factor(n).col(static_cast<Eigen::Index>(c))));
    }
}

inline void validate_spec(const DecompositionSpec& spec, const Shape& shape) {
    if (spec.form == FormKind::cpd) {
        if (spec.ranks.size() != 1) throw argument_error("cpd spec expects a single rank");
        if (spec.ranks[0] < 1) throw argument_error("cpd rank must be >= 1");
    } else {
        if (spec.ranks.size() != shape.size())
            throw argument_error("tkd spec expects one rank per mode");
        for (std::size_t n = 0; n < shape.size(); ++n)
            if (spec.ranks[n] < 1 || spec.ranks[n] > shape[n])
                throw argument_error("tkd rank for mode " + std::to_string(n) +
                                     " out of range [1, " + std::to_string(shape[n]) + "]");
    }
}

} // namespace detail

/// Decompose every sample, regroup the factor columns into one dataset per
/// (mode, component) slot and train a base learner on each.
template <class Base = LsSvmClassifier, class Factory>
TelModel<Base> tel_train(const TensorDataset& d, const DecompositionSpec& spec, Factory&& factory,
                         const FitOptions& opts = {}) {
    detail::validate(opts);
    detail::validate_dataset(d, true);
    const Shape& shape = d.samples[0].shape();
    detail::validate_spec(spec, shape);
    const std::size_t count = d.samples.size();

    // slot key -> per-sample rows
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    std::vector<Matrix> slot_rows;
    for (std::size_t i = 0; i < count; ++i) {
        try {
            std::size_t slot = 0;
            detail::tel_slot_vectors(spec, d.samples[i], opts,
                                     [&](std::size_t n, std::size_t c, Vector v) {
                                         if (i == 0) {
                                             keys.emplace_back(n, c);
                                             slot_rows.emplace_back(
                                                 static_cast<Eigen::Index>(count), v.size());
                                         }
                                         slot_rows[slot].row(static_cast<Eigen::Index>(i)) =
                                             v.transpose();
                                         ++slot;
                                     });
        } catch (const argument_error&) {
            throw;
        } catch (const error& e) {
            throw data_error("decomposition failed for sample " + std::to_string(i) + ": " +
                             e.what());
        }
    }

    Vector labels(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) labels(static_cast<Eigen::Index>(i)) = d.labels[i];

    TelModel<Base> model;
    model.spec = spec;
    model.options = opts;
    model.shape = shape;
    model.slots.reserve(keys.size());
    for (std::size_t s = 0; s < keys.size(); ++s) {
        typename TelModel<Base>::Slot slot;
        slot.mode = keys[s].first;
        slot.component = keys[s].second;
        slot.learner = factory();
        slot.learner.train(slot_rows[s], labels);
        model.slots.push_back(std::move(slot));
    }
    return model;
}

template <class Base>
int tel_predict(const TelModel<Base>& m, const Tensor& x) {
    if (x.shape() != m.shape) throw dimension_error("sample shape does not match the model");
    std::vector<Vector> vectors(m.slots.size());
    std::vector<std::vector<std::size_t>> lookup; // mode -> component -> slot index
    lookup.resize(x.order());
    for (std::size_t s = 0; s < m.slots.size(); ++s) {
        auto& per_mode = lookup[m.slots[s].mode];
        if (per_mode.size() <= m.slots[s].component) per_mode.resize(m.slots[s].component + 1);
        per_mode[m.slots[s].component] = s;
    }
    detail::tel_slot_vectors(m.spec, x, m.options, [&](std::size_t n, std::size_t c, Vector v) {
        vectors[lookup[n][c]] = std::move(v);
    });

    int votes = 0;
    for (std::size_t s = 0; s < m.slots.size(); ++s)
        votes += m.slots[s].learner.predict(vectors[s]);
    return votes >= 0 ? 1 : -1;
}

} // namespace tensorkit
