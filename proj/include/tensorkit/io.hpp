#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tensorkit/errors.hpp"
#include "tensorkit/forms.hpp"
#include "tensorkit/gaussian.hpp"
#include "tensorkit/learning.hpp"
#include "tensorkit/tensor.hpp"

// Single JSON container format ("htb"): every persisted value is one
// self-describing document with format_version "1" and a `kind` of
// tensor | cpd | tkd | tt | tensor_normal | lsstm | tel. Numeric arrays are
// flat and row-major; serialisation round-trips doubles exactly.

namespace tensorkit {

using json = nlohmann::json;

using AnyValue = std::variant<Tensor, TensorCPD, TensorTKD, TensorTT, TensorNormal, LsstmModel,
                              TelModel<LsSvmClassifier>>;

namespace detail {

inline json matrix_to_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
}

inline Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                               const std::string& field) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols)
        throw validation_error("field '" + field + "' must hold " + std::to_string(rows * cols) +
                               " numbers");
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j2 = 0; j2 < cols; ++j2) {
            if (!j[k].is_number()) throw validation_error("field '" + field + "' must be numeric");
            m(i, j2) = j[k++].get<double>();
        }
    return m;
}

inline std::vector<double> numbers_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) throw validation_error("field '" + field + "' must be an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw validation_error("field '" + field + "' must be numeric");
        out.push_back(v.get<double>());
    }
    return out;
}

inline Shape shape_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty())
        throw validation_error("field '" + field + "' must be a non-empty array");
    Shape out;
    for (const auto& v : j) {
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() < 1)
            throw validation_error("field '" + field + "' entries must be integers >= 1");
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

inline json modes_to_json(const std::vector<Mode>& modes) {
    json out = json::array();
    for (const auto& m : modes) {
        json jm;
        jm["name"] = m.name;
        if (m.features) jm["features"] = *m.features;
        out.push_back(jm);
    }
    return out;
}

inline std::vector<Mode> modes_from_json(const json& j, const Shape& shape) {
    if (!j.is_array() || j.size() != shape.size())
        throw validation_error("field 'modes' must hold one entry per mode");
    std::vector<Mode> out;
    for (std::size_t n = 0; n < shape.size(); ++n) {
        const json& jm = j[n];
        if (!jm.is_object() || !jm.contains("name") || !jm["name"].is_string() ||
            jm["name"].get<std::string>().empty())
            throw validation_error("field 'modes' entries need a non-empty string 'name'");
        Mode mode;
        mode.name = jm["name"].get<std::string>();
        if (jm.contains("features")) {
            if (!jm["features"].is_array() || jm["features"].size() != shape[n])
                throw validation_error("field 'modes' features of mode " + std::to_string(n) +
                                       " must match its dimension");
            std::vector<std::string> feats;
            for (const auto& f : jm["features"]) {
                if (!f.is_string())
                    throw validation_error("field 'modes' features must be strings");
                feats.push_back(f.get<std::string>());
            }
            mode.features = std::move(feats);
        }
        out.push_back(std::move(mode));
    }
    return out;
}

inline json state_to_json(const std::vector<StateRecord>& state) {
    json out = json::array();
    for (const auto& rec : state) {
        json jr;
        jr["kind"] = to_string(rec.kind);
        jr["params"] = rec.params;
        jr["prior_shape"] = rec.prior_shape;
        if (!rec.ordering.empty()) jr["ordering"] = rec.ordering;
        jr["stashed_modes"] = modes_to_json(rec.stashed_modes);
        out.push_back(jr);
    }
    return out;
}

inline std::vector<StateRecord> state_from_json(const json& j) {
    if (!j.is_array()) throw validation_error("field 'state' must be an array");
    std::vector<StateRecord> out;
    for (const auto& jr : j) {
        if (!jr.is_object() || !jr.contains("kind") || !jr.contains("prior_shape"))
            throw validation_error("field 'state' records need 'kind' and 'prior_shape'");
        StateRecord rec;
        const std::string kind = jr["kind"].get<std::string>();
        if (kind == "unfold") rec.kind = StateKind::unfold;
        else if (kind == "vectorise") rec.kind = StateKind::vectorise;
        else if (kind == "mode-n-product") rec.kind = StateKind::mode_product;
        else throw validation_error("field 'state' has unknown kind '" + kind + "'");
        if (jr.contains("params"))
            for (const auto& p : jr["params"]) rec.params.push_back(p.get<std::size_t>());
        rec.prior_shape = shape_from_json(jr["prior_shape"], "state.prior_shape");
        if (jr.contains("ordering")) rec.ordering = jr["ordering"].get<std::string>();
        if (jr.contains("stashed_modes") && jr["stashed_modes"].is_array())
            for (const auto& jm : jr["stashed_modes"]) {
                Mode mode;
                mode.name = jm.at("name").get<std::string>();
                if (jm.contains("features"))
                    mode.features = jm["features"].get<std::vector<std::string>>();
                rec.stashed_modes.push_back(std::move(mode));
            }
        out.push_back(std::move(rec));
    }
    return out;
}

inline json document_skeleton(const std::string& kind) {
    json j;
    j["format_version"] = "1";
    j["kind"] = kind;
    return j;
}

inline json parse_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw format_error(std::string("'") + path + "': " + e.what());
    }
    if (!j.is_object()) throw validation_error("document root must be an object");
    if (!j.contains("format_version"))
        throw version_error("field 'format_version' is missing");
    if (j["format_version"] != "1")
        throw version_error("unsupported format_version '" +
                            j["format_version"].dump() + "' (expected \"1\")");
    if (!j.contains("kind") || !j["kind"].is_string())
        throw validation_error("field 'kind' is missing");
    return j;
}

inline void expect_kind(const json& j, const std::string& kind) {
    if (j["kind"] != kind)
        throw validation_error("field 'kind': expected '" + kind + "', found '" +
                               j["kind"].get<std::string>() + "'");
}

inline void write_document(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
    if (!out) throw io_error("failed while writing '" + path + "'");
}

} // namespace detail

inline json to_json(const Tensor& t) {
    json j = detail::document_skeleton("tensor");
    j["shape"] = t.shape();
    j["modes"] = detail::modes_to_json(t.modes());
    j["state"] = detail::state_to_json(t.state());
    j["data"] = t.values();
    return j;
}

inline Tensor tensor_from_json(const json& j) {
    detail::expect_kind(j, "tensor");
    if (!j.contains("shape")) throw validation_error("field 'shape' is missing");
    const Shape shape = detail::shape_from_json(j["shape"], "shape");
    if (!j.contains("data")) throw validation_error("field 'data' is missing");
    std::vector<double> data = detail::numbers_from_json(j["data"], "data");
    if (data.size() != detail::element_count(shape))
        throw validation_error("field 'data' holds " + std::to_string(data.size()) +
                               " values but the shape product is " +
                               std::to_string(detail::element_count(shape)));
    std::vector<Mode> modes;
    if (j.contains("modes")) modes = detail::modes_from_json(j["modes"], shape);
    std::vector<StateRecord> state;
    if (j.contains("state")) state = detail::state_from_json(j["state"]);
    return Tensor(shape, std::move(data), std::move(modes), std::move(state));
}

inline json to_json(const TensorCPD& f) {
    json j = detail::document_skeleton("cpd");
    j["shape"] = f.shape();
    j["rank"] = f.rank();
    j["modes"] = detail::modes_to_json(f.modes());
    j["weights"] = std::vector<double>(f.weights().data(), f.weights().data() + f.rank());
    json factors = json::array();
    for (const auto& a : f.factors()) factors.push_back(detail::matrix_to_json(a));
    j["factors"] = factors;
    return j;
}

inline TensorCPD cpd_from_json(const json& j) {
    detail::expect_kind(j, "cpd");
    const Shape shape = detail::shape_from_json(j.at("shape"), "shape");
    if (!j.contains("rank") || !j["rank"].is_number_unsigned() || j["rank"].get<std::size_t>() < 1)
        throw validation_error("field 'rank' must be an integer >= 1");
    const auto rank = static_cast<Eigen::Index>(j["rank"].get<std::size_t>());
    if (!j.contains("factors") || !j["factors"].is_array() || j["factors"].size() != shape.size())
        throw validation_error("field 'factors' must hold one matrix per mode");
    std::vector<Matrix> factors;
    for (std::size_t n = 0; n < shape.size(); ++n)
        factors.push_back(detail::matrix_from_json(j["factors"][n],
                                                   static_cast<Eigen::Index>(shape[n]), rank,
                                                   "factors"));
    const std::vector<double> w = detail::numbers_from_json(j.at("weights"), "weights");
    if (static_cast<Eigen::Index>(w.size()) != rank)
        throw validation_error("field 'weights' must hold one value per component");
    Vector weights = Eigen::Map<const Vector>(w.data(), rank);
    std::vector<Mode> modes;
    if (j.contains("modes")) modes = detail::modes_from_json(j["modes"], shape);
    try {
        return TensorCPD(std::move(weights), std::move(factors), std::move(modes));
    } catch (const form_error& e) {
        throw validation_error(std::string("field 'factors': ") + e.what());
    }
}

inline json to_json(const TensorTKD& f) {
    json j = detail::document_skeleton("tkd");
    j["shape"] = f.shape();
    j["ranks"] = f.ranks();
    j["modes"] = detail::modes_to_json(f.modes());
    j["core"] = f.core().values();
    json factors = json::array();
    for (const auto& a : f.factors()) factors.push_back(detail::matrix_to_json(a));
    j["factors"] = factors;
    return j;
}

inline TensorTKD tkd_from_json(const json& j) {
    detail::expect_kind(j, "tkd");
    const Shape shape = detail::shape_from_json(j.at("shape"), "shape");
    const Shape ranks = detail::shape_from_json(j.at("ranks"), "ranks");
    if (ranks.size() != shape.size())
        throw validation_error("field 'ranks' must hold one rank per mode");
    std::vector<double> core = detail::numbers_from_json(j.at("core"), "core");
    if (core.size() != detail::element_count(ranks))
        throw validation_error("field 'core' holds " + std::to_string(core.size()) +
                               " values but the rank product is " +
                               std::to_string(detail::element_count(ranks)));
    if (!j.contains("factors") || !j["factors"].is_array() || j["factors"].size() != shape.size())
        throw validation_error("field 'factors' must hold one matrix per mode");
    std::vector<Matrix> factors;
    for (std::size_t n = 0; n < shape.size(); ++n)
        factors.push_back(detail::matrix_from_json(j["factors"][n],
                                                   static_cast<Eigen::Index>(shape[n]),
                                                   static_cast<Eigen::Index>(ranks[n]),
                                                   "factors"));
    std::vector<Mode> modes;
    if (j.contains("modes")) modes = detail::modes_from_json(j["modes"], shape);
    try {
        return TensorTKD(Tensor(ranks, std::move(core)), std::move(factors), std::move(modes));
    } catch (const form_error& e) {
        throw validation_error(std::string("field 'factors': ") + e.what());
    }
}

inline json to_json(const TensorTT& f) {
    json j = detail::document_skeleton("tt");
    j["shape"] = f.shape();
    j["ranks"] = f.bond_ranks();
    j["modes"] = detail::modes_to_json(f.modes());
    json cores = json::array();
    for (const auto& c : f.cores()) cores.push_back(c.values());
    j["cores"] = cores;
    return j;
}

inline TensorTT tt_from_json(const json& j) {
    detail::expect_kind(j, "tt");
    const Shape shape = detail::shape_from_json(j.at("shape"), "shape");
    Shape bonds;
    if (shape.size() > 1) bonds = detail::shape_from_json(j.at("ranks"), "ranks");
    if (bonds.size() + 1 != shape.size())
        throw validation_error("field 'ranks' must hold order - 1 bond dimensions");
    if (!j.contains("cores") || !j["cores"].is_array() || j["cores"].size() != shape.size())
        throw validation_error("field 'cores' must hold one core per mode");
    std::vector<Tensor> cores;
    for (std::size_t n = 0; n < shape.size(); ++n) {
        const std::size_t left = n == 0 ? 1 : bonds[n - 1];
        const std::size_t right = n + 1 == shape.size() ? 1 : bonds[n];
        std::vector<double> vals = detail::numbers_from_json(j["cores"][n], "cores");
        if (vals.size() != left * shape[n] * right)
            throw validation_error("field 'cores' entry " + std::to_string(n) +
                                   " does not match its bond dimensions");
        cores.emplace_back(Shape{left, shape[n], right}, std::move(vals));
    }
    std::vector<Mode> modes;
    if (j.contains("modes")) modes = detail::modes_from_json(j["modes"], shape);
    try {
        return TensorTT(std::move(cores), std::move(modes));
    } catch (const form_error& e) {
        throw validation_error(std::string("field 'cores': ") + e.what());
    }
}

inline json to_json(const TensorNormal& m) {
    json j = detail::document_skeleton("tensor_normal");
    j["shape"] = m.shape();
    j["modes"] = detail::modes_to_json(m.mean().modes());
    j["mean"] = m.mean().values();
    json factors = json::array();
    for (const auto& f : m.factors()) factors.push_back(detail::matrix_to_json(f));
    j["factors"] = factors;
    return j;
}

inline TensorNormal tensor_normal_from_json(const json& j) {
    detail::expect_kind(j, "tensor_normal");
    const Shape shape = detail::shape_from_json(j.at("shape"), "shape");
    std::vector<double> mean = detail::numbers_from_json(j.at("mean"), "mean");
    if (mean.size() != detail::element_count(shape))
        throw validation_error("field 'mean' does not match the shape product");
    if (!j.contains("factors") || !j["factors"].is_array() || j["factors"].size() != shape.size())
        throw validation_error("field 'factors' must hold one matrix per mode");
    std::vector<Matrix> factors;
    for (std::size_t n = 0; n < shape.size(); ++n) {
        const auto dim = static_cast<Eigen::Index>(shape[n]);
        factors.push_back(detail::matrix_from_json(j["factors"][n], dim, dim, "factors"));
    }
    std::vector<Mode> modes;
    if (j.contains("modes")) modes = detail::modes_from_json(j["modes"], shape);
    return TensorNormal(Tensor(shape, std::move(mean), std::move(modes)), std::move(factors));
}

inline json to_json(const LsstmModel& m) {
    json j = detail::document_skeleton("lsstm");
    j["shape"] = m.shape();
    j["c"] = m.c;
    j["bias"] = m.bias;
    json vectors = json::array();
    for (const auto& w : m.mode_vectors)
        vectors.push_back(std::vector<double>(w.data(), w.data() + w.size()));
    j["mode_vectors"] = vectors;
    return j;
}

inline LsstmModel lsstm_from_json(const json& j) {
    detail::expect_kind(j, "lsstm");
    const Shape shape = detail::shape_from_json(j.at("shape"), "shape");
    if (!j.contains("mode_vectors") || !j["mode_vectors"].is_array() ||
        j["mode_vectors"].size() != shape.size())
        throw validation_error("field 'mode_vectors' must hold one vector per mode");
    LsstmModel m;
    for (std::size_t n = 0; n < shape.size(); ++n) {
        const std::vector<double> v =
            detail::numbers_from_json(j["mode_vectors"][n], "mode_vectors");
        if (v.size() != shape[n])
            throw validation_error("field 'mode_vectors' entry " + std::to_string(n) +
                                   " does not match its mode dimension");
        m.mode_vectors.push_back(
            Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    m.bias = j.at("bias").get<double>();
    m.c = j.at("c").get<double>();
    if (!(m.c > 0.0)) throw validation_error("field 'c' must be positive");
    return m;
}

inline json to_json(const TelModel<LsSvmClassifier>& m) {
    json j = detail::document_skeleton("tel");
    j["shape"] = m.shape;
    json spec;
    spec["form"] = m.spec.form == FormKind::cpd ? "cpd" : "tkd";
    spec["ranks"] = m.spec.ranks;
    j["spec"] = spec;
    json options;
    options["max_iter"] = m.options.max_iter;
    options["tol"] = m.options.tol;
    options["seed"] = m.options.seed;
    j["options"] = options;
    j["vote"] = "majority";
    json learners = json::array();
    for (const auto& s : m.slots) {
        json l;
        l["mode"] = s.mode;
        l["component"] = s.component;
        l["weights"] = std::vector<double>(s.learner.weights().data(),
                                           s.learner.weights().data() + s.learner.weights().size());
        l["bias"] = s.learner.bias();
        l["c"] = s.learner.c();
        learners.push_back(l);
    }
    j["learners"] = learners;
    return j;
}

inline TelModel<LsSvmClassifier> tel_from_json(const json& j) {
    detail::expect_kind(j, "tel");
    TelModel<LsSvmClassifier> m;
    m.shape = detail::shape_from_json(j.at("shape"), "shape");
    const json& spec = j.at("spec");
    const std::string form = spec.at("form").get<std::string>();
    if (form == "cpd") m.spec.form = FormKind::cpd;
    else if (form == "tkd") m.spec.form = FormKind::tkd;
    else throw validation_error("field 'spec.form' must be 'cpd' or 'tkd'");
    m.spec.ranks = detail::shape_from_json(spec.at("ranks"), "spec.ranks");
    detail::validate_spec(m.spec, m.shape);
    if (j.contains("options")) {
        m.options.max_iter = j["options"].value("max_iter", 50);
        m.options.tol = j["options"].value("tol", 1e-8);
        m.options.seed = j["options"].value("seed", std::uint64_t{0});
    }
    if (!j.contains("learners") || !j["learners"].is_array() || j["learners"].empty())
        throw validation_error("field 'learners' must be a non-empty array");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& l : j["learners"]) {
        const auto mode = l.at("mode").get<std::size_t>();
        const auto component = l.at("component").get<std::size_t>();
        if (mode >= m.shape.size())
            throw validation_error("field 'learners' has a slot mode out of range");
        const std::size_t mode_rank =
            m.spec.form == FormKind::cpd ? m.spec.ranks[0] : m.spec.ranks[mode];
        if (component >= mode_rank)
            throw validation_error("field 'learners' has a slot component out of range");
        if (!seen.insert({mode, component}).second)
            throw validation_error("field 'learners' has a duplicate (mode, component) slot");
        const std::vector<double> w = detail::numbers_from_json(l.at("weights"), "learners");
        if (w.size() != m.shape[mode])
            throw validation_error("field 'learners' weights do not match the slot mode dimension");
        typename TelModel<LsSvmClassifier>::Slot slot;
        slot.mode = mode;
        slot.component = component;
        slot.learner = LsSvmClassifier(
            Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())),
            l.at("bias").get<double>(), l.value("c", 1.0));
        m.slots.push_back(std::move(slot));
    }
    const std::size_t expected = m.spec.form == FormKind::cpd
                                     ? m.shape.size() * m.spec.ranks[0]
                                     : std::accumulate(m.spec.ranks.begin(), m.spec.ranks.end(),
                                                       std::size_t{0});
    if (m.slots.size() != expected)
        throw validation_error("field 'learners' must hold one learner per (mode, component) slot");
    return m;
}

template <class T>
void save(const T& value, const std::string& path) {
    detail::write_document(to_json(value), path);
}

inline Tensor load_tensor(const std::string& path) { return tensor_from_json(detail::parse_document(path)); }
inline TensorCPD load_cpd(const std::string& path) { return cpd_from_json(detail::parse_document(path)); }
inline TensorTKD load_tkd(const std::string& path) { return tkd_from_json(detail::parse_document(path)); }
inline TensorTT load_tt(const std::string& path) { return tt_from_json(detail::parse_document(path)); }
inline TensorNormal load_tensor_normal(const std::string& path) {
    return tensor_normal_from_json(detail::parse_document(path));
}
inline LsstmModel load_lsstm(const std::string& path) { return lsstm_from_json(detail::parse_document(path)); }
inline TelModel<LsSvmClassifier> load_tel(const std::string& path) {
    return tel_from_json(detail::parse_document(path));
}

/// Load any htb document, dispatching on its `kind` field.
inline AnyValue load_any(const std::string& path) {
    const json j = detail::parse_document(path);
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "tensor") return tensor_from_json(j);
    if (kind == "cpd") return cpd_from_json(j);
    if (kind == "tkd") return tkd_from_json(j);
    if (kind == "tt") return tt_from_json(j);
    if (kind == "tensor_normal") return tensor_normal_from_json(j);
    if (kind == "lsstm") return lsstm_from_json(j);
    if (kind == "tel") return tel_from_json(j);
    throw validation_error("field 'kind' has unknown value '" + kind + "'");
}

/// Read exactly prod(shape) numeric cells, row by row then left to right.
inline Tensor import_csv(const std::string& path, const Shape& shape) {
    if (shape.empty()) throw argument_error("shape must have at least one mode");
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");

    std::vector<double> cells;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            ++col;
            const auto begin = cell.find_first_not_of(" \t\r");
            const auto end = cell.find_last_not_of(" \t\r");
            const std::string trimmed =
                begin == std::string::npos ? std::string() : cell.substr(begin, end - begin + 1);
            try {
                std::size_t used = 0;
                const double v = std::stod(trimmed, &used);
                if (trimmed.empty() || used != trimmed.size()) throw std::invalid_argument("");
                cells.push_back(v);
            } catch (const std::exception&) {
                throw format_error("non-numeric cell at row " + std::to_string(row) + ", column " +
                                   std::to_string(col));
            }
        }
    }
    const std::size_t expected = detail::element_count(shape);
    if (cells.size() != expected)
        throw format_error("expected " + std::to_string(expected) + " cells, found " +
                           std::to_string(cells.size()));
    return Tensor(shape, std::move(cells));
}

namespace detail {

inline std::string suggest_plot(std::size_t dim, const std::optional<std::string>& override_kind) {
    if (override_kind) return *override_kind;
    return dim >= 8 ? "line" : "bar";
}

inline json report_entry(const Mode& mode, std::size_t mode_index, std::size_t component,
                         const Matrix& factor, const std::optional<std::string>& plot_kind) {
    json e;
    e["mode"] = mode.name;
    e["mode_index"] = mode_index;
    e["component"] = component;
    const auto col = factor.col(static_cast<Eigen::Index>(component));
    e["values"] = std::vector<double>(col.begin(), col.end());
    if (mode.features) e["features"] = *mode.features;
    e["plot"] = suggest_plot(static_cast<std::size_t>(factor.rows()), plot_kind);
    return e;
}

} // namespace detail

/// Static plot-data bundle: one entry per (mode, component) pair with the
/// factor column, the mode's feature labels and a suggested plot kind.
inline void emit_report(const TensorCPD& form, const std::string& path,
                        std::optional<double> fit_rel_error = std::nullopt,
                        std::optional<std::string> plot_kind = std::nullopt) {
    json j;
    j["kind"] = "cpd";
    j["shape"] = form.shape();
    j["ranks"] = std::vector<std::size_t>{form.rank()};
    if (fit_rel_error) j["rel_error"] = *fit_rel_error;
    json entries = json::array();
    for (std::size_t n = 0; n < form.order(); ++n)
        for (std::size_t r = 0; r < form.rank(); ++r)
            entries.push_back(detail::report_entry(form.modes()[n], n, r, form.factor(n), plot_kind));
    j["entries"] = entries;
    detail::write_document(j, path);
}

inline void emit_report(const TensorTKD& form, const std::string& path,
                        std::optional<double> fit_rel_error = std::nullopt,
                        std::optional<std::string> plot_kind = std::nullopt) {
    json j;
    j["kind"] = "tkd";
    j["shape"] = form.shape();
    j["ranks"] = form.ranks();
    if (fit_rel_error) j["rel_error"] = *fit_rel_error;
    json entries = json::array();
    for (std::size_t n = 0; n < form.order(); ++n)
        for (std::size_t r = 0; r < form.ranks()[n]; ++r)
            entries.push_back(detail::report_entry(form.modes()[n], n, r, form.factor(n), plot_kind));
    j["entries"] = entries;
    detail::write_document(j, path);
}

} // namespace tensorkit
