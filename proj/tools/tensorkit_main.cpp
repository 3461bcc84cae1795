// tensorkit command-line interface.
//
// Exit codes: 0 success, 2 argument errors, 3 data/validation errors,
// 4 numeric failures. Standard output carries one machine-readable JSON
// record per invocation; all diagnostics go to standard error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tensorkit/tensorkit.hpp"

namespace tk = tensorkit;
using tk::json;

namespace {

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& flag) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v < 1) throw std::invalid_argument("");
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw tk::argument_error(flag + ": '" + item + "' is not a positive integer");
        }
    }
    if (out.empty()) throw tk::argument_error(flag + ": empty list");
    return out;
}

tk::Matrix tensor_to_matrix(const tk::Tensor& t, const std::string& what) {
    if (t.order() != 2) throw tk::dimension_error(what + " must be an order-2 tensor");
    return tk::detail::unfold_vals(t.values(), t.shape(), 0);
}

tk::Tensor matrix_to_tensor(const tk::Matrix& m) {
    std::vector<double> values(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            values[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
    return tk::Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                      std::move(values));
}

struct Manifest {
    std::vector<std::string> paths;
    std::vector<int> labels; // empty when the manifest carries no labels
};

// Each line: path[,label]; paths are resolved relative to the manifest.
Manifest read_manifest(const std::string& path, bool need_labels) {
    std::ifstream in(path);
    if (!in) throw tk::io_error("cannot open manifest '" + path + "'");
    const auto base = std::filesystem::path(path).parent_path();
    Manifest m;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto comma = line.find(',');
        std::string entry = comma == std::string::npos ? line : line.substr(0, comma);
        const auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        entry = strip(entry);
        if (entry.empty())
            throw tk::data_error("manifest '" + path + "' line " + std::to_string(row) +
                                 ": missing path");
        m.paths.push_back((base / entry).string());
        if (comma != std::string::npos) {
            const std::string label = strip(line.substr(comma + 1));
            if (label != "1" && label != "+1" && label != "-1")
                throw tk::data_error("manifest '" + path + "' line " + std::to_string(row) +
                                     ": label must be -1 or +1");
            m.labels.push_back(label == "-1" ? -1 : 1);
        } else if (need_labels) {
            throw tk::data_error("manifest '" + path + "' line " + std::to_string(row) +
                                 ": missing label");
        }
    }
    if (m.paths.empty()) throw tk::data_error("manifest '" + path + "' is empty");
    if (!m.labels.empty() && m.labels.size() != m.paths.size())
        throw tk::data_error("manifest '" + path + "' mixes labelled and unlabelled lines");
    return m;
}

tk::FitOptions fit_options(int max_iter, double tol, std::uint64_t seed, bool verbose) {
    tk::FitOptions opts;
    opts.max_iter = max_iter;
    opts.tol = tol;
    opts.seed = seed;
    opts.verbose = verbose;
    return opts;
}

void print_record(const json& j) { std::cout << j.dump() << "\n"; }

void run_decompose(const std::string& method, const std::string& rank_text, double eps,
                   bool eps_set, std::size_t sample_size, bool sample_set,
                   const tk::FitOptions& opts, const std::string& in_path,
                   const std::string& out_path, const std::string& report_path,
                   const std::string& plot_kind) {
    const tk::Tensor x = tk::load_tensor(in_path);
    std::optional<std::string> plot =
        plot_kind.empty() ? std::nullopt : std::optional<std::string>(plot_kind);

    json record;
    record["method"] = method;
    const auto finish_report_cpd = [&](const tk::TensorCPD& form, double err) {
        if (!report_path.empty()) tk::emit_report(form, report_path, err, plot);
    };
    const auto finish_report_tkd = [&](const tk::TensorTKD& form, double err) {
        if (!report_path.empty()) tk::emit_report(form, report_path, err, plot);
    };

    if (method == "cpd" || method == "cpd-rand") {
        const auto ranks = parse_size_list(rank_text, "--rank");
        if (ranks.size() != 1) throw tk::argument_error("--rank: cpd expects a single rank");
        tk::CpdResult res;
        if (method == "cpd") {
            res = tk::cpd_als(x, ranks[0], opts);
        } else {
            if (!sample_set) throw tk::argument_error("--sample-size is required for cpd-rand");
            res = tk::cpd_randomized(x, ranks[0], sample_size, opts);
        }
        tk::save(res.form, out_path);
        finish_report_cpd(res.form, res.error_trace.back());
        record["rel_error"] = res.error_trace.back();
        record["iterations"] = res.iterations;
        record["converged"] = res.converged;
    } else if (method == "hosvd" || method == "hooi") {
        auto ranks = parse_size_list(rank_text, "--rank");
        if (ranks.size() == 1) ranks.assign(x.order(), ranks[0]);
        const tk::TkdResult res =
            method == "hosvd" ? tk::hosvd(x, ranks) : tk::hooi(x, ranks, opts);
        tk::save(res.form, out_path);
        finish_report_tkd(res.form, res.error_trace.back());
        record["rel_error"] = res.error_trace.back();
        record["iterations"] = res.iterations;
        record["converged"] = res.converged;
    } else if (method == "tt") {
        if (!report_path.empty())
            throw tk::argument_error("--report supports cpd and tkd forms only");
        tk::TtResult res;
        if (eps_set && !rank_text.empty())
            throw tk::argument_error("give either --eps or --rank for tt, not both");
        if (eps_set) {
            res = tk::tt_svd(x, eps);
        } else if (!rank_text.empty()) {
            res = tk::tt_svd(x, parse_size_list(rank_text, "--rank"));
        } else {
            throw tk::argument_error("tt needs --eps or --rank");
        }
        tk::save(res.form, out_path);
        record["rel_error"] = res.error_trace.back();
        record["iterations"] = res.iterations;
        record["converged"] = res.converged;
    } else {
        throw tk::argument_error("--method must be one of cpd, cpd-rand, hosvd, hooi, tt");
    }
    print_record(record);
}

int dispatch(int argc, char** argv) {
    CLI::App app{"tensorkit: multilinear analysis toolkit"};
    app.require_subcommand(1);

    // ---- import ----------------------------------------------------------
    auto* import_cmd = app.add_subcommand("import", "Import a CSV file as a tensor");
    std::string import_csv_path, import_shape, import_out, import_names;
    import_cmd->add_option("--csv", import_csv_path, "CSV input")->required();
    import_cmd->add_option("--shape", import_shape, "comma-separated dimensions")->required();
    import_cmd->add_option("--out", import_out, "output .htb path")->required();
    import_cmd->add_option("--mode-names", import_names, "comma-separated mode names");
    import_cmd->callback([&]() {
        const auto shape = parse_size_list(import_shape, "--shape");
        tk::Tensor t = tk::import_csv(import_csv_path, shape);
        if (!import_names.empty()) {
            std::vector<std::string> names;
            std::stringstream ss(import_names);
            std::string item;
            while (std::getline(ss, item, ',')) names.push_back(item);
            t = tk::tensor_new(t.shape(), t.values(), names);
        }
        tk::save(t, import_out);
        json record;
        record["shape"] = t.shape();
        record["path"] = import_out;
        print_record(record);
    });

    // ---- decompose -------------------------------------------------------
    auto* dec = app.add_subcommand("decompose", "Fit an efficient form to a tensor");
    std::string dec_method, dec_rank, dec_in, dec_out, dec_report, dec_plot;
    double dec_eps = 0.0, dec_tol = 1e-8;
    std::size_t dec_sample = 0;
    int dec_max_iter = 50;
    std::uint64_t dec_seed = 0;
    bool dec_verbose = false;
    dec->add_option("--method", dec_method, "cpd | cpd-rand | hosvd | hooi | tt")->required();
    dec->add_option("--rank", dec_rank, "rank (cpd) or comma-separated ranks (hosvd/hooi/tt)");
    auto* eps_opt = dec->add_option("--eps", dec_eps, "tt relative-error budget");
    auto* sample_opt = dec->add_option("--sample-size", dec_sample, "cpd-rand row sample size");
    dec->add_option("--max-iter", dec_max_iter, "maximum sweeps");
    dec->add_option("--tol", dec_tol, "convergence tolerance");
    dec->add_option("--seed", dec_seed, "seed for randomised initialisation");
    dec->add_flag("--verbose", dec_verbose, "per-sweep progress on stderr");
    dec->add_option("--in", dec_in, "input tensor .htb")->required();
    dec->add_option("--out", dec_out, "output form .htb")->required();
    dec->add_option("--report", dec_report, "also emit a plot-data report");
    dec->add_option("--plot-kind", dec_plot, "force the report plot kind (line | bar)");
    dec->callback([&]() {
        if (dec_method != "tt" && dec_rank.empty())
            throw tk::argument_error("--rank is required for method " + dec_method);
        run_decompose(dec_method, dec_rank, dec_eps, eps_opt->count() > 0, dec_sample,
                      sample_opt->count() > 0,
                      fit_options(dec_max_iter, dec_tol, dec_seed, dec_verbose), dec_in, dec_out,
                      dec_report, dec_plot);
    });

    // ---- reconstruct -----------------------------------------------------
    auto* rec = app.add_subcommand("reconstruct", "Expand a stored form into a dense tensor");
    std::string rec_in, rec_out;
    rec->add_option("--in", rec_in, "form .htb (cpd, tkd or tt)")->required();
    rec->add_option("--out", rec_out, "output tensor .htb")->required();
    rec->callback([&]() {
        const tk::AnyValue value = tk::load_any(rec_in);
        tk::Tensor dense = std::visit(
            [&](const auto& v) -> tk::Tensor {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, tk::TensorCPD> || std::is_same_v<T, tk::TensorTKD> ||
                              std::is_same_v<T, tk::TensorTT>) {
                    return tk::reconstruct(v);
                } else {
                    throw tk::validation_error("field 'kind': expected cpd, tkd or tt");
                }
            },
            value);
        tk::save(dense, rec_out);
        json record;
        record["shape"] = dense.shape();
        record["path"] = rec_out;
        print_record(record);
    });

    // ---- residual --------------------------------------------------------
    auto* res_cmd = app.add_subcommand("residual", "Relative error of a form against a tensor");
    std::string res_data, res_form;
    res_cmd->add_option("--data", res_data, "tensor .htb")->required();
    res_cmd->add_option("--form", res_form, "form .htb")->required();
    res_cmd->callback([&]() {
        const tk::Tensor x = tk::load_tensor(res_data);
        const tk::AnyValue value = tk::load_any(res_form);
        const double err = std::visit(
            [&](const auto& v) -> double {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, tk::TensorCPD> || std::is_same_v<T, tk::TensorTKD> ||
                              std::is_same_v<T, tk::TensorTT>) {
                    return tk::rel_error(x, v);
                } else {
                    throw tk::validation_error("field 'kind': expected cpd, tkd or tt");
                }
            },
            value);
        json record;
        record["rel_error"] = err;
        print_record(record);
    });

    // ---- fuse ------------------------------------------------------------
    auto* fuse_cmd = app.add_subcommand("fuse", "Coupled factorisations (cmtf | parafac2)");
    std::string fuse_method, fuse_in, fuse_side, fuse_out, fuse_out_side, fuse_prefix;
    std::vector<std::string> fuse_slices;
    std::string fuse_rank;
    double fuse_tol = 1e-8;
    int fuse_max_iter = 50;
    std::uint64_t fuse_seed = 0;
    bool fuse_verbose = false;
    fuse_cmd->add_option("--method", fuse_method, "cmtf | parafac2")->required();
    fuse_cmd->add_option("--rank", fuse_rank, "shared rank")->required();
    fuse_cmd->add_option("--in", fuse_in, "cmtf: coupled tensor .htb");
    fuse_cmd->add_option("--side", fuse_side, "cmtf: side matrix .htb (order-2 tensor)");
    fuse_cmd->add_option("--out", fuse_out, "cmtf: output cpd .htb");
    fuse_cmd->add_option("--out-side", fuse_out_side, "cmtf: output side-factor .htb");
    fuse_cmd->add_option("--slice", fuse_slices, "parafac2: slice .htb, repeatable");
    fuse_cmd->add_option("--out-prefix", fuse_prefix, "parafac2: output prefix");
    fuse_cmd->add_option("--max-iter", fuse_max_iter, "maximum sweeps");
    fuse_cmd->add_option("--tol", fuse_tol, "convergence tolerance");
    fuse_cmd->add_option("--seed", fuse_seed, "seed");
    fuse_cmd->add_flag("--verbose", fuse_verbose, "per-sweep progress on stderr");
    fuse_cmd->callback([&]() {
        const auto ranks = parse_size_list(fuse_rank, "--rank");
        if (ranks.size() != 1) throw tk::argument_error("--rank: fuse expects a single rank");
        const auto opts = fit_options(fuse_max_iter, fuse_tol, fuse_seed, fuse_verbose);
        json record;
        if (fuse_method == "cmtf") {
            if (fuse_in.empty() || fuse_side.empty() || fuse_out.empty() || fuse_out_side.empty())
                throw tk::argument_error("cmtf needs --in, --side, --out and --out-side");
            tk::CoupledData data{tk::load_tensor(fuse_in),
                                 tensor_to_matrix(tk::load_tensor(fuse_side), "--side")};
            const tk::CmtfResult res = tk::cmtf(data, ranks[0], opts);
            tk::save(res.cpd, fuse_out);
            tk::save(matrix_to_tensor(res.side_factor), fuse_out_side);
            record["rel_error"] = res.error_trace.back();
            record["iterations"] = res.iterations;
            record["converged"] = res.converged;
        } else if (fuse_method == "parafac2") {
            if (fuse_slices.empty() || fuse_prefix.empty())
                throw tk::argument_error("parafac2 needs --slice (repeatable) and --out-prefix");
            tk::Parafac2Data data;
            for (const auto& path : fuse_slices)
                data.slices.push_back(tensor_to_matrix(tk::load_tensor(path), "--slice"));
            const tk::Parafac2Result res = tk::parafac2(data, ranks[0], opts);
            for (std::size_t k = 0; k < res.u.size(); ++k)
                tk::save(matrix_to_tensor(res.u[k]), fuse_prefix + ".u" + std::to_string(k) + ".htb");
            tk::save(matrix_to_tensor(res.s), fuse_prefix + ".s.htb");
            tk::save(matrix_to_tensor(res.v), fuse_prefix + ".v.htb");
            record["rel_error"] = res.error_trace.back();
            record["iterations"] = res.iterations;
            record["converged"] = res.converged;
        } else {
            throw tk::argument_error("--method must be cmtf or parafac2");
        }
        print_record(record);
    });

    // ---- classify --------------------------------------------------------
    auto* cls = app.add_subcommand("classify", "Tensor classifiers (lsstm | tel)");
    cls->require_subcommand(1);

    auto* cls_train = cls->add_subcommand("train", "Train a classifier");
    std::string ct_model, ct_data, ct_out, ct_form = "cpd", ct_rank;
    double ct_c = 1.0, ct_base_c = 1.0, ct_tol = 1e-8;
    int ct_max_iter = 50;
    std::uint64_t ct_seed = 0;
    bool ct_verbose = false;
    cls_train->add_option("--model", ct_model, "lsstm | tel")->required();
    cls_train->add_option("--data", ct_data, "manifest CSV: path,label per line")->required();
    cls_train->add_option("--out", ct_out, "output model .htb")->required();
    cls_train->add_option("--c", ct_c, "lsstm regularisation");
    cls_train->add_option("--form", ct_form, "tel: cpd | tkd");
    cls_train->add_option("--rank", ct_rank, "tel: rank (cpd) or ranks per mode (tkd)");
    cls_train->add_option("--base-c", ct_base_c, "tel: base learner regularisation");
    cls_train->add_option("--max-iter", ct_max_iter, "maximum sweeps");
    cls_train->add_option("--tol", ct_tol, "convergence tolerance");
    cls_train->add_option("--seed", ct_seed, "seed");
    cls_train->add_flag("--verbose", ct_verbose, "per-sweep progress on stderr");
    cls_train->callback([&]() {
        const Manifest manifest = read_manifest(ct_data, true);
        tk::TensorDataset dataset;
        for (const auto& path : manifest.paths) dataset.samples.push_back(tk::load_tensor(path));
        dataset.labels = manifest.labels;
        const auto opts = fit_options(ct_max_iter, ct_tol, ct_seed, ct_verbose);
        json record;
        if (ct_model == "lsstm") {
            const tk::LsstmTrainResult res = tk::lsstm_train(dataset, ct_c, opts);
            tk::save(res.model, ct_out);
            record["iterations"] = res.iterations;
            record["converged"] = res.converged;
            record["objective"] = res.objective_trace.back();
        } else if (ct_model == "tel") {
            if (ct_rank.empty()) throw tk::argument_error("--rank is required for tel");
            tk::DecompositionSpec spec;
            if (ct_form == "cpd") spec.form = tk::FormKind::cpd;
            else if (ct_form == "tkd") spec.form = tk::FormKind::tkd;
            else throw tk::argument_error("--form must be cpd or tkd");
            spec.ranks = parse_size_list(ct_rank, "--rank");
            if (spec.form == tk::FormKind::tkd && spec.ranks.size() == 1)
                spec.ranks.assign(dataset.samples[0].order(), spec.ranks[0]);
            const double base_c = ct_base_c;
            const auto model = tk::tel_train(
                dataset, spec, [base_c]() { return tk::LsSvmClassifier(base_c); }, opts);
            tk::save(model, ct_out);
            record["learners"] = model.slots.size();
        } else {
            throw tk::argument_error("--model must be lsstm or tel");
        }
        record["samples"] = dataset.samples.size();
        print_record(record);
    });

    auto* cls_pred = cls->add_subcommand("predict", "Predict the label of a sample");
    std::string cp_model, cp_file, cp_in;
    cls_pred->add_option("--model", cp_model, "lsstm | tel")->required();
    cls_pred->add_option("--model-file", cp_file, "trained model .htb")->required();
    cls_pred->add_option("--in", cp_in, "sample tensor .htb")->required();
    cls_pred->callback([&]() {
        const tk::Tensor x = tk::load_tensor(cp_in);
        json record;
        if (cp_model == "lsstm") {
            const tk::LsstmModel m = tk::load_lsstm(cp_file);
            record["label"] = tk::lsstm_predict(m, x);
            record["decision"] = tk::lsstm_decision(m, x);
        } else if (cp_model == "tel") {
            const auto m = tk::load_tel(cp_file);
            record["label"] = tk::tel_predict(m, x);
        } else {
            throw tk::argument_error("--model must be lsstm or tel");
        }
        print_record(record);
    });

    // ---- stats -----------------------------------------------------------
    auto* stats = app.add_subcommand("stats", "Tensor-valued Gaussian models");
    stats->require_subcommand(1);

    auto* st_fit = stats->add_subcommand("fit", "Fit a separable Gaussian to samples");
    std::string sf_data, sf_out;
    double sf_tol = 1e-8, sf_ridge = 0.0;
    int sf_max_iter = 50;
    bool sf_verbose = false;
    st_fit->add_option("--data", sf_data, "manifest CSV: one sample path per line")->required();
    st_fit->add_option("--out", sf_out, "output model .htb")->required();
    st_fit->add_option("--max-iter", sf_max_iter, "maximum flip-flop cycles");
    st_fit->add_option("--tol", sf_tol, "convergence tolerance");
    st_fit->add_option("--ridge", sf_ridge, "ridge added to each covariance update");
    st_fit->add_flag("--verbose", sf_verbose, "per-cycle progress on stderr");
    st_fit->callback([&]() {
        const Manifest manifest = read_manifest(sf_data, false);
        std::vector<tk::Tensor> samples;
        for (const auto& path : manifest.paths) samples.push_back(tk::load_tensor(path));
        const auto res =
            tk::fit(samples, fit_options(sf_max_iter, sf_tol, 0, sf_verbose), sf_ridge);
        tk::save(res.model, sf_out);
        json record;
        record["iterations"] = res.iterations;
        record["converged"] = res.converged;
        record["loglik"] = res.loglik_trace.back();
        record["samples"] = samples.size();
        print_record(record);
    });

    auto* st_logpdf = stats->add_subcommand("logpdf", "Log density of a sample under a model");
    std::string sl_model, sl_in;
    st_logpdf->add_option("--model", sl_model, "tensor_normal .htb")->required();
    st_logpdf->add_option("--in", sl_in, "sample tensor .htb")->required();
    st_logpdf->callback([&]() {
        const tk::TensorNormal m = tk::load_tensor_normal(sl_model);
        const tk::Tensor x = tk::load_tensor(sl_in);
        json record;
        record["logpdf"] = tk::logpdf(m, x);
        print_record(record);
    });

    auto* st_sample = stats->add_subcommand("sample", "Draw samples from a model");
    std::string ss_model, ss_prefix;
    std::size_t ss_count = 1;
    std::uint64_t ss_seed = 0;
    st_sample->add_option("--model", ss_model, "tensor_normal .htb")->required();
    st_sample->add_option("--count", ss_count, "number of samples")->required();
    st_sample->add_option("--seed", ss_seed, "seed");
    st_sample->add_option("--out-prefix", ss_prefix, "writes PREFIX.<i>.htb")->required();
    st_sample->callback([&]() {
        const tk::TensorNormal m = tk::load_tensor_normal(ss_model);
        const auto samples = tk::sample(m, ss_count, ss_seed);
        for (std::size_t i = 0; i < samples.size(); ++i)
            tk::save(samples[i], ss_prefix + "." + std::to_string(i) + ".htb");
        json record;
        record["count"] = samples.size();
        print_record(record);
    });

    auto* st_dof = stats->add_subcommand("dof-ratio", "Separable vs unstructured parameter counts");
    std::string sd_shape;
    st_dof->add_option("--shape", sd_shape, "comma-separated dimensions")->required();
    st_dof->callback([&]() {
        const tk::DofCount dof = tk::dof_ratio(parse_size_list(sd_shape, "--shape"));
        json record;
        record["eta_tensor"] = dof.eta_tensor;
        record["eta_multi"] = dof.eta_multi;
        record["ratio"] = dof.ratio;
        print_record(record);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const tk::argument_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tk::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const tk::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
