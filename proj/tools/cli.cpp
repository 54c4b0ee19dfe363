#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "bench.hpp"
#include "fastglz/admm.hpp"
#include "fastglz/error.hpp"
#include "fastglz/matrix_io.hpp"
#include "fastglz/regpath.hpp"
#include "fastglz/synthetic.hpp"
#include "fastglz/tsreg.hpp"

namespace fastglz::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Everything a subcommand can be told, flag or config file alike.
struct RunConfig {
    // data
    std::string x_path;
    std::string y_path;
    std::string d_path;
    std::string responses_path;
    std::string format;
    std::string orientation = "features_by_trials";
    // model
    std::string family = "logistic";
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda = -1.0;
    double alpha = 1.0;
    double mu = 0.0;
    Index s_max = 0;
    std::string groups;
    double outer_tol = 1e-7;
    double feas_tol = 1e-7;
    double kkt_tol = 1e-6;
    double newton_tol = 1e-9;
    Index max_outer = 20000;
    Index max_iters = 500;
    double solve_tol = 1e-9;
    bool no_screening = false;
    // path
    Index n_lambda = 100;
    double lambda_min_ratio = 0.01;
    std::string lambdas;
    // problem family
    Index cv = 0;
    Index bootstrap = 0;
    Index perm = 0;
    bool normalize = false;
    bool include_identity = false;
    std::uint64_t seed = 0;
    // tsreg
    std::string design_path;
    std::string series_path;
    Index ar_order = 2;
    Index pad = 0;
    double tol = 1e-12;
    // mem
    std::uint64_t mem_p = 0, mem_n = 0, mem_smax = 0, mem_k = 0;
    // bench
    Index bench_p = 2000, bench_n = 150, bench_k = 400;
    std::string ks = "1,25,100,400";
    double lambda_fraction = 0.3;
    Index max_per_level = 0;
    Index path_points = 0;
    Index oracle_problems = 10;
    // output
    std::string out;
    int threads = 0;
};

template <class T>
void apply_key(const json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

// Flat JSON object whose keys are the long flag names with '-' as '_'.
void apply_config_file(const fs::path& path, RunConfig& c) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError("config " + path.string() + " must hold a JSON object");
    try {
        apply_key(j, "x", c.x_path);
        apply_key(j, "y", c.y_path);
        apply_key(j, "d", c.d_path);
        apply_key(j, "responses", c.responses_path);
        apply_key(j, "format", c.format);
        apply_key(j, "orientation", c.orientation);
        apply_key(j, "family", c.family);
        apply_key(j, "lambda1", c.lambda1);
        apply_key(j, "lambda2", c.lambda2);
        apply_key(j, "lambda", c.lambda);
        apply_key(j, "alpha", c.alpha);
        apply_key(j, "mu", c.mu);
        apply_key(j, "smax", c.s_max);
        apply_key(j, "groups", c.groups);
        apply_key(j, "outer_tol", c.outer_tol);
        apply_key(j, "feas_tol", c.feas_tol);
        apply_key(j, "kkt_tol", c.kkt_tol);
        apply_key(j, "newton_tol", c.newton_tol);
        apply_key(j, "max_outer", c.max_outer);
        apply_key(j, "max_iters", c.max_iters);
        apply_key(j, "solve_tol", c.solve_tol);
        apply_key(j, "no_screening", c.no_screening);
        apply_key(j, "n_lambda", c.n_lambda);
        apply_key(j, "lambda_min_ratio", c.lambda_min_ratio);
        apply_key(j, "lambdas", c.lambdas);
        apply_key(j, "cv", c.cv);
        apply_key(j, "bootstrap", c.bootstrap);
        apply_key(j, "perm", c.perm);
        apply_key(j, "normalize", c.normalize);
        apply_key(j, "include_identity", c.include_identity);
        apply_key(j, "seed", c.seed);
        apply_key(j, "threads", c.threads);
        apply_key(j, "out", c.out);
    } catch (const json::exception& e) {
        throw ParseError("config " + path.string() + ": " + e.what());
    }
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ParseError(std::string("cannot parse ") + what + " entry '" + item + "'");
        }
    }
    return out;
}

std::vector<Index> parse_index_list(const std::string& text, const char* what) {
    std::vector<Index> out;
    for (double v : parse_double_list(text, what)) {
        if (v != std::floor(v)) throw ParseError(std::string(what) + " entries must be integers");
        out.push_back(static_cast<Index>(v));
    }
    return out;
}

// "0-4,5-9,12" -> {{0..4}, {5..9}, {12}}.
std::vector<std::vector<Index>> parse_groups(const std::string& text) {
    std::vector<std::vector<Index>> groups;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto dash = item.find('-');
        try {
            const long first = std::stol(item.substr(0, dash));
            const long last = dash == std::string::npos ? first : std::stol(item.substr(dash + 1));
            if (first < 0 || last < first) throw std::invalid_argument(item);
            std::vector<Index> g;
            for (long j = first; j <= last; ++j) g.push_back(static_cast<Index>(j));
            groups.push_back(std::move(g));
        } catch (const std::exception&) {
            throw ParseError("cannot parse group range '" + item + "'");
        }
    }
    return groups;
}

Matrix load(const std::string& path, const RunConfig& c, io::Orientation orientation) {
    if (path.empty()) throw ValidationError("missing input file");
    const io::Format format = c.format.empty() ? io::format_from_path(path) : io::parse_format(c.format);
    return io::load_matrix(path, format, orientation);
}

Vector load_vector(const std::string& path, const RunConfig& c) {
    const Matrix m = load(path, c, io::Orientation::FeaturesByTrials);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw DimensionError(path + " must hold a single row or column");
}

ProblemFamily build_family(const RunConfig& c, const Vector& y) {
    const Index n = y.size();
    if (c.cv > 0 && c.bootstrap > 0) {
        throw UnsupportedError("choose cross-validation or bootstrap, not both");
    }
    std::optional<ProblemFamily> weights;
    if (c.cv > 0) weights = cv_family(n, c.cv, y, c.normalize, c.seed);
    if (c.bootstrap > 0) weights = bootstrap_family(n, c.bootstrap, y, c.seed);
    if (c.perm > 0) {
        // Permutation streams are offset from the weight streams so the two
        // draws stay independent under one user seed.
        const ProblemFamily perms = permutation_family(y, c.perm, c.seed ^ 0x5eed'0000'0000'0001ULL, c.include_identity);
        return weights ? compose_product(*weights, perms) : perms;
    }
    if (weights) return *weights;
    return single_problem(y);
}

// D and Y from files (trials x problems) or built from y and the family flags.
ProblemFamily problems_from(const RunConfig& c) {
    if (!c.d_path.empty() || !c.responses_path.empty()) {
        if (c.d_path.empty() || c.responses_path.empty()) throw ValidationError("--d and --responses go together");
        ProblemFamily pf;
        pf.weights = load(c.d_path, c, io::Orientation::FeaturesByTrials);
        pf.responses = load(c.responses_path, c, io::Orientation::FeaturesByTrials);
        if (pf.weights.rows() != pf.responses.rows() || pf.weights.cols() != pf.responses.cols()) {
            throw DimensionError("D and Y differ in shape");
        }
        pf.tags.resize(static_cast<std::size_t>(pf.weights.cols()));
        return pf;
    }
    if (c.y_path.empty()) throw ValidationError("a response file (--y) or --d/--responses is required");
    return build_family(c, load_vector(c.y_path, c));
}

AdmmConfig admm_from(const RunConfig& c, int threads) {
    AdmmConfig a;
    a.lambda1 = c.lambda1;
    a.lambda2 = c.lambda2;
    if (c.mu > 0.0) a.mu = c.mu;
    a.s_max = c.s_max;
    a.outer_tol = c.outer_tol;
    a.feas_tol = c.feas_tol;
    a.kkt_tol = c.kkt_tol;
    a.newton_tol = c.newton_tol;
    a.max_outer = c.max_outer;
    a.solve.tol = c.solve_tol;
    a.solve.max_iters = c.max_iters;
    a.solve.threads = threads;
    a.threads = threads;
    a.screening = !c.no_screening;
    if (!c.groups.empty()) a.groups = parse_groups(c.groups);
    a.validate();
    return a;
}

json tag_json(const ProblemTag& t) {
    json j = json::object();
    if (t.fold) j["fold"] = *t.fold;
    if (t.bootstrap) j["bootstrap"] = *t.bootstrap;
    if (t.permutation) j["permutation"] = *t.permutation;
    return j;
}

json results_json(const std::vector<FitResult>& results) {
    json arr = json::array();
    for (std::size_t k = 0; k < results.size(); ++k) {
        const FitResult& r = results[k];
        arr.push_back({{"index", k},
                       {"objective", r.objective},
                       {"iterations", r.iterations},
                       {"converged", r.converged},
                       {"active_size", r.active_size},
                       {"kkt_residual", r.kkt_residual},
                       {"saturated", r.saturated}});
    }
    return arr;
}

Matrix weight_matrix(const std::vector<FitResult>& results, Index p) {
    Matrix W = Matrix::Zero(p, static_cast<Index>(results.size()));
    for (std::size_t k = 0; k < results.size(); ++k) W.col(static_cast<Index>(k)) = Vector(results[k].weights);
    return W;
}

fs::path with_suffix(const std::string& prefix, const std::string& suffix) {
    if (prefix.empty()) throw ValidationError("an output prefix (--out) is required");
    return fs::path(prefix + suffix);
}

void write_json(const fs::path& path, const json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------

int cmd_fit(const RunConfig& c, int threads, std::ostream& out) {
    const GlzFamily family = GlzFamily::from_name(c.family);
    const ProblemFamily pf = problems_from(c);
    const AdmmConfig admm = admm_from(c, threads);
    const Matrix X = load(c.x_path, c, io::parse_orientation(c.orientation));

    std::vector<FitResult> results;
    std::string solver;
    if (admm.lambda1 == 0.0) {
        RidgeConfig rc;
        rc.lambda2 = admm.lambda2;
        rc.newton_tol = admm.newton_tol;
        rc.solve = admm.solve;
        results = ridge_irls_fit(X, family, pf, rc);
        solver = "ridge_newton";
    } else {
        results = fastglz_fit(X, family, pf, admm);
        solver = "admm";
    }

    const fs::path weights = with_suffix(c.out, "_weights.fglzmat");
    json j = {{"command", "fit"},
              {"solver", solver},
              {"family", std::string(family.name())},
              {"features", X.rows()},
              {"trials", X.cols()},
              {"problems", pf.problems()},
              {"lambda1", admm.lambda1},
              {"lambda2", admm.lambda2},
              {"mu", admm.effective_mu()},
              {"threads", threads},
              {"seed", c.seed},
              {"weights_file", weights.filename().string()},
              {"results", results_json(results)}};
    io::write_fglzmat(weights, weight_matrix(results, X.rows()));
    write_json(with_suffix(c.out, ".json"), j);
    Index unconverged = 0;
    for (const auto& r : results) unconverged += !r.converged;
    out << "fit " << results.size() << " problems, " << unconverged << " not converged\n";
    return kOk;
}

int cmd_path(const RunConfig& c, int threads, std::ostream& out) {
    const GlzFamily family = GlzFamily::from_name(c.family);
    const ProblemFamily pf = problems_from(c);
    const AdmmConfig admm = admm_from(c, threads);
    PathConfig pc;
    pc.alpha_mix = c.alpha;
    pc.n_lambda = c.n_lambda;
    pc.lambda_min_ratio = c.lambda_min_ratio;
    if (!c.lambdas.empty()) pc.explicit_grid = parse_double_list(c.lambdas, "lambda");
    pc.validate();
    const Matrix X = load(c.x_path, c, io::parse_orientation(c.orientation));

    const PathResult path = fit_path(X, family, pf, pc, admm);
    json points = json::array();
    std::vector<std::pair<fs::path, Matrix>> files;
    for (std::size_t i = 0; i < path.points.size(); ++i) {
        const PathPoint& pt = path.points[i];
        json jp = {{"index", i},
                   {"lambda", pt.lambda},
                   {"lambda1", pt.lambda1},
                   {"lambda2", pt.lambda2},
                   {"mean_active", pt.mean_active},
                   {"failed", pt.failed}};
        if (pt.failed) {
            jp["error"] = pt.error;
        } else {
            char name[32];
            std::snprintf(name, sizeof(name), "_w%03zu.fglzmat", i);
            const fs::path file = with_suffix(c.out, name);
            jp["weights_file"] = file.filename().string();
            jp["results"] = results_json(pt.results);
            files.emplace_back(file, weight_matrix(pt.results, X.rows()));
        }
        points.push_back(std::move(jp));
    }
    json j = {{"command", "path"},
              {"family", std::string(family.name())},
              {"features", X.rows()},
              {"trials", X.cols()},
              {"problems", pf.problems()},
              {"alpha_mix", pc.alpha_mix},
              {"threads", threads},
              {"seed", c.seed},
              {"grid", path.grid},
              {"points", points}};
    for (const auto& [file, W] : files) io::write_fglzmat(file, W);
    write_json(with_suffix(c.out, ".json"), j);
    Index failed = 0;
    for (const auto& pt : path.points) failed += pt.failed;
    out << "path " << path.points.size() << " points, " << failed << " failed\n";
    return failed == 0 ? kOk : kNumerical;
}

int cmd_family(const RunConfig& c, std::ostream& out) {
    if (c.y_path.empty()) throw ValidationError("family needs the response vector (--y)");
    const Vector y = load_vector(c.y_path, c);
    const ProblemFamily pf = build_family(c, y);
    json tags = json::array();
    for (const auto& t : pf.tags) tags.push_back(tag_json(t));
    const fs::path d = with_suffix(c.out, "_D.fglzmat");
    const fs::path yk = with_suffix(c.out, "_Y.fglzmat");
    json j = {{"command", "family"},
              {"seed", c.seed},
              {"trials", pf.trials()},
              {"problems", pf.problems()},
              {"cv", c.cv},
              {"bootstrap", c.bootstrap},
              {"permutations", c.perm},
              {"normalize", c.normalize},
              {"include_identity", c.include_identity},
              {"weights_file", d.filename().string()},
              {"responses_file", yk.filename().string()},
              {"tags", tags}};
    io::write_fglzmat(d, pf.weights);
    io::write_fglzmat(yk, pf.responses);
    write_json(with_suffix(c.out, ".json"), j);
    out << "family " << pf.problems() << " problems over " << pf.trials() << " trials\n";
    return kOk;
}

int cmd_tsreg(const RunConfig& c, int threads, std::ostream& out) {
    ts::TimeSeriesBatch batch;
    // Both files store one time point per row.
    batch.design = load(c.design_path, c, io::Orientation::FeaturesByTrials);
    batch.series = load(c.series_path, c, io::Orientation::FeaturesByTrials);
    batch.pad_length = c.pad > 0 ? c.pad : ts::default_pad_length(batch.length(), c.ar_order);
    StationaryOptions opts;
    opts.max_iters = c.max_iters;
    opts.threads = threads;
    const ts::TsRegResult fit = ts::tsreg_fit(batch, c.ar_order, c.tol, opts);

    if (c.out.empty()) throw ValidationError("tsreg needs an output path (--out)");
    fs::path out_path(c.out);
    io::save_matrix(out_path, fit.gls, c.format.empty() ? io::format_from_path(out_path) : io::parse_format(c.format));
    json coeffs = json::array();
    for (Index k = 0; k < fit.whitener.coefficients.cols(); ++k) {
        std::vector<double> col(static_cast<std::size_t>(fit.whitener.coefficients.rows()));
        for (Index i = 0; i < fit.whitener.coefficients.rows(); ++i) col[static_cast<std::size_t>(i)] = fit.whitener.coefficients(i, k);
        coeffs.push_back(col);
    }
    fs::path summary = out_path;
    summary.replace_extension(".json");
    write_json(summary, {{"command", "tsreg"},
                         {"length", batch.length()},
                         {"regressors", batch.regressors()},
                         {"series", batch.count()},
                         {"ar_order", c.ar_order},
                         {"pad_length", batch.pad_length},
                         {"threads", threads},
                         {"ar_coefficients", coeffs},
                         {"stationary_iterations", fit.report.iterations},
                         {"residuals", fit.report.residuals}});
    out << "tsreg " << batch.count() << " series, " << batch.regressors() << " regressors\n";
    return kOk;
}

int cmd_bench(const RunConfig& c, int threads, std::ostream& out) {
    const GlzFamily family = GlzFamily::from_name(c.family);
    const std::vector<Index> ks = parse_index_list(c.ks, "K_s");
    if (!(c.lambda_fraction > 0.0)) throw ValidationError("--lambda-frac must be positive");
    const SyntheticData data = synthetic_glz(family, c.bench_p, c.bench_n, std::min<Index>(20, c.bench_p), c.seed);
    const ProblemFamily pf = permutation_family(data.y, c.bench_k, c.seed + 1);
    const double lmax = lambda_max(data.X, family, pf, c.alpha);

    RunConfig scaled = c;
    scaled.lambda1 = c.alpha * c.lambda_fraction * lmax;
    scaled.lambda2 = 0.5 * (1.0 - c.alpha) * c.lambda_fraction * lmax;
    const AdmmConfig admm = admm_from(scaled, threads);

    BenchReport report;
    report.meta.machine = machine_description();
    report.meta.threads = threads;
    report.meta.seed = c.seed;
    report.meta.features = c.bench_p;
    report.meta.trials = c.bench_n;
    report.meta.problems = c.bench_k;
    report.meta.family = std::string(family.name());
    report.meta.alpha_mix = c.alpha;
    report.meta.lambda_fraction = c.lambda_fraction;
    report.sweep = ks_sweep(data.X, family, pf, admm, ks, c.max_per_level);
    if (c.path_points > 0) {
        PathConfig pc;
        pc.alpha_mix = c.alpha;
        pc.n_lambda = c.path_points;
        pc.lambda_min_ratio = c.lambda_min_ratio;
        report.path = path_benchmark(data.X, family, pf, pc, admm, c.oracle_problems);
    }
    emit_bench_report(report, with_suffix(c.out, "_sweep.tsv"), with_suffix(c.out, ".json"));
    if (!report.path.empty()) emit_path_tsv(report, with_suffix(c.out, "_path.tsv"));
    for (const auto& r : report.sweep) {
        out << "K_s=" << r.ks << " per-problem " << r.simultaneous_seconds << " s, speedup " << r.speedup() << "\n";
    }
    return kOk;
}

void add_data_options(CLI::App* sub, RunConfig& c) {
    sub->add_option("--x", c.x_path, "Data matrix file (.csv or .fglzmat)");
    sub->add_option("--y", c.y_path, "Response vector file");
    sub->add_option("--d", c.d_path, "Trial weights D (trials x problems)");
    sub->add_option("--responses", c.responses_path, "Responses Y (trials x problems)");
    sub->add_option("--format", c.format, "Force the matrix format: csv or fglzmat");
    sub->add_option("--orientation", c.orientation, "features_by_trials or trials_by_features");
}

void add_family_options(CLI::App* sub, RunConfig& c) {
    sub->add_option("--cv", c.cv, "Number of cross-validation folds");
    sub->add_option("--bootstrap", c.bootstrap, "Number of bootstrap replicates");
    sub->add_option("--perm", c.perm, "Number of permutations (crossed with cv/bootstrap)");
    sub->add_flag("--normalize", c.normalize, "Scale fold weights to sum to one");
    sub->add_flag("--include-identity", c.include_identity, "First permutation is the identity");
    sub->add_option("--seed", c.seed, "Seed for every random draw");
}

void add_model_options(CLI::App* sub, RunConfig& c) {
    sub->add_option("--family", c.family, "gaussian, logistic or poisson");
    sub->add_option("--mu", c.mu, "ADMM penalty parameter (default 1/max(lambda2, lambda1, 1e-3))");
    sub->add_option("--smax", c.s_max, "Cap on the active-set size (0 = p)");
    sub->add_option("--groups", c.groups, "Group lasso blocks as index ranges, e.g. 0-4,5-9");
    sub->add_option("--outer-tol", c.outer_tol, "Relative objective change between cycles");
    sub->add_option("--feas-tol", c.feas_tol, "Split feasibility tolerance");
    sub->add_option("--kkt-tol", c.kkt_tol, "Optimality tolerance");
    sub->add_option("--newton-tol", c.newton_tol, "Inner Newton tolerance");
    sub->add_option("--max-outer", c.max_outer, "Maximum ADMM cycles per penalty");
    sub->add_option("--max-iters", c.max_iters, "Maximum stationary iterations per solve");
    sub->add_option("--solve-tol", c.solve_tol, "Stationary iteration tolerance");
    sub->add_flag("--no-screening", c.no_screening, "Start with every feature active");
}

void add_common(CLI::App* sub, RunConfig& c, std::string& config_path) {
    sub->add_option("--threads", c.threads, "Thread count (default FASTGLZ_THREADS or all cores)");
    sub->add_option("--config", config_path, "JSON file with default flag values");
}

int exit_code_for(const Error& e) {
    if (dynamic_cast<const NumericalError*>(&e) != nullptr) return kNumerical;
    return kValidation;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
    err << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int resolve_threads(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("FASTGLZ_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0 && v < 1 << 16) return static_cast<int>(v);
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig c;
    std::string config_path;

    // A config file only supplies defaults, so read it before the flags.
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == "--config") config_path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    try {
        if (!config_path.empty()) apply_config_file(config_path, c);
    } catch (const Error& e) {
        report_error(err, e.kind(), e.what());
        return exit_code_for(e);
    }

    CLI::App app{"Simultaneous elastic-net GLM training across related problems", "fastglz"};
    app.require_subcommand(1);

    auto* fit = app.add_subcommand("fit", "Fit every problem at one (lambda1, lambda2)");
    add_data_options(fit, c);
    add_family_options(fit, c);
    add_model_options(fit, c);
    fit->add_option("--lambda1", c.lambda1, "l1 penalty (0 selects the ridge Newton solver)");
    fit->add_option("--lambda2", c.lambda2, "squared l2 penalty");
    fit->add_option("--out", c.out, "Output prefix");
    add_common(fit, c, config_path);

    auto* path = app.add_subcommand("path", "Warm-started regularization path");
    add_data_options(path, c);
    add_family_options(path, c);
    add_model_options(path, c);
    path->add_option("--alpha", c.alpha, "Mixing: lambda1 = alpha*lambda, lambda2 = (1-alpha)*lambda/2");
    path->add_option("--n-lambda", c.n_lambda, "Grid size");
    path->add_option("--lambda-min-ratio", c.lambda_min_ratio, "Smallest lambda over lambda_max");
    path->add_option("--lambdas", c.lambdas, "Explicit decreasing grid, comma separated");
    path->add_option("--out", c.out, "Output prefix");
    add_common(path, c, config_path);

    auto* family = app.add_subcommand("family", "Write the D and Y matrices of a problem family");
    family->add_option("--y", c.y_path, "Response vector file");
    family->add_option("--format", c.format, "Force the input format");
    add_family_options(family, c);
    family->add_option("--out", c.out, "Output prefix");
    add_common(family, c, config_path);

    auto* bench = app.add_subcommand("bench", "Simultaneity benchmark on synthetic data");
    bench->add_option("--p", c.bench_p, "Features");
    bench->add_option("--n", c.bench_n, "Trials");
    bench->add_option("--k", c.bench_k, "Problems (permutations of one response)");
    bench->add_option("--ks", c.ks, "Simultaneity levels, comma separated");
    bench->add_option("--family", c.family, "gaussian, logistic or poisson");
    bench->add_option("--alpha", c.alpha, "Elastic-net mixing");
    bench->add_option("--lambda-frac", c.lambda_fraction, "lambda as a fraction of lambda_max");
    bench->add_option("--max-per-level", c.max_per_level, "Problems timed per level (0 = all)");
    bench->add_option("--path-points", c.path_points, "Also time a path of this many points against the oracle");
    bench->add_option("--oracle-problems", c.oracle_problems, "Problems the oracle solves per path point");
    bench->add_option("--lambda-min-ratio", c.lambda_min_ratio, "Smallest lambda of the path over lambda_max");
    bench->add_option("--seed", c.seed, "Data seed");
    bench->add_option("--out", c.out, "Output prefix");
    add_common(bench, c, config_path);

    auto* tsreg = app.add_subcommand("tsreg", "Batched regression under AR noise");
    tsreg->add_option("--design", c.design_path, "Design matrix, time x regressors");
    tsreg->add_option("--series", c.series_path, "Series matrix, time x series");
    tsreg->add_option("--order", c.ar_order, "AR order of the noise");
    tsreg->add_option("--pad", c.pad, "Padded length (default next power of two >= T + 2*order)");
    tsreg->add_option("--tol", c.tol, "Stationary iteration tolerance");
    tsreg->add_option("--max-iters", c.max_iters, "Maximum stationary iterations");
    tsreg->add_option("--format", c.format, "Force the matrix format");
    tsreg->add_option("--out", c.out, "Coefficient matrix output (regressors x series)");
    add_common(tsreg, c, config_path);

    auto* mem = app.add_subcommand("mem", "Print the solver memory estimate in bytes");
    mem->add_option("--p", c.mem_p, "Features")->required();
    mem->add_option("--n", c.mem_n, "Trials")->required();
    mem->add_option("--smax", c.mem_smax, "Active-set cap")->required();
    mem->add_option("--k", c.mem_k, "Problems")->required();

    std::vector<const char*> argv{"fastglz"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        report_error(err, "usage", e.what());
        return kValidation;
    }

    try {
        const int threads = resolve_threads(c.threads);
        if (*fit) return cmd_fit(c, threads, out);
        if (*path) return cmd_path(c, threads, out);
        if (*family) return cmd_family(c, out);
        if (*bench) return cmd_bench(c, threads, out);
        if (*tsreg) return cmd_tsreg(c, threads, out);
        if (*mem) {
            out << estimate_memory(c.mem_p, c.mem_n, c.mem_smax, c.mem_k) << "\n";
            return kOk;
        }
    } catch (const Error& e) {
        report_error(err, e.kind(), e.what());
        return exit_code_for(e);
    } catch (const std::bad_alloc&) {
        report_error(err, "memory", "out of memory");
        return kNumerical;
    }
    return kValidation;
}

int run_command(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_command(args, std::cout, std::cerr);
}

}  // namespace fastglz::cli
