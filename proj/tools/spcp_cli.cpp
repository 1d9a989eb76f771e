// spcp: command-line driver for low-rank + sparse decomposition.
//
//   spcp decompose  solve one problem with split | prox | fw
//   spcp certify    optimality certificate of a given L (or U, V)
//   spcp synth      write a synthetic low-rank + sparse problem
//   spcp bench      run several solvers on one problem, error vs time
//
// Exit codes: 0 converged, 1 usage or I/O error, 2 iteration cap,
// 3 numerical failure (including line-search failure).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include <spcp/spcp.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spcp;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIterationCap = 2, kNumerical = 3 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string solver = "split";
    double lambda_l = 0.0;
    double lambda_s = 0.0;
    long k = 0;
    std::string init = "rsvd";
    long oversample = 10;
    long power_iters = 1;
    double grad_tol = 1e-6;
    int max_iter = 1000;
    int memory = 10;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int max_linesearch = 40;
    double tol = 1e-10;   // prox: relative objective change; fw: relative gap
    double step = 1.0;
    bool accel = true;
    bool rank_growth = false;
    long max_k = 0;
    double min_rel_improvement = 1e-6;
    std::uint64_t seed = 0;
    std::string certificate = "off";
    double gap_threshold = -1.0;      // absolute; negative selects the relative default
    double gap_threshold_rel = 1e-3;  // relative to the final objective
    bool aicc = false;

    std::string input;
    std::string mask;
    std::string out_l;
    std::string out_s;
    std::string out_u;
    std::string out_v;
    std::string report;
};

// JSON configuration: keys are the long flag names with '_' for '-'.
template <class T>
void take(const json& j, const char* key, T& field) {
    if (j.contains(key))
        field = j.at(key).get<T>();
}

void apply_json(const json& j, RunConfig& c) {
    static const std::vector<std::string> known = {
        "solver", "lambda_l", "lambda_s", "k", "init", "oversample", "power_iters", "grad_tol",
        "max_iter", "memory", "wolfe_c1", "wolfe_c2", "max_linesearch", "tol", "step", "accel",
        "rank_growth", "max_k", "min_rel_improvement", "seed", "certificate", "gap_threshold",
        "gap_threshold_rel", "aicc", "input", "mask", "out_l", "out_s", "out_u", "out_v",
        "report", "solvers", "synth"};
    if (!j.is_object())
        throw UsageError("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw UsageError("unknown config key '" + key + "'");
    try {
        take(j, "solver", c.solver);
        take(j, "lambda_l", c.lambda_l);
        take(j, "lambda_s", c.lambda_s);
        take(j, "k", c.k);
        take(j, "init", c.init);
        take(j, "oversample", c.oversample);
        take(j, "power_iters", c.power_iters);
        take(j, "grad_tol", c.grad_tol);
        take(j, "max_iter", c.max_iter);
        take(j, "memory", c.memory);
        take(j, "wolfe_c1", c.wolfe_c1);
        take(j, "wolfe_c2", c.wolfe_c2);
        take(j, "max_linesearch", c.max_linesearch);
        take(j, "tol", c.tol);
        take(j, "step", c.step);
        take(j, "accel", c.accel);
        take(j, "rank_growth", c.rank_growth);
        take(j, "max_k", c.max_k);
        take(j, "min_rel_improvement", c.min_rel_improvement);
        take(j, "seed", c.seed);
        take(j, "certificate", c.certificate);
        take(j, "gap_threshold", c.gap_threshold);
        take(j, "gap_threshold_rel", c.gap_threshold_rel);
        take(j, "aicc", c.aicc);
        take(j, "input", c.input);
        take(j, "mask", c.mask);
        take(j, "out_l", c.out_l);
        take(j, "out_s", c.out_s);
        take(j, "out_u", c.out_u);
        take(j, "out_v", c.out_v);
        take(j, "report", c.report);
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError(IoErrc::file_not_found, path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError(IoErrc::parse_error, path + ": " + e.what());
    }
}

/// Paths in a config file are taken relative to the file itself.
void resolve_paths(RunConfig& c, const fs::path& base) {
    for (std::string* p : {&c.input, &c.mask, &c.out_l, &c.out_s, &c.out_u, &c.out_v, &c.report})
        if (!p->empty() && fs::path(*p).is_relative())
            *p = (base / *p).lexically_normal().string();
}

struct CertMode {
    enum Kind { off, final, every } kind = off;
    int every_n = 0;
};

CertMode parse_cert_mode(const std::string& s) {
    if (s == "off")
        return {};
    if (s == "final")
        return {CertMode::final, 0};
    if (s.rfind("every:", 0) == 0) {
        int n = 0;
        const std::string num = s.substr(6);
        const auto res = std::from_chars(num.data(), num.data() + num.size(), n);
        if (res.ec == std::errc{} && res.ptr == num.data() + num.size() && n > 0)
            return {CertMode::every, n};
    }
    throw UsageError("certificate must be off | final | every:N, got '" + s + "'");
}

ProblemSpec load_problem(const RunConfig& c) {
    if (c.input.empty())
        throw UsageError("no input matrix (--input)");
    ProblemSpec spec;
    spec.x = read_matrix(c.input);
    if (!c.mask.empty()) {
        const DenseMatrix m = read_matrix(c.mask);
        if (m.rows() != spec.x.rows() || m.cols() != spec.x.cols())
            throw UsageError("mask shape does not match the input");
        spec.mask = mask_from_matrix(m);
    }
    spec.lambda_l = c.lambda_l;
    spec.lambda_s = c.lambda_s;
    spec.validate();
    return spec;
}

SolverConfig split_config(const RunConfig& c) {
    SolverConfig cfg;
    cfg.lbfgs.memory = c.memory;
    cfg.lbfgs.grad_tol = c.grad_tol;
    cfg.lbfgs.max_iter = c.max_iter;
    cfg.lbfgs.wolfe_c1 = c.wolfe_c1;
    cfg.lbfgs.wolfe_c2 = c.wolfe_c2;
    cfg.lbfgs.max_linesearch = c.max_linesearch;
    cfg.init = parse_init_strategy(c.init);
    cfg.rsvd.oversample = c.oversample;
    cfg.rsvd.power_iters = c.power_iters;
    cfg.growth.enabled = c.rank_growth;
    cfg.growth.max_k = c.max_k;
    cfg.growth.min_rel_improvement = c.min_rel_improvement;
    cfg.seed = c.seed;
    const CertMode cm = parse_cert_mode(c.certificate);
    cfg.cert.every = cm.kind == CertMode::every ? cm.every_n : 0;
    cfg.cert.final = cm.kind != CertMode::off;
    cfg.validate();
    return cfg;
}

/// Everything that can be checked without touching the data.
void validate_config(const RunConfig& c, const ProblemSpec& spec) {
    if (c.solver != "split" && c.solver != "prox" && c.solver != "fw")
        throw UsageError("solver must be split | prox | fw, got '" + c.solver + "'");
    parse_cert_mode(c.certificate);
    if (c.solver == "split") {
        split_config(c);
        const long kmax = std::min<long>(spec.rows(), spec.cols());
        if (c.k < 1 || c.k > kmax)
            throw UsageError("k must lie in [1, " + std::to_string(kmax) + "]");
    } else {
        if (c.max_iter < 0)
            throw UsageError("max_iter must be non-negative");
        if (!(c.tol >= 0.0))
            throw UsageError("tol must be non-negative");
    }
    if (c.solver == "prox" && !(c.step > 0.0 && c.step <= 1.0))
        throw UsageError("step must lie in (0, 1]");
}

FactorPair factors_of(const DenseMatrix& l) {
    const SvdTriplet svd = svd_small(l);
    return balanced_factors(svd.truncated(svd.numerical_rank()), l.rows(), l.cols());
}

struct SolverRun {
    SolveReport report;
    std::vector<double> convex;  ///< lambda ||L||_* + phi(L) per trace record (bench only)
};

/// Run one solver. With `track_convex` the convex objective of every iterate
/// is recorded through the solver hooks, outside the timed sections.
SolverRun run_solver(const RunConfig& c, const ProblemSpec& spec, bool track_convex) {
    SolverRun out;
    const CertMode cm = parse_cert_mode(c.certificate);
    if (c.solver == "split") {
        const SolverConfig cfg = split_config(c);
        FactorObserver obs;
        if (track_convex) {
            obs = [&](int iter, const FactorPair& fp, double) {
                if (iter == 0 && !out.convex.empty())
                    return;  // re-start of a growth phase, already recorded
                out.convex.push_back(convex_objective(fp, spec));
            };
        }
        out.report = solve_split_spcp(spec, c.k, cfg, obs);
        return out;
    }

    std::map<int, double> certs;
    double best = std::numeric_limits<double>::infinity();
    if (c.solver == "prox") {
        ProxOptions po;
        po.step = c.step;
        po.max_iter = c.max_iter;
        po.tol = c.tol;
        po.accel = c.accel;
        out.report = solve_convex_prox(spec, po, [&](int iter, const DenseMatrix& l, double f) {
            if (track_convex)
                out.convex.push_back(f);
            best = std::min(best, f);
            if (cm.kind == CertMode::every && iter % cm.every_n == 0)
                certs[iter] = certificate(factors_of(l), spec, best).gap_bound;
        });
    } else {
        FwOptions fo;
        fo.max_iter = c.max_iter;
        fo.tol = c.tol;
        fo.lmo.seed = c.seed;
        if (track_convex)
            out.convex.push_back(phi_value_grad(DenseMatrix::Zero(spec.rows(), spec.cols()), spec).value);
        out.report = solve_frank_wolfe(spec, fo, [&](const FwState& st, const FwStepInfo& info) {
            const int iter = info.iter + 1;
            if (track_convex)
                out.convex.push_back(convex_objective(st.l, spec));
            if (cm.kind == CertMode::every && iter % cm.every_n == 0) {
                best = std::min(best, spec.lambda_l * st.t + phi_value_grad(st.l, spec).value);
                certs[iter] = certificate(factors_of(st.l), spec, best).gap_bound;
            }
        });
    }
    for (auto& rec : out.report.trace) {
        const auto it = certs.find(rec.iter);
        if (it != certs.end())
            rec.cert = it->second;
    }
    if (!out.report.factors)
        out.report.factors = factors_of(out.report.l);
    if (cm.kind != CertMode::off)
        out.report.certificate = certificate(*out.report.factors, spec, out.report.objective);
    return out;
}

int exit_code(Termination t) {
    switch (t) {
    case Termination::converged: return kOk;
    case Termination::iteration_cap: return kIterationCap;
    case Termination::line_search_failed:
    case Termination::numerical_failure: return kNumerical;
    }
    return kNumerical;
}

void write_json(const std::string& path, const json& j) {
    if (path.empty() || path == "-")
        std::cout << j.dump(2) << '\n';
    else
        write_file_atomic(path, j.dump(2) + "\n");
}

int cmd_decompose(const RunConfig& c) {
    const ProblemSpec spec = load_problem(c);
    validate_config(c, spec);
    const SolverRun run = run_solver(c, spec, false);
    const SolveReport& rep = run.report;

    json j = to_json(rep);
    j["lambda_l"] = spec.lambda_l;
    j["lambda_s"] = spec.lambda_s;
    j["seed"] = c.seed;
    if (c.aicc)
        j["aicc"] = to_json(aicc(rep.l, rep.s, spec.x));
    if (rep.certificate) {
        const double threshold = c.gap_threshold >= 0.0
                                     ? c.gap_threshold
                                     : c.gap_threshold_rel * std::abs(rep.objective);
        const bool suspicious = rep.certificate->gap_bound > threshold;
        j["certificate"]["threshold"] = threshold;
        j["certificate"]["above_threshold"] = suspicious;
        j["certificate"]["rank_limited"] = rep.certificate->terms[3] >
                                           rep.certificate->terms[0] + rep.certificate->terms[1] +
                                               rep.certificate->terms[2];
        if (suspicious) {
            // The complement term only grows when the optimum needs directions
            // outside span(U), i.e. when k is below the optimal rank.
            const auto& t = rep.certificate->terms;
            const bool rank_limited = t[3] > t[0] + t[1] + t[2];
            std::cerr << "warning: certificate gap bound " << rep.certificate->gap_bound
                      << " exceeds " << threshold << "; "
                      << (rank_limited ? "the rank bound is likely below the optimal rank"
                                       : "stationarity is not tight enough, lower --grad-tol")
                      << '\n';
        }
    }

    if (!c.out_l.empty())
        write_matrix(c.out_l, rep.l);
    if (!c.out_s.empty())
        write_matrix(c.out_s, rep.s);
    if (rep.factors && !c.out_u.empty())
        write_matrix(c.out_u, rep.factors->u);
    if (rep.factors && !c.out_v.empty())
        write_matrix(c.out_v, rep.factors->v);
    write_json(c.report, j);

    if (rep.termination != Termination::converged)
        std::cerr << "warning: solver stopped with " << to_string(rep.termination) << '\n';
    return exit_code(rep.termination);
}

int cmd_certify(const RunConfig& c, const std::string& l_path, double f_bound) {
    const ProblemSpec spec = load_problem(c);
    FactorPair fp;
    if (!c.out_u.empty() || !c.out_v.empty()) {
        if (c.out_u.empty() || c.out_v.empty())
            throw UsageError("certify needs both --u and --v");
        fp = {read_matrix(c.out_u), read_matrix(c.out_v)};
    } else if (!l_path.empty()) {
        fp = factors_of(read_matrix(l_path));
    } else {
        throw UsageError("certify needs --l or --u/--v");
    }
    if (fp.u.rows() != spec.rows() || fp.v.rows() != spec.cols() || fp.u.cols() != fp.v.cols())
        throw UsageError("factor shapes do not match the input");
    const CertificateReport rep =
        f_bound >= 0.0 ? certificate(fp, spec, f_bound) : certificate(fp, spec);
    json j = to_json(rep);
    j["objective"] = convex_objective(fp, spec);
    write_json(c.report, j);
    return kOk;
}

struct SynthArgs {
    long m = 0;
    long n = 0;
    long rank = 0;
    double sparse_frac = 0.0;
    double noise_rel = 0.0;
    double observe_frac = 1.0;
    std::string out_x;
    std::string out_l;
    std::string out_s;
    std::string out_mask;
};

int cmd_synth(const SynthArgs& a, std::uint64_t seed) {
    if (a.out_x.empty())
        throw UsageError("synth needs --out-x");
    const SyntheticProblem p =
        gen_low_rank_plus_sparse(a.m, a.n, a.rank, a.sparse_frac, a.noise_rel, seed);
    write_matrix(a.out_x, p.x);
    if (!a.out_l.empty())
        write_matrix(a.out_l, p.l_ref);
    if (!a.out_s.empty())
        write_matrix(a.out_s, p.s_ref);
    if (!a.out_mask.empty())
        write_matrix(a.out_mask, mask_to_matrix(gen_mask(a.m, a.n, a.observe_frac, seed + 1)));
    return kOk;
}

int cmd_bench(const RunConfig& base, const std::vector<RunConfig>& runs) {
    if (runs.size() < 2)
        throw UsageError("bench needs at least two solver configurations");
    const ProblemSpec spec = load_problem(base);
    for (const RunConfig& r : runs)
        validate_config(r, spec);

    struct Row {
        std::string name;
        bool ok = false;
        std::string error;
        SolverRun run;
    };
    std::vector<Row> rows;
    for (const RunConfig& r : runs) {
        Row row;
        row.name = r.solver;
        try {
            row.run = run_solver(r, spec, true);
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
            std::cerr << "warning: " << r.solver << " failed: " << e.what() << '\n';
        }
        rows.push_back(std::move(row));
    }

    double ref = std::numeric_limits<double>::infinity();
    for (const Row& row : rows)
        if (row.ok && !row.run.convex.empty())
            ref = std::min(ref, row.run.convex.back());
    if (!std::isfinite(ref))
        throw NumericalError("bench: no solver produced a result");

    double budget = std::numeric_limits<double>::infinity();
    for (const Row& row : rows)
        if (row.ok && row.name == "split")
            budget = std::min(budget, row.run.report.trace.back().elapsed_s);
    if (!std::isfinite(budget))
        for (const Row& row : rows)
            if (row.ok)
                budget = std::min(budget, row.run.report.trace.back().elapsed_s);

    json out;
    out["reference_objective"] = ref;
    out["budget_s"] = budget;
    out["solvers"] = json::array();
    for (const Row& row : rows) {
        json s;
        s["solver"] = row.name;
        s["status"] = row.ok ? std::string(to_string(row.run.report.termination)) : "failed";
        if (!row.ok) {
            s["error"] = row.error;
            out["solvers"].push_back(s);
            continue;
        }
        const auto& trace = row.run.report.trace;
        const auto& conv = row.run.convex;
        const std::size_t count = std::min(trace.size(), conv.size());
        json series = json::array();
        double at_budget = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < count; ++i) {
            const double err = (conv[i] - ref) / std::abs(ref);
            series.push_back({{"iter", trace[i].iter}, {"elapsed_s", trace[i].elapsed_s}, {"rel_error", err}});
            if (trace[i].elapsed_s <= budget)
                at_budget = err;
        }
        s["iterations"] = row.run.report.iterations;
        s["final_objective"] = conv.empty() ? json(nullptr) : json(conv.back());
        s["final_rel_error"] = conv.empty() ? json(nullptr) : json((conv.back() - ref) / std::abs(ref));
        s["elapsed_s"] = trace.back().elapsed_s;
        s["rel_error_at_budget"] = std::isnan(at_budget) ? json(nullptr) : json(at_budget);
        s["series"] = std::move(series);
        out["solvers"].push_back(std::move(s));
    }
    write_json(base.report, out);

    std::cerr << "solver      status             iters   time[s]   rel.err   rel.err@budget\n";
    for (const auto& s : out["solvers"]) {
        if (s["status"] == "failed") {
            std::cerr << s["solver"].get<std::string>() << "  failed\n";
            continue;
        }
        char line[256];
        const double atb = s["rel_error_at_budget"].is_null() ? std::nan("")
                                                              : s["rel_error_at_budget"].get<double>();
        std::snprintf(line, sizeof(line), "%-10s  %-17s  %6d  %8.3f  %8.2e  %8.2e\n",
                      s["solver"].get<std::string>().c_str(), s["status"].get<std::string>().c_str(),
                      s["iterations"].get<int>(), s["elapsed_s"].get<double>(),
                      s["final_rel_error"].get<double>(), atb);
        std::cerr << line;
    }
    return kOk;
}

/// Look for --config before full parsing so its values act as defaults that
/// explicit flags override.
std::string find_config_arg(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc)
            return argv[i + 1];
        if (a.rfind("--config=", 0) == 0)
            return a.substr(9);
    }
    return {};
}

void set_threads_from_env() {
    if (const char* env = std::getenv("SPCP_NUM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0)
            Eigen::setNbThreads(n);
    }
}

void add_problem_flags(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("-i,--input", c.input, "data matrix (.csv or binary)");
    cmd->add_option("--mask", c.mask, "observation mask matrix, non-zero = observed");
    cmd->add_option("--lambda-l", c.lambda_l, "nuclear-norm weight");
    cmd->add_option("--lambda-s", c.lambda_s, "l1 weight on S");
    cmd->add_option("--report", c.report, "JSON report path ('-' or empty: stdout)");
}

void add_solver_flags(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("--solver", c.solver, "split | prox | fw");
    cmd->add_option("-k,--rank", c.k, "rank bound of the split solver");
    cmd->add_option("--init", c.init, "rsvd | full_svd | random");
    cmd->add_option("--oversample", c.oversample, "rSVD oversampling");
    cmd->add_option("--power-iters", c.power_iters, "rSVD power iterations");
    cmd->add_option("--grad-tol", c.grad_tol, "L-BFGS relative gradient tolerance");
    cmd->add_option("--max-iter", c.max_iter, "iteration cap");
    cmd->add_option("--memory", c.memory, "L-BFGS memory");
    cmd->add_option("--wolfe-c1", c.wolfe_c1, "sufficient decrease constant");
    cmd->add_option("--wolfe-c2", c.wolfe_c2, "curvature constant");
    cmd->add_option("--max-linesearch", c.max_linesearch, "evaluations per line search");
    cmd->add_option("--tol", c.tol, "prox / fw stopping tolerance");
    cmd->add_option("--step", c.step, "prox step size");
    cmd->add_option("--accel", c.accel, "prox momentum (true/false)");
    cmd->add_flag("--rank-growth", c.rank_growth, "grow k one column at a time");
    cmd->add_option("--max-k", c.max_k, "rank growth cap");
    cmd->add_option("--min-rel-improvement", c.min_rel_improvement, "rank growth stop threshold");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--certificate", c.certificate, "off | final | every:N");
    cmd->add_option("--gap-threshold", c.gap_threshold, "absolute gap bound warning threshold");
    cmd->add_option("--gap-threshold-rel", c.gap_threshold_rel,
                    "gap bound warning threshold relative to the objective");
}

} // namespace

int main(int argc, char** argv) {
    set_threads_from_env();
    CLI::App app{"Low-rank + sparse matrix decomposition"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::string config_path;
    const std::string early_config = find_config_arg(argc, argv);
    json config_json;
    try {
        if (!early_config.empty()) {
            config_json = load_json_file(early_config);
            apply_json(config_json, cfg);
            resolve_paths(cfg, fs::path(early_config).parent_path());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }

    auto* dec = app.add_subcommand("decompose", "decompose X into L + S");
    add_problem_flags(dec, cfg);
    add_solver_flags(dec, cfg);
    dec->add_option("--out-l", cfg.out_l, "output path for L");
    dec->add_option("--out-s", cfg.out_s, "output path for S");
    dec->add_option("--out-u", cfg.out_u, "output path for U");
    dec->add_option("--out-v", cfg.out_v, "output path for V");
    dec->add_flag("--aicc", cfg.aicc, "add the AIC_c score to the report");

    auto* cert = app.add_subcommand("certify", "optimality certificate of a candidate L");
    add_problem_flags(cert, cfg);
    std::string l_path;
    double f_bound = -1.0;
    cert->add_option("--l", l_path, "candidate L");
    cert->add_option("--u", cfg.out_u, "candidate factor U");
    cert->add_option("--v", cfg.out_v, "candidate factor V");
    cert->add_option("--f-bound", f_bound, "known upper bound on the optimal objective");

    auto* syn = app.add_subcommand("synth", "generate a synthetic problem");
    SynthArgs sa;
    syn->add_option("-m,--rows", sa.m, "rows")->required();
    syn->add_option("-n,--cols", sa.n, "columns")->required();
    syn->add_option("-r,--true-rank", sa.rank, "rank of the low-rank part")->required();
    syn->add_option("--sparse-frac", sa.sparse_frac, "fraction of non-zeros in S");
    syn->add_option("--noise-rel", sa.noise_rel, "||Z|| / ||X||");
    syn->add_option("--observe-frac", sa.observe_frac, "mask density for --out-mask");
    syn->add_option("--seed", cfg.seed, "random seed");
    syn->add_option("--out-x", sa.out_x, "output path for X");
    syn->add_option("--out-l", sa.out_l, "output path for the reference L");
    syn->add_option("--out-s", sa.out_s, "output path for the reference S");
    syn->add_option("--out-mask", sa.out_mask, "output path for an observation mask");

    auto* bench = app.add_subcommand("bench", "compare solvers on one problem");
    add_problem_flags(bench, cfg);
    add_solver_flags(bench, cfg);
    std::vector<std::string> solver_list;
    bench->add_option("--solvers", solver_list, "comma-separated solvers, e.g. split,prox")
        ->delimiter(',');

    for (auto* sub : {dec, cert, syn, bench})
        sub->add_option("--config", config_path, "JSON config; flags override its values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (dec->parsed())
            return cmd_decompose(cfg);
        if (cert->parsed())
            return cmd_certify(cfg, l_path, f_bound);
        if (syn->parsed()) {
            if (config_json.contains("synth")) {
                const json& s = config_json["synth"];
                SynthArgs from = sa;
                take(s, "sparse_frac", from.sparse_frac);
                take(s, "noise_rel", from.noise_rel);
                sa = from;
            }
            return cmd_synth(sa, cfg.seed);
        }
        if (bench->parsed()) {
            std::vector<RunConfig> runs;
            if (!solver_list.empty()) {
                for (const std::string& s : solver_list) {
                    RunConfig r = cfg;
                    r.solver = s;
                    runs.push_back(r);
                }
            } else if (config_json.contains("solvers")) {
                for (const json& s : config_json["solvers"]) {
                    RunConfig r = cfg;
                    if (s.is_string())
                        r.solver = s.get<std::string>();
                    else
                        apply_json(s, r);
                    runs.push_back(r);
                }
            }
            return cmd_bench(cfg, runs);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {  // DimensionError, ParameterError
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    }
    return kUsage;
}
