#include "specmim/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "specmim/oracle.hpp"

namespace specmim::cli {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[specmim] " << msg << "\n";
}

json require(const json& parent, const std::string& key, const std::string& where) {
    if (!parent.contains(key))
        throw ConfigError("config: missing required key '" + key + "' in " + where);
    return parent.at(key);
}

struct CsvWriter {
    std::ofstream out;
    CsvWriter(const std::filesystem::path& path, const std::string& hash,
              const std::string& header) {
        out.open(path);
        if (!out) throw ConfigError("cannot open output file " + path.string());
        out << "# config_hash=" << hash << "\n" << header << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << "\n";
    }
};

std::string stat_rows_header() { return "delta,n,d,preproc,stat_name,i,j,mean,std,trials,seed"; }

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_manifest(const RunConfig& cfg, const std::string& subcommand, double seconds,
                    const json& extra) {
    json manifest{{"subcommand", subcommand},
                  {"config_hash", cfg.config_hash},
                  {"out_dir", cfg.out_dir.string()},
                  {"threads", cfg.threads},
                  {"elapsed_seconds", seconds},
                  {"parameters", extra}};
    std::ofstream out(cfg.out_dir / (subcommand + "_manifest.json"));
    out << manifest.dump(2) << "\n";
}

}  // namespace

int log_level() {
    const char* env = std::getenv("SPECTRAL_MIM_LOG");
    if (!env) return 0;
    const std::string v(env);
    if (v == "0" || v == "quiet" || v.empty()) return 0;
    if (v == "2" || v == "debug") return 2;
    return 1;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

LinkModel build_model(const json& spec) {
    const std::string name = require(spec, "name", "model").get<std::string>();
    if (name == "product") return make_product_model();
    if (name == "mixed_phase_retrieval") {
        const double eta = spec.value("eta", 0.6);
        return make_mixed_pr_model(eta);
    }
    if (name == "single_index") {
        const std::string link = spec.value("link", std::string("abs"));
        return make_single_index_model(link, spec.value("flip_prob", 0.1));
    }
    if (name == "pure_noise") return make_pure_noise_model();
    throw ConfigError("config: unknown model '" + name + "'");
}

SignalSpec build_signals(const json& spec) {
    const std::string kind = require(spec, "kind", "signals").get<std::string>();
    const int p = require(spec, "p", "signals").get<int>();
    if (kind == "orthonormal") return make_signals_orthonormal(p);
    if (kind == "correlated") return make_signals_correlated(p, require(spec, "rho", "signals").get<double>());
    if (kind == "random_iid_gaussian")
        return make_signals_random_iid_gaussian(p, spec.value("seed", 7ULL));
    throw ConfigError("config: unknown signals kind '" + kind + "'");
}

Preprocessing build_preprocessing(const json& spec, const LinkModel& model,
                                  const SignalSpec& signals) {
    const std::string name = require(spec, "name", "preprocessing").get<std::string>();
    if (name == "constant") return make_preproc_constant(spec.value("value", 1.0));
    if (name == "prod_optimal") return make_preproc_prod_optimal(spec.value("floor", -10.0));
    if (name == "quadratic_capped") return make_preproc_quadratic_capped(spec.value("cap", 10.0));
    if (name == "trimming") return make_preproc_trimming(spec.value("cut", 7.0));
    if (name == "subset") return make_preproc_subset(spec.value("threshold", 2.0));
    if (name == "pr_nonmixed_optimal")
        return make_preproc_pr_nonmixed_optimal(spec.value("floor", -10.0));
    if (name == "mpr_optimal") {
        const double eta = spec.value("eta", 0.6);
        const double rho = spec.value("rho", 0.3);
        const double delta = require(spec, "delta", "preprocessing mpr_optimal").get<double>();
        return t_star_mixed_pr(eta, rho, delta);
    }
    if (name == "t_star" || name == "t_star_delta") {
        DesignOptions dopt;
        OptimalDesign od = design(model, signals, dopt);
        if (name == "t_star") return od.t_star;
        const double delta = require(spec, "delta", "preprocessing t_star_delta").get<double>();
        return od.t_star_delta(delta);
    }
    throw ConfigError("config: unknown preprocessing '" + name + "'");
}

QuadratureRule build_quadrature(const json& spec, int dims) {
    const std::string kind = spec.value("kind", std::string("gauss_hermite"));
    if (kind == "gauss_hermite") {
        if (spec.contains("nodes"))
            return QuadratureRule::gauss_hermite_tensor(dims, spec.at("nodes").get<int>());
        return QuadratureRule::default_for(dims);
    }
    if (kind == "monte_carlo")
        return QuadratureRule::monte_carlo(dims, spec.value("mc_samples", std::int64_t{1000000}),
                                           spec.value("seed", 1ULL));
    throw ConfigError("config: unknown quadrature kind '" + kind + "'");
}

RunConfig load_config(const std::string& path, const Overrides& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    RunConfig cfg;
    try {
        cfg.raw = json::parse(in);
    } catch (const json::parse_error& err) {
        throw ConfigError("config: parse error in '" + path + "': " + err.what());
    }
    if (cfg.raw.value("schema", 0) != 1)
        throw ConfigError("config: expected \"schema\": 1 in '" + path + "'");

    if (overrides.seed) cfg.raw["simulate"]["seed"] = *overrides.seed;
    if (overrides.quad_nodes) {
        cfg.raw["quadrature"]["kind"] = "gauss_hermite";
        cfg.raw["quadrature"]["nodes"] = *overrides.quad_nodes;
    }
    cfg.threads = overrides.threads.value_or(cfg.raw.value("threads", 1));
    cfg.out_dir = overrides.out_dir.value_or(cfg.raw.value("out", std::string("out")));

    char hash_buf[20];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(cfg.raw.dump())));
    cfg.config_hash = hash_buf;

    cfg.model = build_model(require(cfg.raw, "model", "config"));
    cfg.signals = build_signals(require(cfg.raw, "signals", "config"));
    if (cfg.signals.p() != cfg.model.p)
        throw ConfigError("config: signals p does not match the model's index count");
    cfg.preproc =
        build_preprocessing(require(cfg.raw, "preprocessing", "config"), cfg.model, cfg.signals);
    cfg.quad_explicit = cfg.raw.contains("quadrature");
    cfg.quadrature = build_quadrature(cfg.raw.value("quadrature", json::object()), cfg.model.p);

    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

namespace {

std::vector<double> delta_grid(const json& section, const std::string& where) {
    const json grid = require(section, "deltas", where);
    std::vector<double> deltas;
    for (const auto& d : grid) deltas.push_back(d.get<double>());
    if (deltas.empty()) throw ConfigError("config: empty delta grid in " + where);
    for (double d : deltas)
        if (!(d > 0.0)) throw ConfigError("config: deltas must be positive in " + where);
    return deltas;
}

}  // namespace

int cmd_simulate(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const json section = require(cfg.raw, "simulate", "config");

    ExperimentConfig ex;
    ex.model = cfg.model;
    ex.signals = cfg.signals;
    ex.preproc = cfg.preproc;
    ex.d = require(section, "d", "simulate").get<int>();
    ex.trials = section.value("trials", 10);
    ex.seed = section.value("seed", 1ULL);
    ex.threads = cfg.threads;
    ex.dense_cutoff = section.value("dense_cutoff", 800);
    ex.lanczos_max_iter = section.value("lanczos_max_iter", 400);
    ex.lanczos_tol = section.value("lanczos_tol", 1e-10);
    const std::string solver = section.value("eigensolver", std::string("auto"));
    if (solver == "dense")
        ex.solver = Eigensolver::dense;
    else if (solver == "lanczos")
        ex.solver = Eigensolver::lanczos;
    else if (solver == "auto")
        ex.solver = Eigensolver::automatic;
    else
        throw ConfigError("config: unknown eigensolver '" + solver + "'");

    const std::vector<double> deltas = delta_grid(section, "simulate");
    info("simulate: d=" + std::to_string(ex.d) + ", " + std::to_string(deltas.size()) +
         " deltas, " + std::to_string(ex.trials) + " trials");
    const auto rows = run_experiment(ex, deltas);

    CsvWriter csv(cfg.out_dir / "simulate.csv", cfg.config_hash, stat_rows_header());
    for (const auto& r : rows)
        csv.row({fmt_double(r.delta), std::to_string(r.n), std::to_string(r.d), cfg.preproc.name,
                 r.stat, std::to_string(r.i), std::to_string(r.j), fmt_double(r.mean),
                 fmt_double(r.stddev), std::to_string(r.trials), std::to_string(ex.seed)});
    write_manifest(cfg, "simulate", elapsed_since(t0),
                   {{"d", ex.d}, {"trials", ex.trials}, {"deltas", deltas}});
    return kExitOk;
}

int cmd_predict(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const json section = require(cfg.raw, "predict", "config");
    const std::vector<double> deltas = delta_grid(section, "predict");

    auto zlaw = std::make_shared<const ZLaw>(
        cfg.quad_explicit ? build_zlaw(cfg.model, cfg.signals, cfg.preproc, cfg.quadrature)
                          : build_zlaw_adapted(cfg.model, cfg.signals, cfg.preproc));

    CsvWriter csv(cfg.out_dir / "predict.csv", cfg.config_hash, stat_rows_header());
    json all = json::array();
    const int p = cfg.model.p;
    for (double delta : deltas) {
        BulkFunctions bulk = fit_bulk(zlaw, delta);
        TheoryPrediction pred = predict(bulk, cfg.signals);

        json entry{{"delta", delta},
                   {"lambda_bar", bulk.lambda_bar},
                   {"bulk_edge", bulk.bulk_edge},
                   {"boundary_minimizer", bulk.boundary_minimizer},
                   {"margin", pred.margin},
                   {"eigenvalues", std::vector<double>(pred.eigenvalues.begin(), pred.eigenvalues.end())}};
        json branches = json::array();
        for (const auto& b : pred.master.branches)
            branches.push_back({{"index", b.index},
                                {"alpha", b.alpha ? json(*b.alpha) : json()},
                                {"is_outlier", b.is_outlier}});
        entry["branches"] = branches;
        json basis = json::array(), signal = json::array();
        for (int i = 0; i < p; ++i) {
            basis.push_back(std::vector<double>(pred.overlap_basis.row(i).begin(),
                                                pred.overlap_basis.row(i).end()));
            signal.push_back(std::vector<double>(pred.overlap_signal.row(i).begin(),
                                                 pred.overlap_signal.row(i).end()));
        }
        entry["overlap_basis_sq"] = basis;
        entry["overlap_signal_sq"] = signal;
        all.push_back(entry);

        auto emit = [&](const std::string& stat, int i, int j, double value) {
            csv.row({fmt_double(delta), "0", "0", cfg.preproc.name, stat, std::to_string(i),
                     std::to_string(j), fmt_double(value), "0", "0", "0"});
        };
        for (int i = 0; i < p; ++i) {
            emit("eigenvalue", i + 1, 0, pred.eigenvalues[i]);
            for (int j = 0; j < p; ++j) {
                emit("overlap_signal", i + 1, j + 1, std::sqrt(std::max(0.0, pred.overlap_signal(i, j))));
                emit("overlap_basis", i + 1, j + 1, std::sqrt(std::max(0.0, pred.overlap_basis(i, j))));
            }
        }
    }
    json doc{{"config_hash", cfg.config_hash},
             {"model", cfg.model.name},
             {"preprocessing", cfg.preproc.name},
             {"predictions", all}};
    std::ofstream jout(cfg.out_dir / "predict.json");
    jout << doc.dump(2) << "\n";
    write_manifest(cfg, "predict", elapsed_since(t0), {{"deltas", deltas}});
    return kExitOk;
}

int cmd_design(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const json section = cfg.raw.value("design", json::object());
    DesignOptions opt;
    opt.grid_points = section.value("grid_points", opt.grid_points);
    opt.restarts = section.value("restarts", opt.restarts);
    opt.t_star_clip = section.value("t_star_clip", opt.t_star_clip);

    json doc{{"config_hash", cfg.config_hash}, {"model", cfg.model.name}};
    try {
        OptimalDesign od = design(cfg.model, cfg.signals, opt);
        doc["degenerate"] = false;
        doc["delta_c"] = od.delta_c;
        doc["u_c"] = std::vector<double>(od.u_c.begin(), od.u_c.end());
        doc["t_star_tau"] = od.t_star.tau;

        json profile = json::array();
        for (const auto& [x, v] : od.objective_profile) profile.push_back({x, v});
        doc["objective_profile"] = profile;

        // Tabulate T* (and the delta-indexed variant when requested).
        const double lo = section.value("tabulate_lo", cfg.model.y_support.lo);
        const double hi = section.value("tabulate_hi", cfg.model.y_support.hi);
        const int points = section.value("tabulate_points", 801);
        CsvWriter csv(cfg.out_dir / "tstar.csv", cfg.config_hash, "y,t_star");
        for (int k = 0; k <= points; ++k) {
            const double y = lo + (hi - lo) * k / points;
            csv.row({fmt_double(y), fmt_double(od.t_star.eval(y))});
        }
        if (section.contains("delta")) {
            const double delta = section.at("delta").get<double>();
            Preprocessing td = od.t_star_delta(delta);
            CsvWriter csv_d(cfg.out_dir / "tstar_delta.csv", cfg.config_hash, "y,t_star_delta");
            for (int k = 0; k <= points; ++k) {
                const double y = lo + (hi - lo) * k / points;
                csv_d.row({fmt_double(y), fmt_double(td.eval(y))});
            }
        }
    } catch (const DegenerateObjective& err) {
        doc["degenerate"] = true;
        doc["delta_c"] = "inf";
        doc["reason"] = err.what();
    }
    std::ofstream jout(cfg.out_dir / "design.json");
    jout << doc.dump(2) << "\n";
    write_manifest(cfg, "design", elapsed_since(t0), {{"grid_points", opt.grid_points}});
    return kExitOk;
}

int cmd_threshold(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const json section = require(cfg.raw, "threshold", "config");
    const int branch = require(section, "branch", "threshold").get<int>();
    const double lo = section.value("delta_lo", 0.5);
    const double hi = section.value("delta_hi", 64.0);
    const double rel_tol = section.value("rel_tol", 1e-4);

    const double value =
        recovery_threshold(cfg.model, cfg.signals, cfg.preproc, branch, lo, hi,
                           cfg.quad_explicit ? &cfg.quadrature : nullptr, TheoryOptions{}, rel_tol);
    json doc{{"config_hash", cfg.config_hash},
             {"model", cfg.model.name},
             {"preprocessing", cfg.preproc.name},
             {"branch", branch},
             {"delta_lo", lo},
             {"delta_hi", hi},
             {"rel_tol", rel_tol},
             {"recovery_threshold", value}};
    std::ofstream jout(cfg.out_dir / "threshold.json");
    jout << doc.dump(2) << "\n";
    std::cout << "recovery_threshold(branch " << branch << ") = " << value << "\n";
    write_manifest(cfg, "threshold", elapsed_since(t0), {{"branch", branch}});
    return kExitOk;
}

int cmd_oracle_check(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const json section = cfg.raw.value("oracle", json::object());
    const int instances = section.value("instances", 100);
    const std::uint64_t seed = section.value("seed", 12345ULL);
    const int d_max = section.value("d_max", 20);
    const double eig_tol = section.value("eigenvalue_tol", 1e-8);
    const double vec_tol = section.value("eigenvector_tol", 1e-6);

    OracleOptions oopt;
    if (d_max > oopt.d_cap)
        throw ConfigError("oracle-check: d_max exceeds the oracle cap of " +
                          std::to_string(oopt.d_cap));

    LinkModel sum3;
    sum3.name = "sum3";
    sum3.p = 3;
    sum3.link = [](const Vector& t, double) { return t[0] + t[1] + t[2]; };
    sum3.y_support = YSupport::make_continuous(-22.0, 22.0);

    const std::vector<Preprocessing> preprocs{make_preproc_quadratic_capped(10.0),
                                              make_preproc_subset(2.0),
                                              make_preproc_pr_nonmixed_optimal(-10.0)};

    int failures = 0, checked_vectors = 0, pole_hits = 0;
    std::printf("%-6s %-3s %-4s %-4s %-22s %-12s %-12s %s\n", "inst", "p", "d", "n", "preproc",
                "max_eig_err", "max_vec_err", "status");
    for (int inst = 0; inst < instances; ++inst) {
        Rng rng = Rng::substream(seed, inst);
        const int p = 1 + static_cast<int>(rng.uniform() * 3);
        const int d = 8 + static_cast<int>(rng.uniform() * (d_max - 7));
        const int n = std::max(2 * d, 30 + static_cast<int>(rng.uniform() * 31));
        const Preprocessing& preproc = preprocs[inst % preprocs.size()];

        const LinkModel* model = nullptr;
        LinkModel m1 = make_single_index_model("abs");
        LinkModel m2 = make_product_model();
        if (p == 1)
            model = &m1;
        else if (p == 2)
            model = &m2;
        else
            model = &sum3;
        SignalSpec signals = make_signals_orthonormal(p);

        // One shared sample feeds both the dense reference and the oracle.
        Matrix a_mat(n, d);
        Vector z(n);
        {
            Matrix w_star = signals.embed_canonical(d);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) a_mat(i, j) = rng.normal();
            const Matrix x = a_mat * w_star;
            Vector t(p);
            for (int i = 0; i < n; ++i) {
                t = x.row(i);
                z[i] = preproc.eval(model->link(t, model->noise.sample(rng)));
            }
        }

        Matrix dmat = a_mat.transpose() * (z.asDiagonal() * a_mat) / static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Matrix> es(dmat);

        BlockDecomposition dec(a_mat, z, p, oopt);
        double max_eig_err = 0.0, max_vec_err = 0.0;
        bool ok = true;
        for (int i = 1; i <= p; ++i) {
            const double dense_val = es.eigenvalues()[d - i];
            if (!(dense_val > dec.lambda1_bulk() + 1e-9)) continue;
            double fp = 0.0;
            try {
                fp = eigenvalue_fixed_point(dec, i);
            } catch (const Error&) {
                ok = false;
                continue;
            }
            max_eig_err = std::max(max_eig_err, std::abs(fp - dense_val));
            if (std::abs(fp - dense_val) > eig_tol) ok = false;

            Vector h = eigenvector_reconstruct(dec, i);
            Vector dense_block = es.eigenvectors().col(d - i).head(p);
            if (h.dot(dense_block) < 0.0) h = -h;
            const double err = (h - dense_block).norm();
            max_vec_err = std::max(max_vec_err, err);
            if (err > vec_tol) ok = false;
            ++checked_vectors;
        }
        pole_hits += dec.near_pole_hits();
        if (!ok) ++failures;
        if (!ok || log_level() >= 2 || inst < 3 || inst == instances - 1)
            std::printf("%-6d %-3d %-4d %-4d %-22s %-12.3e %-12.3e %s\n", inst, p, d, n,
                        preproc.name.c_str(), max_eig_err, max_vec_err, ok ? "pass" : "FAIL");
    }
    std::printf("oracle-check: %d/%d instances passed, %d eigenvectors checked, %d pole hits\n",
                instances - failures, instances, checked_vectors, pole_hits);
    write_manifest(cfg, "oracle_check", elapsed_since(t0),
                   {{"instances", instances}, {"failures", failures}});
    return failures == 0 ? kExitOk : kExitCheckFailure;
}

}  // namespace specmim::cli
