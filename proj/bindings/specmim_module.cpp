#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "specmim/bessel.hpp"
#include "specmim/cli.hpp"
#include "specmim/design.hpp"
#include "specmim/oracle.hpp"
#include "specmim/simulate.hpp"
#include "specmim/theory.hpp"

namespace py = pybind11;
using namespace specmim;

namespace {

// The bindings accept the same JSON fragments the CLI config uses.
cli::json parse_spec(const std::string& text, const char* what) {
    try {
        return cli::json::parse(text);
    } catch (const cli::json::parse_error& err) {
        throw ConfigError(std::string("invalid JSON for ") + what + ": " + err.what());
    }
}

struct Triple {
    LinkModel model;
    SignalSpec signals;
    Preprocessing preproc;
};

Triple build_triple(const std::string& model_json, const std::string& signals_json,
                    const std::string& preproc_json) {
    LinkModel model = cli::build_model(parse_spec(model_json, "model"));
    SignalSpec signals = cli::build_signals(parse_spec(signals_json, "signals"));
    if (signals.p() != model.p) throw ConfigError("signals p does not match the model");
    Preprocessing preproc =
        cli::build_preprocessing(parse_spec(preproc_json, "preprocessing"), model, signals);
    return {std::move(model), std::move(signals), std::move(preproc)};
}

py::dict prediction_to_dict(const TheoryPrediction& pred) {
    py::dict out;
    out["eigenvalues"] = Vector(pred.eigenvalues);
    out["overlap_basis_sq"] = Matrix(pred.overlap_basis);
    out["overlap_signal_sq"] = Matrix(pred.overlap_signal);
    out["lambda_bar"] = pred.lambda_bar;
    out["bulk_edge"] = pred.bulk_edge;
    out["boundary_minimizer"] = pred.boundary_minimizer;
    py::list branches;
    for (const auto& b : pred.master.branches) {
        py::dict row;
        row["index"] = b.index;
        row["alpha"] = b.alpha ? py::object(py::float_(*b.alpha)) : py::none();
        row["is_outlier"] = b.is_outlier;
        branches.append(row);
    }
    out["branches"] = branches;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spectral estimators for multi-index models: theory, design, simulation";

    py::register_exception<Error>(m, "SpecmimError");

    m.def("make_signals", [](int p, const std::string& kind, double rho, std::uint64_t seed) {
        SignalSpec s = kind == "orthonormal"      ? make_signals_orthonormal(p)
                       : kind == "correlated"     ? make_signals_correlated(p, rho)
                       : kind == "random_iid_gaussian"
                           ? make_signals_random_iid_gaussian(p, seed)
                           : throw ConfigError("unknown signals kind " + kind);
        return py::make_tuple(Matrix(s.w_tilde()), Matrix(s.sigma()));
    }, py::arg("p"), py::arg("kind") = "orthonormal", py::arg("rho") = 0.0, py::arg("seed") = 7);

    m.def("reparametrize", [](const Matrix& w) {
        SignalSpec s = reparametrize(w);
        return py::make_tuple(Matrix(s.w_tilde()), Matrix(s.sigma()));
    }, py::arg("W"));

    m.def("predict", [](const std::string& model_json, const std::string& signals_json,
                        const std::string& preproc_json, double delta, int nodes) {
        Triple t = build_triple(model_json, signals_json, preproc_json);
        auto zlaw = std::make_shared<const ZLaw>(
            nodes > 0 ? build_zlaw(t.model, t.signals, t.preproc,
                                   QuadratureRule::gauss_hermite_tensor(t.model.p, nodes))
                      : build_zlaw_adapted(t.model, t.signals, t.preproc));
        BulkFunctions bulk = fit_bulk(zlaw, delta);
        return prediction_to_dict(predict(bulk, t.signals));
    }, py::arg("model"), py::arg("signals"), py::arg("preprocessing"), py::arg("delta"),
       py::arg("nodes") = 0);

    m.def("simulate", [](const std::string& model_json, const std::string& signals_json,
                         const std::string& preproc_json, int d, std::vector<double> deltas,
                         int trials, std::uint64_t seed, int threads) {
        Triple t = build_triple(model_json, signals_json, preproc_json);
        ExperimentConfig cfg;
        cfg.model = t.model;
        cfg.signals = t.signals;
        cfg.preproc = t.preproc;
        cfg.d = d;
        cfg.trials = trials;
        cfg.seed = seed;
        cfg.threads = threads;
        py::list rows;
        for (const auto& r : run_experiment(cfg, deltas)) {
            py::dict row;
            row["delta"] = r.delta;
            row["n"] = r.n;
            row["d"] = r.d;
            row["stat"] = r.stat;
            row["i"] = r.i;
            row["j"] = r.j;
            row["mean"] = r.mean;
            row["std"] = r.stddev;
            row["trials"] = r.trials;
            rows.append(row);
        }
        return rows;
    }, py::arg("model"), py::arg("signals"), py::arg("preprocessing"), py::arg("d"),
       py::arg("deltas"), py::arg("trials") = 10, py::arg("seed") = 1, py::arg("threads") = 1);

    m.def("design", [](const std::string& model_json, const std::string& signals_json,
                       std::vector<double> tabulate_at) {
        LinkModel model = cli::build_model(parse_spec(model_json, "model"));
        SignalSpec signals = cli::build_signals(parse_spec(signals_json, "signals"));
        OptimalDesign od = design(model, signals);
        py::dict out;
        out["delta_c"] = od.delta_c;
        out["u_c"] = Vector(od.u_c);
        out["tau"] = od.t_star.tau;
        py::list tab;
        for (double y : tabulate_at) tab.append(py::make_tuple(y, od.t_star.eval(y)));
        out["t_star"] = tab;
        return out;
    }, py::arg("model"), py::arg("signals"), py::arg("tabulate_at") = std::vector<double>{});

    m.def("recovery_threshold", [](const std::string& model_json, const std::string& signals_json,
                                   const std::string& preproc_json, int branch, double delta_lo,
                                   double delta_hi, int nodes) {
        Triple t = build_triple(model_json, signals_json, preproc_json);
        if (nodes > 0) {
            QuadratureRule rule = QuadratureRule::gauss_hermite_tensor(t.model.p, nodes);
            return recovery_threshold(t.model, t.signals, t.preproc, branch, delta_lo, delta_hi,
                                      &rule);
        }
        return recovery_threshold(t.model, t.signals, t.preproc, branch, delta_lo, delta_hi);
    }, py::arg("model"), py::arg("signals"), py::arg("preprocessing"), py::arg("branch"),
       py::arg("delta_lo"), py::arg("delta_hi"), py::arg("nodes") = 0);

    m.def("operator_threshold", [](const std::string& model_json, const std::string& signals_json) {
        LinkModel model = cli::build_model(parse_spec(model_json, "model"));
        SignalSpec signals = cli::build_signals(parse_spec(signals_json, "signals"));
        ConeThresholdResult res = operator_threshold(model, signals);
        return py::make_tuple(res.value, Matrix(res.m_star), res.iterations);
    }, py::arg("model"), py::arg("signals"));

    m.def("t_star_product", &t_star_product, py::arg("y"));
    m.def("t_star_mixed_pr", [](double eta, double rho, double delta, std::vector<double> ys) {
        Preprocessing t = t_star_mixed_pr(eta, rho, delta);
        py::list tab;
        for (double y : ys) tab.append(py::make_tuple(y, t.eval(y)));
        return py::make_tuple(tab, t.tau, t.bound);
    }, py::arg("eta"), py::arg("rho"), py::arg("delta"), py::arg("ys") = std::vector<double>{});

    m.def("bessel_k0", &bessel_k0, py::arg("x"));
    m.def("bessel_k1", &bessel_k1, py::arg("x"));
}
