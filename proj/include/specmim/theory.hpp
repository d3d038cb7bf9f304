#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "specmim/expectation.hpp"

namespace specmim {

struct TheoryOptions {
    // Resolvent-type expectations are only evaluated at arguments above
    // tau + margin, margin = margin_scale * max(1, |tau|).
    double margin_scale = 1e-7;
    double root_tol = 1e-10;        // |psi'| at the fitted minimizer
    double tie_tol_scale = 1e-7;    // multiplicity grouping: 1e-7 * (1 + |alpha|)
    double alpha_max_scale = 1e6;   // bracket expansion cap: 1e6 * max(1, tau)
    double invariance_rel_tol = 1e-4;  // block quadratic-form agreement
};

// The scalar bulk machinery for a fixed preprocessing and aspect ratio:
// lambda_bar minimizes psi_delta over (tau, inf), bulk_edge = psi(lambda_bar).
struct BulkFunctions {
    std::shared_ptr<const ZLaw> zlaw;
    double delta = 0.0;
    double lambda_bar = 0.0;
    double bulk_edge = 0.0;
    double margin = 0.0;
    bool boundary_minimizer = false;  // psi' > 0 already at tau + margin
};

double margin_for(const ZLaw& law, const TheoryOptions& opt = {});

// psi(lambda) = lambda (1/delta + E[z/(lambda-z)]), lambda > tau + margin.
double psi(const BulkFunctions& bulk, double lambda);
// psi'(lambda) = 1/delta - E[z^2/(lambda-z)^2]
double psi_prime(const BulkFunctions& bulk, double lambda);

BulkFunctions fit_bulk(std::shared_ptr<const ZLaw> zlaw, double delta,
                       const TheoryOptions& opt = {});

// zeta(alpha) = psi(max{lambda_bar, alpha}); derivative vanishes on the
// clamped region.
double zeta(const BulkFunctions& bulk, double alpha);
double zeta_prime(const BulkFunctions& bulk, double alpha);

// R_inf(alpha) = E[alpha z s s' / (alpha - z)] and its entrywise derivative
// -E[z^2 s s' / (alpha - z)^2].
Matrix r_infinity(const ZLaw& law, double alpha, const TheoryOptions& opt = {});
Matrix r_infinity_deriv(const ZLaw& law, double alpha, const TheoryOptions& opt = {});

struct MasterBranch {
    int index = 0;  // 1-based branch (eigenvalue order of R_inf)
    std::optional<double> alpha;
    bool is_outlier = false;
};

struct MasterSolution {
    std::vector<MasterBranch> branches;  // one per index in [p], alpha descending
    int solution_count = 0;              // j
};

// Solves zeta(alpha) = lambda_i(R_inf(alpha)) branch by branch; both sides are
// monotone, so a bracketed bisection is guaranteed once a sign change exists.
MasterSolution solve_master(const BulkFunctions& bulk, const TheoryOptions& opt = {});

struct TheoryPrediction {
    Vector eigenvalues;     // p, non-increasing
    Matrix overlap_basis;   // (i,l): block-aggregated limit of sum |<v_i, e_l>|^2
    Matrix overlap_signal;  // (i,j): same against the unit signal columns
    std::vector<std::vector<int>> blocks;  // partition of [p] (0-based indices)
    MasterSolution master;
    double lambda_bar = 0.0;
    double bulk_edge = 0.0;
    bool boundary_minimizer = false;
    double margin = 0.0;
};

TheoryPrediction predict(const BulkFunctions& bulk, const SignalSpec& signals,
                         const TheoryOptions& opt = {});

// Advisory probe of the solution-count condition: the infimum over the unit
// sphere of E[alpha z <s,x>^2/(alpha-z)] along alpha shrinking toward tau.
struct ExactlyPReport {
    std::vector<double> alphas;
    std::vector<double> values;  // lambda_min(R_inf(alpha))
    bool increasing = false;
    bool monotone = false;
    std::string verdict;  // "diverging-like" or "bounded"
};

ExactlyPReport check_exactly_p(const ZLaw& law, const TheoryOptions& opt = {});

// Critical aspect ratio at which branch `branch` (1-based) switches outlier
// status, located by bisection over delta. Throws BracketError when the
// predicate does not flip across [delta_lo, delta_hi]. A null rule selects
// the conditioned response-grid law when the model supports one.
double recovery_threshold(const LinkModel& model, const SignalSpec& signals,
                          const Preprocessing& preproc, int branch, double delta_lo,
                          double delta_hi, const QuadratureRule* rule = nullptr,
                          const TheoryOptions& opt = {}, double rel_tol = 1e-4);

}  // namespace specmim
