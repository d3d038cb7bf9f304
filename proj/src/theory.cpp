#include "specmim/theory.hpp"

#include <algorithm>
#include <cmath>

namespace specmim {

namespace {

void check_above(const ZLaw& law, double x, double margin, const char* what) {
    if (!(x > law.tau + 0.5 * margin))
        throw DomainError(std::string(what) + ": argument must exceed tau + margin");
}

int law_dim(const ZLaw& law) {
    return law.conditioned() ? static_cast<int>(law.cond_outer.front().rows())
                             : static_cast<int>(law.s.cols());
}

// E[z/(lambda-z)]
double moment_resolvent(const ZLaw& law, double lambda) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < law.size(); ++i) acc += law.w[i] * law.z[i] / (lambda - law.z[i]);
    return acc;
}

// E[z^2/(lambda-z)^2]
double moment_resolvent2(const ZLaw& law, double lambda) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < law.size(); ++i) {
        const double r = law.z[i] / (lambda - law.z[i]);
        acc += law.w[i] * r * r;
    }
    return acc;
}

Vector r_inf_eigs(const ZLaw& law, double alpha, const TheoryOptions& opt) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(r_infinity(law, alpha, opt));
    return es.eigenvalues().reverse();  // descending
}

}  // namespace

double margin_for(const ZLaw& law, const TheoryOptions& opt) {
    return opt.margin_scale * std::max(1.0, std::abs(law.tau));
}

double psi(const BulkFunctions& bulk, double lambda) {
    check_above(*bulk.zlaw, lambda, bulk.margin, "psi");
    return lambda * (1.0 / bulk.delta + moment_resolvent(*bulk.zlaw, lambda));
}

double psi_prime(const BulkFunctions& bulk, double lambda) {
    check_above(*bulk.zlaw, lambda, bulk.margin, "psi_prime");
    return 1.0 / bulk.delta - moment_resolvent2(*bulk.zlaw, lambda);
}

BulkFunctions fit_bulk(std::shared_ptr<const ZLaw> zlaw, double delta, const TheoryOptions& opt) {
    if (!(delta > 0.0)) throw DomainError("fit_bulk: delta must be positive");
    BulkFunctions bulk;
    bulk.zlaw = std::move(zlaw);
    bulk.delta = delta;
    bulk.margin = margin_for(*bulk.zlaw, opt);

    const ZLaw& law = *bulk.zlaw;
    const double lo = law.tau + bulk.margin;
    const double target = 1.0 / delta;

    // psi'(lambda) = 1/delta - E[z^2/(lambda-z)^2]; the expectation decreases
    // in lambda, so psi' is increasing and a sign change brackets the root.
    if (moment_resolvent2(law, lo) <= target) {
        bulk.boundary_minimizer = true;
        bulk.lambda_bar = lo;
        bulk.bulk_edge = psi(bulk, lo);
        return bulk;
    }
    double hi = std::max(2.0 * std::abs(law.tau) + 1.0, 2.0 * lo);
    while (moment_resolvent2(law, hi) > target) {
        hi *= 2.0;
        if (hi > 1e300) throw SolverFailure("fit_bulk: minimizer bracket expansion failed");
    }
    double a = lo, b = hi;
    for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(b)); ++it) {
        const double mid = 0.5 * (a + b);
        if (moment_resolvent2(law, mid) > target)
            a = mid;
        else
            b = mid;
    }
    bulk.lambda_bar = 0.5 * (a + b);
    bulk.bulk_edge = psi(bulk, bulk.lambda_bar);
    return bulk;
}

double zeta(const BulkFunctions& bulk, double alpha) {
    check_above(*bulk.zlaw, alpha, bulk.margin, "zeta");
    if (alpha <= bulk.lambda_bar) return bulk.bulk_edge;
    return psi(bulk, alpha);
}

double zeta_prime(const BulkFunctions& bulk, double alpha) {
    check_above(*bulk.zlaw, alpha, bulk.margin, "zeta_prime");
    if (alpha <= bulk.lambda_bar) return 0.0;
    return psi_prime(bulk, alpha);
}

namespace {

// E[c(z) s s'] for either representation of the law.
Matrix outer_moment(const ZLaw& law, const std::function<double(double)>& coeff) {
    if (law.conditioned()) {
        Matrix acc = Matrix::Zero(law.cond_outer.front().rows(), law.cond_outer.front().cols());
        for (std::int64_t i = 0; i < law.size(); ++i)
            acc += law.w[i] * coeff(law.z[i]) * law.cond_outer[i];
        return acc;
    }
    const int p = law_dim(law);
    Matrix acc = Matrix::Zero(p, p);
    for (std::int64_t i = 0; i < law.size(); ++i) {
        acc.selfadjointView<Eigen::Lower>().rankUpdate(law.s.row(i).transpose(),
                                                       law.w[i] * coeff(law.z[i]));
    }
    return acc.selfadjointView<Eigen::Lower>();
}

}  // namespace

Matrix r_infinity(const ZLaw& law, double alpha, const TheoryOptions& opt) {
    check_above(law, alpha, margin_for(law, opt), "r_infinity");
    return outer_moment(law, [alpha](double z) { return alpha * z / (alpha - z); });
}

Matrix r_infinity_deriv(const ZLaw& law, double alpha, const TheoryOptions& opt) {
    check_above(law, alpha, margin_for(law, opt), "r_infinity_deriv");
    return outer_moment(law, [alpha](double z) {
        const double r = z / (alpha - z);
        return -r * r;
    });
}

MasterSolution solve_master(const BulkFunctions& bulk, const TheoryOptions& opt) {
    const ZLaw& law = *bulk.zlaw;
    const int p = law_dim(law);
    const double lo = law.tau + bulk.margin;
    const double alpha_max = opt.alpha_max_scale * std::max(1.0, std::abs(law.tau));

    MasterSolution sol;
    sol.branches.resize(p);

    // g_i(alpha) = zeta(alpha) - lambda_i(R_inf(alpha)) is strictly increasing.
    const Vector eigs_lo = r_inf_eigs(law, lo, opt);
    for (int i = 0; i < p; ++i) {
        MasterBranch& branch = sol.branches[i];
        branch.index = i + 1;
        const double g_lo = zeta(bulk, lo) - eigs_lo[i];
        if (g_lo >= 0.0) continue;  // no solution on this branch

        double hi = std::max(2.0 * lo, bulk.lambda_bar + 1.0);
        while (zeta(bulk, hi) - r_inf_eigs(law, hi, opt)[i] <= 0.0) {
            hi *= 2.0;
            if (hi > alpha_max)
                throw SolverFailure("solve_master: bracket expansion exceeded alpha_max on branch " +
                                    std::to_string(i + 1));
        }
        double a = lo, b = hi;
        for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + std::abs(b)); ++it) {
            const double mid = 0.5 * (a + b);
            if (zeta(bulk, mid) - r_inf_eigs(law, mid, opt)[i] <= 0.0)
                a = mid;
            else
                b = mid;
        }
        branch.alpha = 0.5 * (a + b);
        const double tie = opt.tie_tol_scale * (1.0 + std::abs(bulk.lambda_bar));
        branch.is_outlier = *branch.alpha > bulk.lambda_bar + tie;
        ++sol.solution_count;
    }
    return sol;
}

TheoryPrediction predict(const BulkFunctions& bulk, const SignalSpec& signals,
                         const TheoryOptions& opt) {
    const ZLaw& law = *bulk.zlaw;
    const int p = law_dim(law);
    if (signals.p() != p) throw InvalidDimension("predict: signal dimension mismatch");

    TheoryPrediction pred;
    pred.master = solve_master(bulk, opt);
    pred.lambda_bar = bulk.lambda_bar;
    pred.bulk_edge = bulk.bulk_edge;
    pred.boundary_minimizer = bulk.boundary_minimizer;
    pred.margin = bulk.margin;
    pred.eigenvalues.resize(p);
    pred.overlap_basis = Matrix::Zero(p, p);
    pred.overlap_signal = Matrix::Zero(p, p);

    for (int i = 0; i < p; ++i) {
        const auto& branch = pred.master.branches[i];
        pred.eigenvalues[i] = branch.alpha ? zeta(bulk, *branch.alpha) : bulk.bulk_edge;
    }

    // Group branches into multiplicity blocks by alpha ties; every non-outlier
    // branch lands in a single trailing bulk block.
    std::vector<int> outliers;
    std::vector<int> bulk_block;
    for (int i = 0; i < p; ++i) {
        if (pred.master.branches[i].is_outlier)
            outliers.push_back(i);
        else
            bulk_block.push_back(i);
    }
    std::size_t start = 0;
    while (start < outliers.size()) {
        std::size_t stop = start + 1;
        const double a0 = *pred.master.branches[outliers[start]].alpha;
        while (stop < outliers.size()) {
            const double a1 = *pred.master.branches[outliers[stop]].alpha;
            if (std::abs(a0 - a1) >= opt.tie_tol_scale * (1.0 + std::abs(a0))) break;
            ++stop;
        }
        std::vector<int> block(outliers.begin() + start, outliers.begin() + stop);
        const int m = static_cast<int>(block.size());

        double alpha_block = 0.0;
        for (int idx : block) alpha_block += *pred.master.branches[idx].alpha;
        alpha_block /= m;

        const double zp = zeta_prime(bulk, alpha_block);
        Eigen::SelfAdjointEigenSolver<Matrix> es(r_infinity(law, alpha_block, opt));
        const Matrix dR = r_infinity_deriv(law, alpha_block, opt);

        // Eigenpairs come back ascending; branch i takes the i-th largest.
        Matrix basis(p, m);
        for (int kk = 0; kk < m; ++kk) basis.col(kk) = es.eigenvectors().col(p - 1 - block[kk]);

        // Theorem-level hypothesis: the quadratic form h' dR h must agree
        // across the block basis, otherwise the block formula is undefined.
        Vector qf(m);
        for (int kk = 0; kk < m; ++kk) qf[kk] = basis.col(kk).dot(dR * basis.col(kk));
        const double qf_mean = qf.mean();
        for (int kk = 0; kk < m; ++kk)
            if (std::abs(qf[kk] - qf_mean) > opt.invariance_rel_tol * (std::abs(qf_mean) + zp))
                throw EigenspaceInvarianceViolation(
                    "predict: h' dR h varies across a multiplicity block");

        // Squared-overlap limit for the block: zp * <x, P x> / (zp - qf),
        // with P the block eigenprojector. dR is negative definite, so the
        // denominator exceeds zp and the ratio stays within [0, 1].
        const double denom = zp - qf_mean;
        const Matrix proj = basis * basis.transpose();
        for (int idx : block) {
            for (int l = 0; l < p; ++l) pred.overlap_basis(idx, l) = zp * proj(l, l) / denom;
            for (int j = 0; j < p; ++j) {
                const Vector wj = signals.w_tilde().col(j);
                pred.overlap_signal(idx, j) = zp * wj.dot(proj * wj) / denom;
            }
        }
        pred.blocks.push_back(std::move(block));
        start = stop;
    }
    if (!bulk_block.empty()) pred.blocks.push_back(std::move(bulk_block));
    return pred;
}

ExactlyPReport check_exactly_p(const ZLaw& law, const TheoryOptions& opt) {
    ExactlyPReport report;
    const double tau = law.tau;
    for (int k = 2; k <= 8; ++k) {
        const double step = std::pow(10.0, -k) * std::max(1.0, std::abs(tau));
        const double alpha = tau + step;
        // inf over the unit sphere of E[alpha z <s,x>^2/(alpha-z)] is exactly
        // the smallest eigenvalue of R_inf(alpha)
        TheoryOptions local = opt;
        local.margin_scale = std::min(opt.margin_scale, 1e-10);
        Eigen::SelfAdjointEigenSolver<Matrix> es(r_infinity(law, alpha, local));
        report.alphas.push_back(alpha);
        report.values.push_back(es.eigenvalues()[0]);
    }
    // ordered by k, i.e. alpha shrinking toward tau
    bool increasing = true, decreasing = true;
    for (std::size_t i = 1; i < report.values.size(); ++i) {
        if (report.values[i] < report.values[i - 1] - 1e-12) increasing = false;
        if (report.values[i] > report.values[i - 1] + 1e-12) decreasing = false;
    }
    report.increasing = increasing;
    report.monotone = increasing || decreasing;
    if (!report.monotone)
        report.verdict = "noisy";
    else if (increasing && report.values.back() > 4.0 * std::abs(report.values.front()) + 1.0)
        report.verdict = "diverging-like";
    else
        report.verdict = "bounded";
    return report;
}

double recovery_threshold(const LinkModel& model, const SignalSpec& signals,
                          const Preprocessing& preproc, int branch, double delta_lo,
                          double delta_hi, const QuadratureRule* rule, const TheoryOptions& opt,
                          double rel_tol) {
    if (branch < 1) throw InvalidDimension("recovery_threshold: branch index is 1-based");
    if (!(delta_lo > 0.0 && delta_hi > delta_lo))
        throw BracketError("recovery_threshold: need 0 < delta_lo < delta_hi");

    auto zlaw = std::make_shared<const ZLaw>(rule ? build_zlaw(model, signals, preproc, *rule)
                                                  : build_zlaw_adapted(model, signals, preproc));
    auto outlier_at = [&](double delta) {
        BulkFunctions bulk = fit_bulk(zlaw, delta, opt);
        MasterSolution sol = solve_master(bulk, opt);
        return sol.branches.at(branch - 1).is_outlier;
    };

    bool lo_out = outlier_at(delta_lo);
    bool hi_out = outlier_at(delta_hi);
    if (lo_out == hi_out)
        throw BracketError("recovery_threshold: outlier status does not flip across the bracket");

    double a = delta_lo, b = delta_hi;
    while ((b - a) > rel_tol * a) {
        const double mid = 0.5 * (a + b);
        if (outlier_at(mid) == lo_out)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

}  // namespace specmim
