#include "specmim/oracle.hpp"

#include <cmath>

namespace specmim {

BlockDecomposition::BlockDecomposition(const Matrix& a_design, const Vector& z, int p,
                                       const OracleOptions& opt)
    : p_(p), d_(static_cast<int>(a_design.cols())), opt_(opt) {
    const int n = static_cast<int>(a_design.rows());
    if (p < 1 || d_ <= p) throw InvalidDimension("oracle: need 1 <= p < d");
    if (d_ > opt.d_cap) throw InvalidDimension("oracle: d exceeds the oracle cap");
    if (z.size() != n) throw InvalidDimension("oracle: z length must match rows of A");

    const auto s_block = a_design.leftCols(p_);
    const auto u_block = a_design.rightCols(d_ - p_);
    const Matrix zs = z.asDiagonal() * s_block;
    a_ = s_block.transpose() * zs / n;
    q_ = u_block.transpose() * zs / n;
    bulk_ = u_block.transpose() * (z.asDiagonal() * u_block) / n;

    Eigen::SelfAdjointEigenSolver<Matrix> es(a_);
    double min_gap = std::numeric_limits<double>::infinity();
    for (int i = 1; i < p_; ++i)
        min_gap = std::min(min_gap, es.eigenvalues()[i] - es.eigenvalues()[i - 1]);
    if (p_ > 1 && min_gap < 1e-10) {
        // Numerically tied corner eigenvalues break the branch bookkeeping;
        // a recorded symmetric jitter restores distinctness.
        Rng rng(opt.jitter_seed);
        Matrix noise(p_, p_);
        for (int i = 0; i < p_; ++i)
            for (int j = 0; j <= i; ++j) noise(i, j) = noise(j, i) = rng.normal();
        a_ += opt.jitter * noise;
        jittered_ = true;
        es.compute(a_);
    }
    a_evals_ = es.eigenvalues().reverse();
    a_evecs_ = es.eigenvectors().rowwise().reverse();

    Eigen::SelfAdjointEigenSolver<Matrix> esb(bulk_);
    lambda1_bulk_ = esb.eigenvalues().maxCoeff();
}

double BlockDecomposition::eigenvalue_of_shifted_bulk(int k, double mu) const {
    // P - q (a - mu I)^-1 q' = P - sum_l (q v_l)(q v_l)' / (lambda_l^a - mu)
    Matrix m = bulk_;
    for (int l = 0; l < p_; ++l) {
        const Vector qv = q_ * a_evecs_.col(l);
        m.noalias() -= qv * qv.transpose() / (a_evals_[l] - mu);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    return es.eigenvalues()[m.rows() - k];  // k-th largest
}

double BlockDecomposition::projected_extension(int which_pole, int k) const {
    ++near_pole_hits_;
    const double lam = a_evals_[which_pole];
    const Vector qv = q_ * a_evecs_.col(which_pole);
    const double qv_norm = qv.norm();
    if (qv_norm < 1e-14)
        throw NearPoleError("oracle: q v_a vanishes, projected extension undefined");
    const Vector r = qv / qv_norm;

    // Pseudo-inverse of (a - lambda I) excludes the pole direction.
    Matrix m = bulk_;
    for (int l = 0; l < p_; ++l) {
        if (l == which_pole) continue;
        const Vector qvl = q_ * a_evecs_.col(l);
        m.noalias() -= qvl * qvl.transpose() / (a_evals_[l] - lam);
    }
    const Matrix proj = Matrix::Identity(d_ - p_, d_ - p_) - r * r.transpose();
    const Matrix projected = proj * m * proj;
    Eigen::SelfAdjointEigenSolver<Matrix> es(projected);
    if (k - 1 < 1) throw NearPoleError("oracle: projected extension asked for the top branch");
    return es.eigenvalues()[projected.rows() - (k - 1)];  // (k-1)-th largest
}

double L_tilde(const BlockDecomposition& dec, int i, double mu) {
    if (i < 1 || i > dec.p()) throw InvalidDimension("L_tilde: branch index out of range");
    const Vector& evals = dec.corner_eigenvalues();
    if (!(mu > evals[i - 1]))
        throw DomainError("L_tilde: mu must exceed the i-th corner eigenvalue");

    for (int l = 0; l < dec.p(); ++l) {
        if (std::abs(mu - evals[l]) < dec.options().pole_tol) {
            const int above = l;  // eigenvalues above mu, exclusive of the hit
            return dec.projected_extension(l, i - above);
        }
    }
    int above = 0;
    while (above < dec.p() && evals[above] > mu) ++above;
    return dec.eigenvalue_of_shifted_bulk(i - above, mu);
}

double eigenvalue_fixed_point(const BlockDecomposition& dec, int i) {
    const Vector& evals = dec.corner_eigenvalues();
    const double base = evals[i - 1];
    const double scale = 1.0 + std::abs(base);

    // L_tilde_i(mu) - mu decreases from +inf; expand to bracket the root.
    double lo = base + 1e-9 * scale;
    while (L_tilde(dec, i, lo) <= lo) {
        lo = base + 0.1 * (lo - base);
        if (lo - base < 1e-15 * scale)
            throw SolverFailure("eigenvalue_fixed_point: no positive gap at the left edge");
    }
    double hi = base + scale;
    while (L_tilde(dec, i, hi) > hi) {
        hi = base + 2.0 * (hi - base);
        if (hi > 1e12 * scale) throw SolverFailure("eigenvalue_fixed_point: bracket expansion failed");
    }
    double a = lo, b = hi;
    for (int it = 0; it < 200 && (b - a) > 1e-14 * (1.0 + std::abs(b)); ++it) {
        const double mid = 0.5 * (a + b);
        if (L_tilde(dec, i, mid) > mid)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

namespace {

// lambda_1(P + mu q q') as a function of mu > 0, its derivative, and the
// inverse above lambda_1^P, all through fresh eigensolves.
struct RankOneEig {
    const Matrix& bulk;
    Vector dir;

    double value(double mu) const {
        Matrix m = bulk;
        m.noalias() += mu * dir * dir.transpose();
        Eigen::SelfAdjointEigenSolver<Matrix> es(m);
        return es.eigenvalues().maxCoeff();
    }
    double derivative(double mu) const {
        Matrix m = bulk;
        m.noalias() += mu * dir * dir.transpose();
        Eigen::SelfAdjointEigenSolver<Matrix> es(m);
        const Vector top = es.eigenvectors().col(m.rows() - 1);
        const double inner = top.dot(dir);
        return inner * inner;
    }
    double inverse(double lambda) const {
        double lo = 0.0, hi = 1.0;
        while (value(hi) < lambda) {
            hi *= 2.0;
            if (hi > 1e14) throw SolverFailure("oracle rank-one inverse: expansion failed");
        }
        for (int it = 0; it < 200 && (hi - lo) > 1e-14 * (1.0 + hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (value(mid) < lambda)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }
};

}  // namespace

RMatrixResult R_matrix(const BlockDecomposition& dec, double lambda, bool debug_dual_route) {
    if (!(lambda > dec.lambda1_bulk() + 1e-12))
        throw DomainError("R_matrix: lambda must exceed the top bulk eigenvalue");
    const int p = dec.p();
    const int m = dec.ambient() - p;

    Matrix shifted = dec.bulk() - lambda * Matrix::Identity(m, m);
    Eigen::LDLT<Matrix> fact(shifted);
    const Matrix x = fact.solve(dec.coupling());  // (P - lambda I)^-1 q

    RMatrixResult out;
    out.r = dec.corner() - dec.coupling().transpose() * x;
    out.dr = -(x.transpose() * x);

    if (debug_dual_route) {
        Matrix r_alt(p, p), dr_alt(p, p);
        std::vector<double> inv_i(p), der_i(p);
        for (int i = 0; i < p; ++i) {
            RankOneEig fn{dec.bulk(), dec.coupling().col(i)};
            inv_i[i] = fn.inverse(lambda);
            der_i[i] = fn.derivative(inv_i[i]);
            r_alt(i, i) = dec.corner()(i, i) + 1.0 / inv_i[i];
            dr_alt(i, i) = -1.0 / (inv_i[i] * inv_i[i] * der_i[i]);
        }
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j) {
                RankOneEig fn{dec.bulk(), dec.coupling().col(i) + dec.coupling().col(j)};
                const double inv_ij = fn.inverse(lambda);
                const double der_ij = fn.derivative(inv_ij);
                r_alt(i, j) = r_alt(j, i) =
                    dec.corner()(i, j) +
                    0.5 * (1.0 / inv_ij - 1.0 / inv_i[i] - 1.0 / inv_i[j]);
                dr_alt(i, j) = dr_alt(j, i) =
                    0.5 * (1.0 / (inv_i[i] * inv_i[i] * der_i[i]) +
                           1.0 / (inv_i[j] * inv_i[j] * der_i[j]) -
                           1.0 / (inv_ij * inv_ij * der_ij));
            }
        out.r_alt = std::move(r_alt);
        out.dr_alt = std::move(dr_alt);
    }
    return out;
}

Vector eigenvector_reconstruct(const BlockDecomposition& dec, int i) {
    const double lambda = eigenvalue_fixed_point(dec, i);
    if (!(lambda > dec.lambda1_bulk() + 1e-12))
        throw NotAnOutlier("eigenvector_reconstruct: eigenvalue does not clear the bulk block");
    RMatrixResult rm = R_matrix(dec, lambda);

    Eigen::SelfAdjointEigenSolver<Matrix> es(rm.r);
    int best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < dec.p(); ++k) {
        const double gap = std::abs(es.eigenvalues()[k] - lambda);
        if (gap < best_gap) {
            best_gap = gap;
            best = k;
        }
    }
    const Vector h_unit = es.eigenvectors().col(best);
    const double quad = h_unit.dot(rm.dr * h_unit);  // nonpositive
    return h_unit / std::sqrt(1.0 - quad);
}

}  // namespace specmim
