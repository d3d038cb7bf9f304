#include "specmim/expectation.hpp"

#include <cmath>

namespace specmim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi); }

}  // namespace

ZLaw build_zlaw(const LinkModel& model, const SignalSpec& signals, const Preprocessing& preproc,
                const QuadratureRule& rule) {
    if (rule.dims != model.p)
        throw InvalidDimension("build_zlaw: quadrature dimension must equal the model's p");

    const Matrix wt = signals.w_tilde().transpose();

    if (rule.kind == QuadKind::gauss_hermite_tensor) {
        if (!model.noise.is_discrete())
            throw UnsupportedCombination(
                "build_zlaw: sampler noise requires a monte_carlo rule");
        const auto& atoms = model.noise.atoms();
        const std::int64_t n_nodes = rule.size();
        const std::int64_t total = n_nodes * static_cast<std::int64_t>(atoms.size());

        ZLaw law;
        law.s.resize(total, model.p);
        law.z.resize(total);
        law.w.resize(total);
        law.tau = preproc.tau;

        std::int64_t row = 0;
        Vector s(model.p), t(model.p);
        for (std::int64_t i = 0; i < n_nodes; ++i) {
            s = rule.points.row(i);
            t.noalias() = wt * s;
            for (const auto& atom : atoms) {
                law.s.row(row) = s;
                law.z[row] = preproc.eval(model.link(t, atom.value));
                law.w[row] = rule.weights[i] * atom.prob;
                ++row;
            }
        }
        law.tau = std::max(law.tau, law.z.maxCoeff());
        return law;
    }

    // Monte Carlo: one noise draw per sample node, seeded from the rule.
    ZLaw law;
    const std::int64_t total = rule.size();
    law.s = rule.points;
    law.z.resize(total);
    law.w = rule.weights;
    law.tau = preproc.tau;
    Rng rng = Rng::substream(rule.seed, 1);  // noise stream, distinct from the point stream
    Vector t(model.p);
    for (std::int64_t i = 0; i < total; ++i) {
        t.noalias() = wt * rule.points.row(i).transpose();
        const double eps = model.noise.sample(rng);
        law.z[i] = preproc.eval(model.link(t, eps));
    }
    law.tau = std::max(law.tau, law.z.maxCoeff());
    return law;
}

namespace {

// Average a conditional second-moment matrix over the permutations of the
// leading m coordinates (valid when the rotated block is the identity there).
void symmetrize_leading(Matrix& m_outer, int m) {
    const int p = static_cast<int>(m_outer.rows());
    double diag = 0.0, off = 0.0;
    for (int i = 0; i < m; ++i) diag += m_outer(i, i);
    diag /= m;
    if (m > 1) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (i != j) off += m_outer(i, j);
        off /= m * (m - 1);
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) m_outer(i, j) = (i == j) ? diag : off;
    for (int c = m; c < p; ++c) {
        double cross = 0.0;
        for (int i = 0; i < m; ++i) cross += m_outer(i, c);
        cross /= m;
        for (int i = 0; i < m; ++i) m_outer(i, c) = m_outer(c, i) = cross;
    }
}

std::vector<double> composite_grid_edges(double lo, double hi, const std::vector<double>& singular,
                                         int target_panels, double floor) {
    IntegrationOptions gopt;
    gopt.grade_floor = floor;
    std::vector<double> edges = graded_edges(lo, hi, singular, gopt);
    std::vector<double> refined;
    const double target_h = (hi - lo) / target_panels;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        refined.push_back(edges[i]);
        const double width = edges[i + 1] - edges[i];
        const int extra = static_cast<int>(width / target_h);
        for (int k = 1; k <= extra; ++k) refined.push_back(edges[i] + width * k / (extra + 1));
    }
    refined.push_back(edges.back());
    return refined;
}

}  // namespace

ZLaw build_zlaw_adapted(const LinkModel& model, const SignalSpec& signals,
                        const Preprocessing& preproc, const AdaptedLawOptions& opt) {
    const int p = model.p;
    const Matrix eye = Matrix::Identity(p, p);

    std::vector<double> zs, ws;
    std::vector<Matrix> outers;

    if (model.directional_mixture) {
        // y reads a single coordinate of t through a scalar map, so
        // E[s s' | t_c = t] = I - w w' + t^2 w w' in closed form.
        const auto& components = *model.directional_mixture;
        const auto& atoms = model.noise.atoms();
        if (components.size() != atoms.size())
            throw UnsupportedCombination("adapted law: mixture components must match noise atoms");
        const auto edges = composite_grid_edges(-12.0, 12.0, {0.0}, opt.response_panels,
                                                opt.grid_floor);
        for (std::size_t c = 0; c < components.size(); ++c) {
            const Vector w_dir = signals.w_tilde().col(components[c].coord);
            const Matrix base = eye - w_dir * w_dir.transpose();
            for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
                for (auto [t, wq] : kronrod15_nodes(edges[e], edges[e + 1])) {
                    const double weight = atoms[c].prob * wq * std_normal_pdf(t);
                    if (weight <= 0.0) continue;
                    zs.push_back(preproc.eval(components[c].scalar_link(t)));
                    ws.push_back(weight);
                    outers.push_back(base + (t * t) * w_dir * w_dir.transpose());
                }
            }
        }
    } else if (model.slice_roots) {
        DensityOptions dopt;
        dopt.inner_abs_tol = opt.moment_abs_tol;
        dopt.inner_rel_tol = opt.moment_rel_tol;
        DensityFunctionals df(model, signals, dopt);
        const YSupport& supp = model.y_support;
        if (supp.kind != YSupport::Kind::continuous)
            throw UnsupportedCombination("adapted law: slice models need a continuous support");
        const bool symmetric_block =
            model.permutation_invariant_coords &&
            (signals.w_tilde() - eye).norm() == 0.0;
        const auto edges = composite_grid_edges(supp.lo, supp.hi, supp.singular_points,
                                                opt.response_panels, opt.grid_floor);
        for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
            for (auto [y, wq] : kronrod15_nodes(edges[e], edges[e + 1])) {
                const double mass = df.marginal(y);
                if (!(mass > 1e-300)) continue;
                Matrix outer = df.weighted_outer(y) / mass;
                if (symmetric_block) symmetrize_leading(outer, *model.permutation_invariant_coords);
                zs.push_back(preproc.eval(y));
                ws.push_back(wq * mass);
                outers.push_back(std::move(outer));
            }
        }
    } else {
        return build_zlaw(model, signals, preproc, QuadratureRule::default_for(p));
    }

    ZLaw law;
    const std::int64_t n = static_cast<std::int64_t>(zs.size());
    law.z = Eigen::Map<Vector>(zs.data(), n);
    law.w = Eigen::Map<Vector>(ws.data(), n);
    law.cond_outer = std::move(outers);
    const double mass = law.w.sum();
    if (std::abs(mass - 1.0) > opt.mass_tol)
        throw IntegrationFailure("adapted law: response grid lost probability mass",
                                 std::abs(mass - 1.0));
    law.w /= mass;
    law.tau = std::max(preproc.tau, law.z.maxCoeff());
    return law;
}

double expect(const ZLaw& law, const std::function<double(const Vector& s, double z)>& f) {
    if (law.conditioned())
        throw UnsupportedCombination("expect: conditioned laws support only moment queries");
    double acc = 0.0;
    Vector s(law.s.cols());
    for (std::int64_t i = 0; i < law.size(); ++i) {
        s = law.s.row(i);
        const double v = f(s, law.z[i]);
        if (!std::isfinite(v))
            throw NumericalDomainError("expect: integrand not finite at node", law.z[i]);
        acc += law.w[i] * v;
    }
    return acc;
}

Matrix expect_matrix(const ZLaw& law,
                     const std::function<Matrix(const Vector& s, double z)>& f) {
    if (law.conditioned())
        throw UnsupportedCombination("expect_matrix: conditioned laws support only moment queries");
    Matrix acc;
    Vector s(law.s.cols());
    for (std::int64_t i = 0; i < law.size(); ++i) {
        s = law.s.row(i);
        Matrix v = f(s, law.z[i]);
        if (!v.allFinite())
            throw NumericalDomainError("expect_matrix: integrand not finite at node", law.z[i]);
        if (acc.size() == 0)
            acc = law.w[i] * v;
        else
            acc += law.w[i] * v;
    }
    return 0.5 * (acc + acc.transpose()).eval();
}

double integrate_y(const LinkModel& model, const std::function<double(double)>& g,
                   const IntegrationOptions& opt) {
    if (model.y_support.kind == YSupport::Kind::discrete) {
        double acc = 0.0;
        for (double atom : model.y_support.atoms) acc += g(atom);
        return acc;
    }
    return integrate_adaptive(g, model.y_support.lo, model.y_support.hi,
                              model.y_support.singular_points, opt)
        .value;
}

DensityFunctionals::DensityFunctionals(const LinkModel& model, const SignalSpec& signals,
                                       const DensityOptions& opt)
    : model_(model), signals_(signals), opt_(opt) {
    if (!model_.has_density() && !model_.directional_mixture)
        throw MissingDensity("density functionals: the model declares no conditional law for y");
    if (model_.slice_roots && model_.p > 2)
        throw UnsupportedCombination("density functionals: slice representation needs p <= 2");
    if (model_.cond_density && !model_.slice_roots && !model_.directional_mixture)
        inner_rule_ = QuadratureRule::gauss_hermite_tensor(model_.p, opt_.inner_gh_nodes);
    if (model_.directional_mixture && model_.p > 1)
        inner_rule_ = QuadratureRule::gauss_hermite_tensor(model_.p - 1, opt_.inner_gh_nodes);
    const Matrix& wt = signals_.w_tilde();
    sigma_inv_ = signals_.sigma().inverse();
    b_ = wt.transpose().inverse();
    sigma_norm_ = 1.0 / (std::pow(kTwoPi, 0.5 * model_.p) *
                         std::sqrt(signals_.sigma().determinant()));
    head_halfwidth_ = 12.0;
}

double DensityFunctionals::slice_moment(double y,
                                        const std::function<double(const Vector&)>& f) const {
    const int p = model_.p;
    if (p == 1) {
        Vector empty(0);
        double acc = 0.0;
        Vector t(1), s(1);
        for (const auto& root : model_.slice_roots(y, empty)) {
            t[0] = root[0];
            s = b_ * t;
            acc += std_normal_pdf(t[0]) * root[1] * f(s);
        }
        return acc;
    }

    // p == 2: integrate the resolved last coordinate over the leading one.
    auto integrand = [&](double t1) {
        Vector head(1);
        head[0] = t1;
        double acc = 0.0;
        Vector t(2), s(2);
        for (const auto& root : model_.slice_roots(y, head)) {
            t[0] = t1;
            t[1] = root[0];
            const double quad = t.dot(sigma_inv_ * t);
            if (quad > 1400.0) continue;  // density underflows
            s = b_ * t;
            acc += sigma_norm_ * std::exp(-0.5 * quad) * root[1] * f(s);
        }
        return acc;
    };
    std::vector<double> singular;
    if (model_.slice_head_singularities) singular = model_.slice_head_singularities(y);
    IntegrationOptions iopt;
    iopt.abs_tol = opt_.inner_abs_tol;
    iopt.rel_tol = opt_.inner_rel_tol;
    return integrate_adaptive(integrand, -head_halfwidth_, head_halfwidth_, singular, iopt).value;
}

double DensityFunctionals::directional_moment(
    double y, const std::function<double(const Vector&)>& f) const {
    const int p = model_.p;
    const auto& components = *model_.directional_mixture;
    const auto& atoms = model_.noise.atoms();
    double acc = 0.0;
    for (std::size_t c = 0; c < components.size(); ++c) {
        const Vector w_dir = signals_.w_tilde().col(components[c].coord);
        // orthonormal basis of the complement for the conditional Gaussian
        Eigen::HouseholderQR<Matrix> qr(w_dir);
        const Matrix full = qr.householderQ();
        const Matrix complement = full.rightCols(p - 1);
        for (const auto& root : components[c].roots(y)) {
            const double t_val = root[0];
            double inner = 0.0;
            if (p == 1) {
                Vector s(1);
                s[0] = t_val;
                inner = f(s);
            } else {
                Vector s(p);
                for (std::int64_t k = 0; k < inner_rule_.size(); ++k) {
                    s = t_val * w_dir + complement * inner_rule_.points.row(k).transpose();
                    inner += inner_rule_.weights[k] * f(s);
                }
            }
            acc += atoms[c].prob * std_normal_pdf(t_val) * root[1] * inner;
        }
    }
    return acc;
}

double DensityFunctionals::pointwise_moment(double y,
                                            const std::function<double(const Vector&)>& f) const {
    double acc = 0.0;
    Vector s(model_.p), t(model_.p);
    const Matrix wt = signals_.w_tilde().transpose();
    for (std::int64_t i = 0; i < inner_rule_.size(); ++i) {
        s = inner_rule_.points.row(i);
        t.noalias() = wt * s;
        acc += inner_rule_.weights[i] * model_.cond_density(y, t) * f(s);
    }
    return acc;
}

double DensityFunctionals::weighted(double y,
                                    const std::function<double(const Vector&)>& f) const {
    if (model_.slice_roots) return slice_moment(y, f);
    if (model_.directional_mixture) return directional_moment(y, f);
    return pointwise_moment(y, f);
}

double DensityFunctionals::marginal(double y) const {
    return weighted(y, [](const Vector&) { return 1.0; });
}

double DensityFunctionals::weighted_proj2(double y, const Vector& u) const {
    return weighted(y, [&u](const Vector& s) {
        const double d = s.dot(u);
        return d * d;
    });
}

Matrix DensityFunctionals::weighted_outer(double y) const {
    const int p = model_.p;
    Matrix out(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) {
            const double v = weighted(y, [i, j](const Vector& s) { return s[i] * s[j]; });
            out(i, j) = v;
            out(j, i) = v;
        }
    return out;
}

Matrix DensityFunctionals::weighted_centered_outer(double y) const {
    return weighted_outer(y) - marginal(y) * Matrix::Identity(model_.p, model_.p);
}

}  // namespace specmim
