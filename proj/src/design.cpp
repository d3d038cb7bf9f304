#include "specmim/design.hpp"

#include <algorithm>
#include <cmath>

namespace specmim {

namespace {

double objective_impl(const DensityFunctionals& df, const Vector& u, const DesignOptions& opt) {
    if (std::abs(u.norm() - 1.0) > 1e-8)
        throw DomainError("objective: direction must lie on the unit sphere");

    auto pointwise = [&](double y) {
        const double m = df.marginal(y);
        if (!(m > opt.density_floor)) return 0.0;  // marginal vanishes: excluded
        const double num = df.weighted_proj2(y, u) - m;
        return num * num / m;
    };

    const YSupport& supp = df.model().y_support;
    if (supp.kind == YSupport::Kind::discrete) {
        double acc = 0.0;
        for (double atom : supp.atoms) acc += pointwise(atom);
        return acc;
    }
    IntegrationOptions iopt;
    iopt.abs_tol = opt.outer_abs_tol;
    iopt.rel_tol = 1e-9;
    return integrate_adaptive(pointwise, supp.lo, supp.hi, supp.singular_points, iopt).value;
}

// Golden-section maximization on [a, b] for a unimodal-enough profile.
double golden_max(const std::function<double(double)>& f, double a, double b, double tol) {
    const double inv_phi = 0.61803398874989484820458683436564;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

struct SphereMax {
    Vector u;
    double value;
    std::vector<std::pair<double, double>> profile;
};

SphereMax maximize_p2(const DensityFunctionals& df, const DesignOptions& opt) {
    const double pi = 3.14159265358979323846264338327950;
    auto at_angle = [&](double theta) {
        Vector u(2);
        u << std::cos(theta), std::sin(theta);
        return objective_impl(df, u, opt);
    };
    SphereMax best;
    best.value = -1.0;
    double best_theta = 0.0;
    const int n = opt.grid_points;
    for (int k = 0; k < n; ++k) {
        const double theta = pi * k / n;
        const double val = at_angle(theta);
        best.profile.emplace_back(theta, val);
        // Symmetric links produce exactly tied maximizers; keep the first
        // (smallest angle) so the returned direction is deterministic.
        if (val > best.value * (1.0 + 1e-9)) {
            best.value = val;
            best_theta = theta;
        }
    }
    const double h = pi / n;
    const double theta_hat = golden_max(at_angle, best_theta - h, best_theta + h, 1e-8);
    best.value = at_angle(theta_hat);
    best.u.resize(2);
    best.u << std::cos(theta_hat), std::sin(theta_hat);
    return best;
}

SphereMax maximize_sphere(const DensityFunctionals& df, const DesignOptions& opt) {
    const int p = df.model().p;
    if (p == 1) {
        SphereMax best;
        best.u = Vector::Ones(1);
        best.value = objective_impl(df, best.u, opt);
        best.profile.emplace_back(0.0, best.value);
        return best;
    }
    if (p == 2) return maximize_p2(df, opt);

    // p >= 3: projected finite-difference gradient ascent from uniform
    // restarts, plus a warm start from the cone-operator fixed point.
    std::vector<Vector> starts;
    Rng rng(opt.seed);
    for (int r = 0; r < opt.restarts; ++r) {
        Vector u(p);
        for (int i = 0; i < p; ++i) u[i] = rng.normal();
        starts.push_back(u.normalized());
    }
    try {
        ConeThresholdResult cone = operator_threshold(df.model(), df.signals(), opt);
        Eigen::SelfAdjointEigenSolver<Matrix> es(cone.m_star);
        starts.push_back(es.eigenvectors().col(p - 1));
    } catch (const Error&) {
        // warm start is best effort
    }

    SphereMax best;
    best.value = -1.0;
    const double fd = 1e-5;
    int id = 0;
    for (Vector u : starts) {
        double val = objective_impl(df, u, opt);
        double step = 0.1;
        for (int it = 0; it < 80 && step > 1e-9; ++it) {
            Vector grad(p);
            for (int i = 0; i < p; ++i) {
                Vector up = u;
                up[i] += fd;
                up.normalize();
                Vector dn = u;
                dn[i] -= fd;
                dn.normalize();
                grad[i] = (objective_impl(df, up, opt) - objective_impl(df, dn, opt)) / (2 * fd);
            }
            grad -= grad.dot(u) * u;
            if (grad.norm() < 1e-12) break;
            Vector trial = (u + step * grad.normalized()).normalized();
            const double tval = objective_impl(df, trial, opt);
            if (tval > val) {
                u = trial;
                val = tval;
            } else {
                step *= 0.5;
            }
        }
        best.profile.emplace_back(static_cast<double>(id++), val);
        if (val > best.value) {
            best.value = val;
            best.u = u;
        }
    }
    return best;
}

}  // namespace

double objective(const LinkModel& model, const SignalSpec& signals, const Vector& u,
                 const DesignOptions& opt) {
    DensityFunctionals df(model, signals, opt.density());
    return objective_impl(df, u, opt);
}

OptimalDesign design(const LinkModel& model, const SignalSpec& signals, const DesignOptions& opt) {
    auto df = std::make_shared<DensityFunctionals>(model, signals, opt.density());
    SphereMax found = maximize_sphere(*df, opt);
    if (!(found.value > opt.objective_floor))
        throw DegenerateObjective("design: objective vanishes everywhere on the sphere");

    OptimalDesign out;
    out.delta_c = 1.0 / found.value;
    out.u_c = found.u;
    out.objective_profile = std::move(found.profile);

    const Vector u_c = out.u_c;
    const double floor = opt.density_floor;
    const double clip = opt.t_star_clip;
    auto raw = [df, u_c, floor](double y) {
        const double m = df->marginal(y);
        if (!(m > floor)) return 0.0;
        const double m2 = df->weighted_proj2(y, u_c);
        return 1.0 - m / std::max(m2, 1e-300);
    };
    auto clipped = [raw, clip](double y) { return std::max(raw(y), clip); };

    // tau: dense scan over the support, plus an Aitken tail extrapolation so
    // suprema that are only approached (never attained) are still declared.
    const YSupport& supp = model.y_support;
    double tau = -std::numeric_limits<double>::infinity();
    if (supp.kind == YSupport::Kind::discrete) {
        for (double atom : supp.atoms) tau = std::max(tau, clipped(atom));
    } else {
        const int n_scan = 2001;
        for (int k = 0; k <= n_scan; ++k) {
            const double y = supp.lo + (supp.hi - supp.lo) * k / n_scan;
            tau = std::max(tau, clipped(y));
        }
        for (double edge : {supp.lo, supp.hi}) {
            if (edge == 0.0) continue;
            const double t0 = clipped(edge), t1 = clipped(2.0 * edge), t2 = clipped(4.0 * edge);
            const double d0 = t1 - t0, d1 = t2 - t1;
            if (std::abs(d1 - d0) > 1e-15) {
                const double aitken = t0 - d0 * d0 / (d1 - d0);
                if (std::isfinite(aitken) && aitken > tau && aitken <= 1.0 + 1e-12)
                    tau = aitken;
            }
        }
    }
    tau = std::min(tau, 1.0);

    out.t_star = Preprocessing{"t_star", clipped, tau, std::max(1.0, std::abs(clip))};

    const double delta_c = out.delta_c;
    const double tau_star = tau;
    out.t_star_delta = [clipped, delta_c, tau_star, clip](double delta) {
        if (!(delta >= delta_c))
            throw DomainError("t_star_delta: delta must be at least delta_c");
        const double rc = std::sqrt(delta_c), rd = std::sqrt(delta);
        auto shrink = [rc, rd](double t) { return rc * t / (rd - (rd - rc) * t); };
        auto eval = [clipped, shrink](double y) { return shrink(clipped(y)); };
        const double bound = std::max(1.0, std::abs(shrink(clip)));
        return Preprocessing{"t_star_delta", eval, shrink(tau_star), bound};
    };
    return out;
}

double t_star_product(double y) {
    if (y == 0.0) throw DomainError("t_star_product: undefined at y = 0");
    const double a = std::abs(y);
    const double k0 = bessel_k0_scaled(a);
    const double k1 = bessel_k1_scaled(a);
    return 1.0 - k0 / (y * k0 + a * k1);
}

Preprocessing make_preproc_prod_optimal(double floor) {
    return {"prod_optimal",
            [floor](double y) { return y == 0.0 ? floor : std::max(t_star_product(y), floor); },
            1.0, std::abs(floor)};
}

Preprocessing t_star_mixed_pr(double eta, double rho, double delta) {
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("t_star_mixed_pr: eta must be in (0,1)");
    if (!(std::abs(rho) < 1.0)) throw DomainError("t_star_mixed_pr: |rho| must be below 1");
    if (!(delta > 0.0)) throw DomainError("t_star_mixed_pr: delta must be positive");

    const double gamma =
        0.5 * (1.0 + std::sqrt(4.0 * rho * rho * eta * (1.0 - eta) + (2.0 * eta - 1.0) * (2.0 * eta - 1.0)));
    const double r = (gamma - eta) / (eta * rho);
    const double a1 = 1.0 + 2.0 * (gamma - eta) / eta + r * r;
    const double a2 = eta + (1.0 - eta) * rho * rho + 2.0 * (gamma - eta) / eta +
                      r * r * ((1.0 - eta) + eta * rho * rho);
    const double a3 = (1.0 - eta) * (1.0 - rho * rho) + r * r * eta * (1.0 - rho * rho);
    const double b = a1 - a3;

    static const GaussHermite1d gh = gauss_hermite(201);
    auto lhs = [&](double ell) {
        double integral = 0.0;
        for (int i = 0; i < gh.nodes.size(); ++i) {
            const double y2 = gh.nodes[i] * gh.nodes[i];
            const double c = y2 - 1.0;
            integral += gh.weights[i] * c * c / (a2 * y2 + ell);
        }
        return (ell - a3) * integral;
    };

    const double target = 1.0 / (gamma * gamma * delta);
    double lo = std::max((gamma / eta) * (gamma / eta) - b, 0.0) + 1e-12;
    if (lhs(lo) >= target)
        throw SolverFailure("t_star_mixed_pr: no sign change at the lower bracket");
    double hi = std::max(2.0 * lo, 1.0);
    while (lhs(hi) < target) {
        hi *= 2.0;
        if (hi > 1e12) throw SolverFailure("t_star_mixed_pr: bracket expansion failed");
    }
    // monotonicity spot-check on the working bracket
    if (!(lhs(lo) < lhs(0.5 * (lo + hi)) && lhs(0.5 * (lo + hi)) < lhs(hi)))
        throw SolverFailure("t_star_mixed_pr: left side not increasing on the bracket");
    double a = lo, bb = hi;
    for (int it = 0; it < 200 && (bb - a) > 1e-13 * (1.0 + std::abs(bb)); ++it) {
        const double mid = 0.5 * (a + bb);
        if (lhs(mid) < target)
            a = mid;
        else
            bb = mid;
    }
    const double ell = 0.5 * (a + bb);

    const double c1 = a2 + gamma * (ell - a3);
    const double c2 = ell - gamma * (ell - a3);
    if (!(c1 > 0.0) || !(c2 > 0.0))
        throw SolverFailure("t_star_mixed_pr: solved preprocessing is unbounded");
    auto eval = [c1, c2](double y) { return (y * y - 1.0) / (c1 * y * y + c2); };
    // (x-1)/(c1 x + c2) is monotone in x = y^2 with slope sign c1 + c2 > 0,
    // so the supremum over y >= 0 is the limit 1/c1.
    const double tau = 1.0 / c1;
    const double bound = std::max(1.0 / c1, 1.0 / c2);
    return {"mpr_optimal", eval, tau, bound};
}

ConeThresholdResult operator_threshold(const LinkModel& model, const SignalSpec& signals,
                                       const DesignOptions& opt) {
    DensityFunctionals df(model, signals, opt.density());
    const int p = model.p;

    std::vector<double> ys;
    std::vector<double> wy;
    const YSupport& supp = model.y_support;
    if (supp.kind == YSupport::Kind::discrete) {
        for (double atom : supp.atoms) {
            ys.push_back(atom);
            wy.push_back(1.0);  // masses enter through the marginal below
        }
    } else {
        IntegrationOptions gopt;
        std::vector<double> edges = graded_edges(supp.lo, supp.hi, supp.singular_points, gopt);
        // top up with a uniform subdivision so smooth regions are resolved
        std::vector<double> refined;
        const double target_h = (supp.hi - supp.lo) / opt.cone_grid_panels;
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            refined.push_back(edges[i]);
            const double width = edges[i + 1] - edges[i];
            const int extra = static_cast<int>(width / target_h);
            for (int k = 1; k <= extra; ++k)
                refined.push_back(edges[i] + width * k / (extra + 1));
        }
        refined.push_back(edges.back());
        for (std::size_t i = 0; i + 1 < refined.size(); ++i)
            for (auto [x, w] : kronrod15_nodes(refined[i], refined[i + 1])) {
                ys.push_back(x);
                wy.push_back(w);
            }
    }

    std::vector<Matrix> e_mats;
    std::vector<double> weights;
    for (std::size_t k = 0; k < ys.size(); ++k) {
        const double m = df.marginal(ys[k]);
        if (!(m > opt.density_floor)) continue;
        e_mats.push_back(df.weighted_centered_outer(ys[k]) / m);
        weights.push_back(wy[k] * m);
    }

    Matrix m_cur = Matrix::Identity(p, p) / std::sqrt(static_cast<double>(p));
    auto apply = [&](const Matrix& m_in) {
        Matrix acc = Matrix::Zero(p, p);
        for (std::size_t k = 0; k < e_mats.size(); ++k)
            acc += weights[k] * e_mats[k] * m_in * e_mats[k];
        return acc;
    };

    Matrix f0 = apply(m_cur);
    if (f0.norm() < 1e-14) return {0.0, m_cur, 0};

    ConeThresholdResult res;
    for (int it = 1; it <= opt.power_max_iter; ++it) {
        Matrix next = apply(m_cur);
        next /= next.norm();
        const double diff = (next - m_cur).norm();
        m_cur = next;
        if (diff < opt.power_tol) {
            res.iterations = it;
            res.m_star = m_cur;
            res.value = (apply(m_cur).array() * m_cur.array()).sum();
            return res;
        }
    }
    throw SolverFailure("operator_threshold: power iteration did not converge");
}

}  // namespace specmim
