#include "specmim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "specmim/rng.hpp"

namespace specmim {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix of the orthogonal
// polynomial recurrence, weights come from the first eigenvector components.
void golub_welsch(const Vector& diag, const Vector& offdiag, Vector& nodes, Vector& weights) {
    const int n = static_cast<int>(diag.size());
    Matrix jacobi = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        jacobi(i, i) = diag[i];
        if (i + 1 < n) {
            jacobi(i, i + 1) = offdiag[i];
            jacobi(i + 1, i) = offdiag[i];
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(jacobi);
    nodes = es.eigenvalues();
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        weights[i] = v0 * v0;  // caller scales by the total mass of the weight function
    }
}

}  // namespace

GaussHermite1d gauss_hermite(int n) {
    if (n < 1) throw InvalidDimension("gauss_hermite: need at least one node");
    // Probabilist Hermite: a_k = 0, b_k = sqrt(k).
    Vector diag = Vector::Zero(n);
    Vector off(n - 1 > 0 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
    GaussHermite1d rule;
    golub_welsch(diag, off, rule.nodes, rule.weights);
    // total mass of N(0,1) is 1, so the squared first components already sum to 1
    return rule;
}

GaussLaguerre1d gauss_laguerre(int n, double alpha) {
    if (n < 1) throw InvalidDimension("gauss_laguerre: need at least one node");
    if (alpha <= -1.0) throw DomainError("gauss_laguerre: alpha must exceed -1");
    Vector diag(n);
    Vector off(n - 1 > 0 ? n - 1 : 0);
    for (int k = 0; k < n; ++k) diag[k] = 2.0 * k + alpha + 1.0;
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(k * (k + alpha));
    GaussLaguerre1d rule;
    golub_welsch(diag, off, rule.nodes, rule.weights);
    rule.weights *= std::tgamma(alpha + 1.0);
    return rule;
}

QuadratureRule QuadratureRule::gauss_hermite_tensor(int dims, int nodes_per_dim) {
    if (dims < 1) throw InvalidDimension("quadrature: dims must be positive");
    const GaussHermite1d one_d = gauss_hermite(nodes_per_dim);

    QuadratureRule rule;
    rule.kind = QuadKind::gauss_hermite_tensor;
    rule.dims = dims;
    rule.nodes_per_dim = nodes_per_dim;

    std::int64_t total = 1;
    for (int k = 0; k < dims; ++k) total *= nodes_per_dim;
    rule.points.resize(total, dims);
    rule.weights.resize(total);

    std::vector<int> idx(dims, 0);
    for (std::int64_t row = 0; row < total; ++row) {
        double w = 1.0;
        for (int k = 0; k < dims; ++k) {
            rule.points(row, k) = one_d.nodes[idx[k]];
            w *= one_d.weights[idx[k]];
        }
        rule.weights[row] = w;
        for (int k = dims - 1; k >= 0; --k) {
            if (++idx[k] < nodes_per_dim) break;
            idx[k] = 0;
        }
    }
    return rule;
}

QuadratureRule QuadratureRule::monte_carlo(int dims, std::int64_t n_samples, std::uint64_t seed) {
    if (dims < 1) throw InvalidDimension("quadrature: dims must be positive");
    if (n_samples < 1) throw InvalidDimension("quadrature: need at least one sample");
    QuadratureRule rule;
    rule.kind = QuadKind::monte_carlo;
    rule.dims = dims;
    rule.n_samples = n_samples;
    rule.seed = seed;
    rule.points.resize(n_samples, dims);
    rule.weights = Vector::Constant(n_samples, 1.0 / static_cast<double>(n_samples));
    Rng rng(seed);
    for (std::int64_t i = 0; i < n_samples; ++i)
        for (int k = 0; k < dims; ++k) rule.points(i, k) = rng.normal();
    return rule;
}

QuadratureRule QuadratureRule::default_for(int dims) {
    if (dims <= 2) return gauss_hermite_tensor(dims, 61);
    if (dims == 3) return gauss_hermite_tensor(dims, 31);
    return monte_carlo(dims, 1000000, 20240901ULL);
}

namespace {

// Gauss-Kronrod 7-15 pair on [-1,1].
constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelEstimate {
    double value;
    double error;
};

PanelEstimate gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int j = 0; j < 7; ++j) {
        fv[j] = f(c - h * kKronrodNodes[j]);
        fv[14 - j] = f(c + h * kKronrodNodes[j]);
    }
    fv[7] = f(c);

    double kronrod = kKronrodWeights[7] * fv[7];
    for (int j = 0; j < 7; ++j) kronrod += kKronrodWeights[j] * (fv[j] + fv[14 - j]);
    double gauss = kGaussWeights[3] * fv[7];
    for (int j = 0; j < 3; ++j) gauss += kGaussWeights[j] * (fv[2 * j + 1] + fv[13 - 2 * j]);

    PanelEstimate est;
    est.value = kronrod * h;
    const double diff = std::abs(kronrod - gauss) * std::abs(h);
    // QUADPACK-style sharpened error estimate
    est.error = diff * std::min(1.0, std::pow(200.0 * diff / (std::abs(est.value) + 1e-300), 1.5));
    if (!std::isfinite(est.value)) throw NumericalDomainError("integrand not finite on panel", c);
    return est;
}

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

}  // namespace

std::vector<double> graded_edges(double a, double b, const std::vector<double>& singular_points,
                                 const IntegrationOptions& opt) {
    std::vector<double> edges{a, b};
    const double scale = b - a;
    for (double s : singular_points) {
        if (s <= a || s >= b) continue;
        edges.push_back(s);
        for (double off = scale; off > opt.grade_floor * scale; off *= opt.grade_ratio) {
            if (s - off > a) edges.push_back(s - off);
            if (s + off < b) edges.push_back(s + off);
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

std::vector<std::pair<double, double>> kronrod15_nodes(double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::vector<std::pair<double, double>> out;
    out.reserve(15);
    for (int j = 0; j < 7; ++j)
        out.emplace_back(c - h * kKronrodNodes[j], h * kKronrodWeights[j]);
    out.emplace_back(c, h * kKronrodWeights[7]);
    for (int j = 6; j >= 0; --j)
        out.emplace_back(c + h * kKronrodNodes[j], h * kKronrodWeights[j]);
    return out;
}

IntegrationResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                     const std::vector<double>& singular_points,
                                     const IntegrationOptions& opt) {
    if (!(b > a)) {
        if (a == b) return {0.0, 0.0, 0};
        IntegrationResult res = integrate_adaptive(f, b, a, singular_points, opt);
        res.value = -res.value;
        return res;
    }

    // Break the interval at singular points with geometrically graded panels
    // approaching each one from both sides.
    std::vector<double> edges = graded_edges(a, b, singular_points, opt);

    std::priority_queue<Panel> queue;
    double total = 0.0, total_err = 0.0;
    int panels = 0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        if (edges[i + 1] <= edges[i]) continue;
        PanelEstimate est = gk15(f, edges[i], edges[i + 1]);
        queue.push({edges[i], edges[i + 1], est.value, est.error});
        total += est.value;
        total_err += est.error;
        ++panels;
    }

    while (total_err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) && !queue.empty()) {
        if (panels >= opt.max_panels)
            throw IntegrationFailure("integrate_adaptive: panel budget exhausted", total_err);
        Panel worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) continue;  // interval at fp resolution
        PanelEstimate left = gk15(f, worst.a, mid);
        PanelEstimate right = gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        queue.push({worst.a, mid, left.value, left.error});
        queue.push({mid, worst.b, right.value, right.error});
        ++panels;
    }

    return {total, total_err, panels};
}

}  // namespace specmim
