#include "specmim/model.hpp"

#include <cmath>

namespace specmim {

NoiseSpec NoiseSpec::none() {
    NoiseSpec spec;
    spec.discrete_ = true;
    spec.atoms_ = {{0.0, 1.0}};
    return spec;
}

NoiseSpec NoiseSpec::discrete(std::vector<NoiseAtom> atoms) {
    if (atoms.empty()) throw InvalidDimension("noise: need at least one atom");
    double total = 0.0, mean = 0.0, second = 0.0;
    for (const auto& a : atoms) {
        if (!(a.prob >= 0.0) || !std::isfinite(a.value))
            throw DomainError("noise: atoms need finite values and nonnegative probabilities");
        total += a.prob;
        mean += a.prob * a.value;
        second += a.prob * a.value * a.value;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("noise: probabilities must sum to 1");
    NoiseSpec spec;
    spec.discrete_ = true;
    spec.atoms_ = std::move(atoms);
    spec.mean_ = mean;
    spec.variance_ = second - mean * mean;
    return spec;
}

NoiseSpec NoiseSpec::sampler(std::function<double(Rng&)> draw, double mean, double variance) {
    if (!draw) throw DomainError("noise: sampler function required");
    if (!std::isfinite(mean) || !std::isfinite(variance) || variance < 0.0)
        throw DomainError("noise: sampler needs finite declared moments");
    NoiseSpec spec;
    spec.discrete_ = false;
    spec.draw_ = std::move(draw);
    spec.mean_ = mean;
    spec.variance_ = variance;
    return spec;
}

double NoiseSpec::sample(Rng& rng) const {
    if (!discrete_) return draw_(rng);
    double u = rng.uniform();
    for (const auto& a : atoms_) {
        if (u < a.prob) return a.value;
        u -= a.prob;
    }
    return atoms_.back().value;
}

YSupport YSupport::make_discrete(std::vector<double> atoms) {
    YSupport s;
    s.kind = Kind::discrete;
    s.atoms = std::move(atoms);
    return s;
}

YSupport YSupport::make_continuous(double lo, double hi, std::vector<double> singular) {
    if (!(hi > lo)) throw DomainError("y_support: hi must exceed lo");
    YSupport s;
    s.kind = Kind::continuous;
    s.lo = lo;
    s.hi = hi;
    s.singular_points = std::move(singular);
    return s;
}

namespace {

void check_unit_columns(const Matrix& m, const char* what) {
    for (int j = 0; j < m.cols(); ++j)
        if (std::abs(m.col(j).norm() - 1.0) > 1e-10)
            throw DegenerateSignals(std::string(what) + ": columns must have unit norm");
}

}  // namespace

SignalSpec::SignalSpec(Matrix w_tilde, std::optional<Matrix> w_star)
    : w_tilde_(std::move(w_tilde)), w_star_(std::move(w_star)) {
    const int p = static_cast<int>(w_tilde_.cols());
    if (p < 1 || w_tilde_.rows() != p) throw InvalidDimension("signals: w_tilde must be square p x p");
    for (int i = 0; i < p; ++i) {
        if (!(w_tilde_(i, i) > 0.0))
            throw DegenerateSignals("signals: w_tilde needs a strictly positive diagonal");
        for (int j = 0; j < i; ++j)
            if (w_tilde_(i, j) != 0.0)
                throw DegenerateSignals("signals: w_tilde must be upper triangular");
    }
    check_unit_columns(w_tilde_, "signals");
    sigma_ = w_tilde_.transpose() * w_tilde_;
    Eigen::FullPivLU<Matrix> lu(sigma_);
    if (lu.rank() < p) throw DegenerateSignals("signals: covariance is rank deficient");
}

Matrix SignalSpec::embed_canonical(int d) const {
    if (d < p()) throw InvalidDimension("signals: ambient dimension below p");
    Matrix w = Matrix::Zero(d, p());
    w.topRows(p()) = w_tilde_;
    return w;
}

namespace {

// Upper-triangular factor U with positive diagonal and U' U = gram.
Matrix gram_to_upper(const Matrix& gram) {
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success)
        throw DegenerateSignals("signals: Gram matrix is not positive definite");
    Matrix upper = llt.matrixL().transpose();
    // LLT yields a nonnegative diagonal; reject near-zero pivots.
    for (int i = 0; i < upper.rows(); ++i)
        if (!(upper(i, i) > 1e-12)) throw DegenerateSignals("signals: Gram matrix nearly singular");
    return upper;
}

}  // namespace

SignalSpec make_signals_orthonormal(int p) {
    if (p < 1) throw InvalidDimension("make_signals: p must be at least 1");
    return SignalSpec(Matrix::Identity(p, p));
}

SignalSpec make_signals_correlated(int p, double rho) {
    if (p < 1) throw InvalidDimension("make_signals: p must be at least 1");
    if (!(std::abs(rho) < 1.0)) throw DegenerateSignals("make_signals: |rho| must be below 1");
    Matrix sigma = Matrix::Constant(p, p, rho);
    sigma.diagonal().setOnes();
    return SignalSpec(gram_to_upper(sigma));
}

SignalSpec make_signals_random_iid_gaussian(int p, std::uint64_t seed) {
    if (p < 1) throw InvalidDimension("make_signals: p must be at least 1");
    Rng rng(seed);
    Matrix w(p, p);
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < p; ++i) w(i, j) = rng.normal();
        w.col(j) /= w.col(j).norm();
    }
    return reparametrize(w);
}

SignalSpec reparametrize(const Matrix& W) {
    if (W.cols() < 1 || W.rows() < W.cols())
        throw InvalidDimension("reparametrize: need a tall d x p matrix");
    check_unit_columns(W, "reparametrize");
    return SignalSpec(gram_to_upper(W.transpose() * W), W);
}

std::pair<Vector, double> sample_pair(const LinkModel& model, const SignalSpec& signals, Rng& rng) {
    Vector s(model.p);
    for (int i = 0; i < model.p; ++i) s[i] = rng.normal();
    const double eps = model.noise.sample(rng);
    const Vector t = signals.w_tilde().transpose() * s;
    return {s, model.link(t, eps)};
}

LinkModel make_product_model() {
    LinkModel m;
    m.name = "product";
    m.p = 2;
    m.link = [](const Vector& t, double) { return t[0] * t[1]; };
    m.noise = NoiseSpec::none();
    m.y_support = YSupport::make_continuous(-40.0, 40.0, {0.0});
    m.permutation_invariant_coords = 2;
    m.slice_roots = [](double y, const Vector& t_head) {
        std::vector<std::array<double, 2>> roots;
        const double t1 = t_head[0];
        if (t1 != 0.0) roots.push_back({y / t1, 1.0 / std::abs(t1)});
        return roots;
    };
    m.slice_head_singularities = [](double) { return std::vector<double>{0.0}; };
    return m;
}

LinkModel make_mixed_pr_model(double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("mixed_phase_retrieval: eta must be in (0,1)");
    LinkModel m;
    m.name = "mixed_phase_retrieval";
    m.p = 2;
    m.link = [](const Vector& t, double eps) { return std::abs(t[eps > 1.5 ? 1 : 0]); };
    m.noise = NoiseSpec::discrete({{1.0, eta}, {2.0, 1.0 - eta}});
    m.y_support = YSupport::make_continuous(0.0, 40.0);
    auto absolute = [](double t) { return std::abs(t); };
    auto abs_roots = [](double y) {
        std::vector<std::array<double, 2>> roots;
        if (y > 0.0) {
            roots.push_back({y, 1.0});
            roots.push_back({-y, 1.0});
        }
        return roots;
    };
    m.directional_mixture =
        std::vector<DirectionalComponent>{{0, absolute, abs_roots}, {1, absolute, abs_roots}};
    return m;
}

LinkModel make_single_index_model(const std::string& link_name, double flip_prob) {
    LinkModel m;
    m.name = "single_index_" + link_name;
    m.p = 1;
    if (link_name == "abs") {
        m.link = [](const Vector& t, double) { return std::abs(t[0]); };
        m.y_support = YSupport::make_continuous(0.0, 40.0);
        m.slice_roots = [](double y, const Vector&) {
            std::vector<std::array<double, 2>> roots;
            if (y > 0.0) {
                roots.push_back({y, 1.0});
                roots.push_back({-y, 1.0});
            }
            return roots;
        };
    } else if (link_name == "square") {
        m.link = [](const Vector& t, double) { return t[0] * t[0]; };
        m.y_support = YSupport::make_continuous(0.0, 160.0, {0.0});
        m.slice_roots = [](double y, const Vector&) {
            std::vector<std::array<double, 2>> roots;
            if (y > 0.0) {
                const double r = std::sqrt(y);
                roots.push_back({r, 0.5 / r});
                roots.push_back({-r, 0.5 / r});
            }
            return roots;
        };
    } else if (link_name == "linear") {
        m.link = [](const Vector& t, double) { return t[0]; };
        m.y_support = YSupport::make_continuous(-13.0, 13.0);
        m.slice_roots = [](double y, const Vector&) {
            return std::vector<std::array<double, 2>>{{y, 1.0}};
        };
    } else if (link_name == "sign") {
        if (!(flip_prob >= 0.0 && flip_prob < 0.5))
            throw DomainError("single_index sign: flip probability must be in [0, 0.5)");
        m.link = [](const Vector& t, double eps) {
            const double s = t[0] >= 0.0 ? 1.0 : -1.0;
            return eps * s;
        };
        m.noise = NoiseSpec::discrete({{1.0, 1.0 - flip_prob}, {-1.0, flip_prob}});
        m.y_support = YSupport::make_discrete({-1.0, 1.0});
        const double q = flip_prob;
        m.cond_density = [q](double y, const Vector& t) {
            const double s = t[0] >= 0.0 ? 1.0 : -1.0;
            if (y * s > 0.0) return 1.0 - q;
            if (y * s < 0.0) return q;
            return 0.0;
        };
    } else {
        throw ConfigError("single_index: unknown link '" + link_name + "'");
    }
    return m;
}

LinkModel make_pure_noise_model() {
    LinkModel m;
    m.name = "pure_noise";
    m.p = 2;
    m.link = [](const Vector&, double eps) { return eps; };
    m.noise = NoiseSpec::sampler([](Rng& rng) { return rng.normal(); }, 0.0, 1.0);
    m.y_support = YSupport::make_continuous(-13.0, 13.0);
    const double inv_sqrt_2pi = 0.3989422804014326779399460599344;
    m.cond_density = [inv_sqrt_2pi](double y, const Vector&) {
        return inv_sqrt_2pi * std::exp(-0.5 * y * y);
    };
    return m;
}

Preprocessing make_preproc_constant(double value) {
    return {"constant", [value](double) { return value; }, value, std::abs(value)};
}

Preprocessing make_preproc_quadratic_capped(double cap) {
    return {"quadratic_capped", [cap](double y) { return std::min(y * y, cap); }, cap, cap};
}

Preprocessing make_preproc_trimming(double cut) {
    return {"trimming", [cut](double y) { return y * y <= cut ? y * y : 0.0; }, cut, cut};
}

Preprocessing make_preproc_subset(double threshold) {
    return {"subset", [threshold](double y) { return y * y > threshold ? 1.0 : 0.0; }, 1.0, 1.0};
}

Preprocessing make_preproc_pr_nonmixed_optimal(double floor) {
    // 1 - 1/y^2 truncated below; the supremum 1 is approached as |y| grows.
    return {"pr_nonmixed_optimal",
            [floor](double y) { return std::max(1.0 - 1.0 / (y * y), floor); }, 1.0,
            std::abs(floor)};
}

}  // namespace specmim
