#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "specmim/errors.hpp"
#include "specmim/quadrature.hpp"
#include "specmim/rng.hpp"

namespace specmim {

struct NoiseAtom {
    double value;
    double prob;
};

// Noise is either an explicit finite distribution (enumerable under tensor
// quadrature) or an opaque seeded sampler with declared first two moments.
class NoiseSpec {
  public:
    static NoiseSpec none();
    static NoiseSpec discrete(std::vector<NoiseAtom> atoms);
    static NoiseSpec sampler(std::function<double(Rng&)> draw, double mean, double variance);

    bool is_discrete() const { return discrete_; }
    const std::vector<NoiseAtom>& atoms() const { return atoms_; }
    double sample(Rng& rng) const;
    double mean() const { return mean_; }
    double variance() const { return variance_; }

  private:
    NoiseSpec() = default;
    bool discrete_ = true;
    std::vector<NoiseAtom> atoms_;
    std::function<double(Rng&)> draw_;
    double mean_ = 0.0;
    double variance_ = 0.0;
};

struct YSupport {
    enum class Kind { discrete, continuous };
    Kind kind = Kind::continuous;
    std::vector<double> atoms;            // discrete
    double lo = 0.0, hi = 0.0;            // continuous integration bounds
    std::vector<double> singular_points;  // continuous: integrators split panels here

    static YSupport make_discrete(std::vector<double> atoms);
    static YSupport make_continuous(double lo, double hi, std::vector<double> singular = {});
};

// Signal geometry: the rotated upper-triangular block w_tilde (p x p, unit
// columns, positive diagonal) and its Gram matrix sigma. An explicit ambient
// d x p matrix is kept when the spec was built from one.
class SignalSpec {
  public:
    SignalSpec(Matrix w_tilde, std::optional<Matrix> w_star = std::nullopt);

    int p() const { return static_cast<int>(w_tilde_.cols()); }
    const Matrix& w_tilde() const { return w_tilde_; }
    const Matrix& sigma() const { return sigma_; }
    const std::optional<Matrix>& w_star() const { return w_star_; }

    // d x p signal matrix with the rotated block on the leading coordinates.
    Matrix embed_canonical(int d) const;

  private:
    Matrix w_tilde_;
    Matrix sigma_;
    std::optional<Matrix> w_star_;
};

SignalSpec make_signals_orthonormal(int p);
SignalSpec make_signals_correlated(int p, double rho);
SignalSpec make_signals_random_iid_gaussian(int p, std::uint64_t seed);

// Unique upper-triangular reparametrization with positive diagonal such that
// w_tilde' * w_tilde equals the Gram matrix of W.
SignalSpec reparametrize(const Matrix& W);

// Bounded scalar preprocessing with its declared essential supremum tau.
struct Preprocessing {
    std::string name;
    std::function<double(double)> eval;
    double tau = 0.0;
    double bound = 0.0;
};

// For mixture links where each noise atom reads out a single coordinate of t
// through a scalar map, y = scalar_link(t_coord); conditional moments of s
// given that coordinate are then available in closed form. `roots` inverts
// the scalar map: all t with scalar_link(t) = y, paired with 1/|d link/dt|.
struct DirectionalComponent {
    int coord = 0;
    std::function<double(double)> scalar_link;
    std::function<std::vector<std::array<double, 2>>(double y)> roots;
};

// The link, its noise, the support of the response, and (optionally) one of
// three conditional-law representations used by the density machinery:
//  - cond_density(y, t): a genuine density/mass of y given t = w_tilde' s
//    (available when noise smooths y, or when y is discrete);
//  - slice_roots(y, t_head): for deterministic continuous links, the roots of
//    q(t_head, t_last) = y in the last coordinate together with 1/|dq/dt_last|,
//    i.e. the Dirac conditional integrated out analytically;
//  - directional_mixture: per noise atom, a scalar readout of one coordinate.
class LinkModel {
  public:
    std::string name;
    int p = 1;
    std::function<double(const Vector& t, double eps)> link;
    NoiseSpec noise = NoiseSpec::none();
    YSupport y_support;
    std::optional<int> permutation_invariant_coords;

    std::function<double(double y, const Vector& t)> cond_density;
    std::function<std::vector<std::array<double, 2>>(double y, const Vector& t_head)> slice_roots;
    // integrable singularities of the slice integrand in the leading coordinate
    std::function<std::vector<double>(double y)> slice_head_singularities;
    std::optional<std::vector<DirectionalComponent>> directional_mixture;

    bool has_density() const { return static_cast<bool>(cond_density) || static_cast<bool>(slice_roots); }
};

// One draw of (s, y) under the joint law: s ~ N(0, I_p), y = q(w_tilde' s, eps).
std::pair<Vector, double> sample_pair(const LinkModel& model, const SignalSpec& signals, Rng& rng);

// Built-in models.
LinkModel make_product_model();
LinkModel make_mixed_pr_model(double eta);
LinkModel make_single_index_model(const std::string& link_name, double flip_prob = 0.1);
LinkModel make_pure_noise_model();

// Built-in preprocessings that do not need the design machinery.
Preprocessing make_preproc_constant(double value);
Preprocessing make_preproc_quadratic_capped(double cap = 10.0);      // min{y^2, cap}
Preprocessing make_preproc_trimming(double cut = 7.0);               // y^2 1{y^2 <= cut}
Preprocessing make_preproc_subset(double threshold = 2.0);           // 1{y^2 > threshold}
Preprocessing make_preproc_pr_nonmixed_optimal(double floor = -10.0);  // 1 - 1/y^2, truncated below

}  // namespace specmim
