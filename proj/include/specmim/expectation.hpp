#pragma once

#include <functional>
#include <memory>

#include "specmim/model.hpp"
#include "specmim/quadrature.hpp"

namespace specmim {

// Finite weighted discretization of the joint law of (s, z): the workhorse
// behind every resolvent-type expectation. Weights are positive and sum to 1;
// all z atoms sit at or below the declared essential supremum tau.
//
// Two representations coexist:
//  - pointwise: every atom carries an explicit s node (tensor or Monte Carlo);
//  - conditioned: atoms live on a response grid and carry the conditional
//    second moment E[s s' | atom] instead of a point; scalar moments and
//    quadratic-form moments are exact in s, so the ridge that the response
//    carves into s-space never has to be resolved by a tensor rule.
struct ZLaw {
    Matrix s;   // atoms x p (pointwise representation; empty when conditioned)
    Vector z;   // atoms
    Vector w;   // atoms, sums to 1
    double tau = 0.0;
    std::vector<Matrix> cond_outer;  // conditioned representation only

    std::int64_t size() const { return z.size(); }
    bool conditioned() const { return !cond_outer.empty(); }
};

// Push the Gaussian rule through the model: each node contributes
// z = T(q(w_tilde' s_node, eps_atom)) with weight gaussian x noise.
// Sampler noise requires a Monte Carlo rule.
ZLaw build_zlaw(const LinkModel& model, const SignalSpec& signals, const Preprocessing& preproc,
                const QuadratureRule& rule);

struct AdaptedLawOptions {
    int response_panels = 96;   // composite response grid on top of the graded split
    double grid_floor = 1e-12;  // grading floor toward declared singular points
    double moment_abs_tol = 1e-11;
    double moment_rel_tol = 1e-9;
    double mass_tol = 1e-6;  // accepted defect of the total mass before renormalizing
};

// Conditioned law over the response support, available when the model carries
// a slice or directional-mixture representation. Falls back to build_zlaw
// with the default rule otherwise.
ZLaw build_zlaw_adapted(const LinkModel& model, const SignalSpec& signals,
                        const Preprocessing& preproc, const AdaptedLawOptions& opt = {});

// Weighted sum over atoms of a pointwise law. Throws NumericalDomainError at
// a non-finite node and UnsupportedCombination on conditioned laws.
double expect(const ZLaw& law, const std::function<double(const Vector& s, double z)>& f);

// Matrix-valued version; the result is symmetrized so symmetric integrands
// come back with zero asymmetry residual.
Matrix expect_matrix(const ZLaw& law,
                     const std::function<Matrix(const Vector& s, double z)>& f);

// Integral (sum) of g over the declared response support, split at singular
// points for continuous supports.
double integrate_y(const LinkModel& model, const std::function<double(double)>& g,
                   const IntegrationOptions& opt = {});

struct DensityOptions {
    double inner_abs_tol = 1e-12;
    double inner_rel_tol = 1e-10;
    int inner_gh_nodes = 61;  // pointwise-density path
};

// Density-weighted functionals m_f(y) = E_s[p(y|s) f(s)], the building blocks
// of marginals, conditional moments, and the threshold objective. Dispatches
// on the model's conditional-law representation: an honest (y,t) density
// integrates over a Gaussian rule, a deterministic link integrates its slice
// analytically in the last coordinate and adaptively in the leading ones
// (p <= 2), and a directional mixture reduces to scalar Gaussian conditioning.
class DensityFunctionals {
  public:
    DensityFunctionals(const LinkModel& model, const SignalSpec& signals,
                       const DensityOptions& opt = {});

    double marginal(double y) const;
    double weighted(double y, const std::function<double(const Vector& s)>& f) const;
    // E_s[p(y|s) <s,u>^2]
    double weighted_proj2(double y, const Vector& u) const;
    // E_s[p(y|s) (s s' - I)]
    Matrix weighted_centered_outer(double y) const;
    // E_s[p(y|s) s s']
    Matrix weighted_outer(double y) const;

    const LinkModel& model() const { return model_; }
    const SignalSpec& signals() const { return signals_; }

  private:
    LinkModel model_;
    SignalSpec signals_;
    DensityOptions opt_;
    QuadratureRule inner_rule_;  // pointwise-density path only
    Matrix sigma_inv_;
    Matrix b_;  // maps t back to s: s = b_ * t
    double sigma_norm_ = 0.0;
    double head_halfwidth_ = 0.0;

    double slice_moment(double y, const std::function<double(const Vector& s)>& f) const;
    double directional_moment(double y, const std::function<double(const Vector& s)>& f) const;
    double pointwise_moment(double y, const std::function<double(const Vector& s)>& f) const;
};

}  // namespace specmim
