#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "specmim/bessel.hpp"
#include "specmim/expectation.hpp"
#include "specmim/model.hpp"
#include "specmim/theory.hpp"

namespace specmim {

struct DesignOptions {
    double outer_abs_tol = 1e-9;   // y-integral
    double inner_abs_tol = 1e-12;  // slice integral
    double inner_rel_tol = 1e-10;
    int inner_gh_nodes = 61;       // pointwise-density path
    int grid_points = 180;         // p = 2 angle scan
    int restarts = 50;             // p >= 3 sphere ascent
    std::uint64_t seed = 7;
    double density_floor = 1e-300;
    double objective_floor = 1e-12;  // below this the objective counts as zero
    double t_star_clip = -10.0;      // lower truncation of the returned T*
    double power_tol = 1e-10;
    int power_max_iter = 10000;
    int cone_grid_panels = 96;  // fixed composite grid for the cone operator

    DensityOptions density() const { return {inner_abs_tol, inner_rel_tol, inner_gh_nodes}; }
};

// The bracketed threshold integral at a fixed direction u on the unit sphere.
double objective(const LinkModel& model, const SignalSpec& signals, const Vector& u,
                 const DesignOptions& opt = {});

struct OptimalDesign {
    double delta_c = 0.0;
    Vector u_c;
    Preprocessing t_star;
    std::function<Preprocessing(double delta)> t_star_delta;
    std::vector<std::pair<double, double>> objective_profile;  // (angle or restart id, value)
};

// Maximizes the objective over the sphere, assembles T* and its
// delta-indexed variant, and reports delta_c = 1/max.
OptimalDesign design(const LinkModel& model, const SignalSpec& signals,
                     const DesignOptions& opt = {});

// Closed form for the product link: 1 - K0(|y|) / (y K0(|y|) + |y| K1(|y|)).
double t_star_product(double y);
Preprocessing make_preproc_prod_optimal(double floor = -10.0);

// Closed form for two-component mixed phase retrieval with mixing weight eta,
// signal correlation rho, at aspect ratio delta.
Preprocessing t_star_mixed_pr(double eta, double rho, double delta);

struct ConeThresholdResult {
    double value = 0.0;  // <F(M*), M*>_F at the normalized fixed point
    Matrix m_star;
    int iterations = 0;
};

// Power iteration on M -> E_y[E(y) M E(y)] over the Frobenius-normalized PSD
// cone; the fixed-point Rayleigh quotient reproduces 1/delta_c whenever the
// maximizer is rank one.
ConeThresholdResult operator_threshold(const LinkModel& model, const SignalSpec& signals,
                                       const DesignOptions& opt = {});

}  // namespace specmim
