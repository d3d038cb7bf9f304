#pragma once

#include <optional>

#include "specmim/model.hpp"

namespace specmim {

struct OracleOptions {
    int d_cap = 200;         // validation tool, not a production path
    double pole_tol = 1e-12;
    double jitter = 1e-9;    // symmetric perturbation when a has numerically tied eigenvalues
    std::uint64_t jitter_seed = 99;
};

// Corner decomposition of D = [[a, q'], [q, P]] for the exact finite-n
// spectral characterization.
class BlockDecomposition {
  public:
    // A is n x d; z the preprocessed responses. The leading p coordinates
    // carry the signal block.
    BlockDecomposition(const Matrix& a_design, const Vector& z, int p,
                       const OracleOptions& opt = {});

    int p() const { return p_; }
    int ambient() const { return d_; }
    const Matrix& corner() const { return a_; }
    const Matrix& coupling() const { return q_; }
    const Matrix& bulk() const { return bulk_; }
    const Vector& corner_eigenvalues() const { return a_evals_; }  // descending
    const Matrix& corner_eigenvectors() const { return a_evecs_; }
    double lambda1_bulk() const { return lambda1_bulk_; }
    bool jittered() const { return jittered_; }
    int near_pole_hits() const { return near_pole_hits_; }
    const OracleOptions& options() const { return opt_; }

    // L_k(mu) = lambda_k(P - q (a - mu I)^-1 q'), 1-based k.
    double eigenvalue_of_shifted_bulk(int k, double mu) const;
    // Continuous extension at mu in the spectrum of a, via the projection
    // orthogonal to q v_a and the pseudo-inverse of (a - mu I).
    double projected_extension(int k, int which_eig) const;

  private:
    int p_ = 0, d_ = 0;
    Matrix a_, q_, bulk_;
    Vector a_evals_;
    Matrix a_evecs_;
    double lambda1_bulk_ = 0.0;
    bool jittered_ = false;
    mutable int near_pole_hits_ = 0;
    OracleOptions opt_;

    friend double L_tilde(const BlockDecomposition&, int, double);
};

// The piecewise function whose unique fixed point on (lambda_i^a, inf) is the
// i-th eigenvalue of D (i is 1-based).
double L_tilde(const BlockDecomposition& dec, int i, double mu);

double eigenvalue_fixed_point(const BlockDecomposition& dec, int i);

struct RMatrixResult {
    Matrix r;
    Matrix dr;
    std::optional<Matrix> r_alt;   // rank-one-function route (debug)
    std::optional<Matrix> dr_alt;
};

// R(lambda) = a - q' (P - lambda I)^-1 q and its entrywise derivative for
// lambda above the bulk block. With debug_dual_route the entries are also
// recovered through the rank-one eigenvalue functions and returned alongside.
RMatrixResult R_matrix(const BlockDecomposition& dec, double lambda,
                       bool debug_dual_route = false);

// Top block of the i-th unit eigenvector of D, reconstructed from R alone.
Vector eigenvector_reconstruct(const BlockDecomposition& dec, int i);

}  // namespace specmim
