#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specmim/model.hpp"

namespace specmim {

enum class Eigensolver { dense, lanczos, automatic };

struct ExperimentConfig {
    int n = 0;
    int d = 0;
    LinkModel model;
    SignalSpec signals = make_signals_orthonormal(1);
    Preprocessing preproc;
    int trials = 1;
    std::uint64_t seed = 0;
    Eigensolver solver = Eigensolver::automatic;
    int dense_cutoff = 800;
    int lanczos_max_iter = 400;
    double lanczos_tol = 1e-10;
    // Canonical embedding puts the rotated signal block on the leading
    // coordinates; a random embedding draws an orthonormal frame instead.
    bool canonical_embedding = true;
    int threads = 1;
};

struct SpectralResult {
    Vector eigenvalues;     // top p, descending
    Matrix eigenvectors;    // d x p, orthonormal, sign-canonicalized
    Matrix overlap_signal;  // |<v_i, w_j*>|
    Matrix overlap_basis;   // |<v_i, e_l>| in the rotated parametrization
    double subspace_score = 0.0;
    bool used_lanczos = false;
};

SpectralResult run_trial(const ExperimentConfig& cfg, Rng& rng);

// max over unit v of ||V' W* v|| / ||W* v||, via the p x p generalized
// eigenproblem (W*' V V' W*) x = mu (W*' W*) x.
double weak_recovery_stat(const Matrix& eigenvectors, const Matrix& w_star);

struct AggregateRow {
    double delta = 0.0;
    int n = 0, d = 0;
    std::string stat;
    int i = 0, j = 0;
    double mean = 0.0;
    double stddev = 0.0;
    int trials = 0;
};

// Runs `trials` independent substreams of run_trial for each delta in the
// grid (n = round(delta * d)) and aggregates with a fixed-order reduction.
std::vector<AggregateRow> run_experiment(const ExperimentConfig& cfg,
                                         const std::vector<double>& deltas);

}  // namespace specmim
