#include "specmim/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace specmim {

namespace {

// Top-k eigenpairs by Lanczos with full reorthogonalization on the matvec
// x -> (1/n) A' (Z (A x)). Returns false when the Ritz residuals fail to
// reach tol within the iteration budget.
bool lanczos_top_k(const std::function<void(const Vector&, Vector&)>& matvec, int dim, int k,
                   int max_iter, double tol, Rng& rng, Vector& eigenvalues, Matrix& eigenvectors) {
    const int m_max = std::min(max_iter, dim);
    Matrix basis(dim, m_max + 1);
    Vector alpha(m_max), beta(m_max);

    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.normal();
    v.normalize();
    basis.col(0) = v;

    Vector w(dim);
    int m = 0;
    bool converged = false;
    for (int j = 0; j < m_max; ++j) {
        matvec(basis.col(j), w);
        alpha[j] = basis.col(j).dot(w);
        w -= alpha[j] * basis.col(j);
        if (j > 0) w -= beta[j - 1] * basis.col(j - 1);
        // full reorthogonalization, twice for safety
        for (int pass = 0; pass < 2; ++pass)
            w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
        beta[j] = w.norm();
        m = j + 1;
        if (beta[j] < 1e-14) {
            converged = m >= k;  // invariant subspace found
            break;
        }
        basis.col(j + 1) = w / beta[j];

        if (m >= std::max(2 * k, 10) && (j % 5 == 4 || j == m_max - 1)) {
            Matrix tri = Matrix::Zero(m, m);
            for (int i = 0; i < m; ++i) {
                tri(i, i) = alpha[i];
                if (i + 1 < m) {
                    tri(i, i + 1) = beta[i];
                    tri(i + 1, i) = beta[i];
                }
            }
            Eigen::SelfAdjointEigenSolver<Matrix> es(tri);
            bool all_good = true;
            for (int t = 0; t < k; ++t) {
                const double theta = es.eigenvalues()[m - 1 - t];
                const double resid = std::abs(beta[j] * es.eigenvectors()(m - 1, m - 1 - t));
                if (resid > tol * std::max(1.0, std::abs(theta))) {
                    all_good = false;
                    break;
                }
            }
            if (all_good) {
                converged = true;
                break;
            }
        }
    }
    if (!converged || m < k) return false;

    Matrix tri = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        tri(i, i) = alpha[i];
        if (i + 1 < m) {
            tri(i, i + 1) = beta[i];
            tri(i + 1, i) = beta[i];
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(tri);
    eigenvalues.resize(k);
    eigenvectors.resize(dim, k);
    for (int t = 0; t < k; ++t) {
        eigenvalues[t] = es.eigenvalues()[m - 1 - t];
        eigenvectors.col(t) = basis.leftCols(m) * es.eigenvectors().col(m - 1 - t);
        eigenvectors.col(t).normalize();
    }
    return true;
}

void canonicalize_signs(Matrix& vectors) {
    for (int j = 0; j < vectors.cols(); ++j) {
        int arg_max = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&arg_max);
        if (vectors(arg_max, j) < 0.0) vectors.col(j) = -vectors.col(j);
    }
}

Matrix random_orthonormal_frame(int d, int p, Rng& rng) {
    Matrix g(d, p);
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < d; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(d, p);
    return q;
}

}  // namespace

double weak_recovery_stat(const Matrix& eigenvectors, const Matrix& w_star) {
    const Matrix gram = w_star.transpose() * w_star;
    Eigen::FullPivLU<Matrix> lu(gram);
    if (lu.rank() < gram.rows())
        throw DegenerateSignals("weak_recovery_stat: singular signal Gram matrix");
    const Matrix proj = w_star.transpose() * eigenvectors;  // p x p
    const Matrix num = proj * proj.transpose();
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(num, gram);
    const double mu = ges.eigenvalues().maxCoeff();
    return std::sqrt(std::max(mu, 0.0));
}

SpectralResult run_trial(const ExperimentConfig& cfg, Rng& rng) {
    const int n = cfg.n, d = cfg.d, p = cfg.model.p;
    if (n < 1 || d < p) throw InvalidDimension("run_trial: need n >= 1 and d >= p");

    // Ambient signal frame; a random embedding consumes its draws before the
    // design matrix so each trial stays reproducible from its substream.
    Matrix w_star = cfg.canonical_embedding
                        ? cfg.signals.embed_canonical(d)
                        : Matrix(random_orthonormal_frame(d, p, rng) * cfg.signals.w_tilde());

    Matrix a_mat(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) a_mat(i, j) = rng.normal();

    Vector z(n);
    {
        const Matrix x = a_mat * w_star;  // rows are W*' a_i
        Vector t(p);
        for (int i = 0; i < n; ++i) {
            t = x.row(i);
            const double eps = cfg.model.noise.sample(rng);
            z[i] = cfg.preproc.eval(cfg.model.link(t, eps));
        }
    }

    SpectralResult result;
    const bool want_dense = cfg.solver == Eigensolver::dense ||
                            (cfg.solver == Eigensolver::automatic && d <= cfg.dense_cutoff);

    bool have_pairs = false;
    if (!want_dense) {
        auto matvec = [&](const Vector& x, Vector& out) {
            Vector ax = a_mat * x;
            ax.array() *= z.array();
            out.noalias() = a_mat.transpose() * ax;
            out /= static_cast<double>(n);
        };
        have_pairs = lanczos_top_k(matvec, d, p, cfg.lanczos_max_iter, cfg.lanczos_tol, rng,
                                   result.eigenvalues, result.eigenvectors);
        result.used_lanczos = have_pairs;
        if (!have_pairs && d > 4000)
            throw SolverFailure("run_trial: lanczos did not converge and d is too large for dense");
    }
    if (!have_pairs) {
        Matrix dmat = a_mat.transpose() * (z.asDiagonal() * a_mat) / static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Matrix> es(dmat);
        result.eigenvalues.resize(p);
        result.eigenvectors.resize(d, p);
        for (int t = 0; t < p; ++t) {
            result.eigenvalues[t] = es.eigenvalues()[d - 1 - t];
            result.eigenvectors.col(t) = es.eigenvectors().col(d - 1 - t);
        }
    }
    canonicalize_signs(result.eigenvectors);

    result.overlap_signal.resize(p, p);
    result.overlap_basis.resize(p, p);
    // Basis overlaps live in the frame spanned by the embedded signals: for a
    // random embedding that frame is the Q factor of w_star.
    Matrix frame;
    if (cfg.canonical_embedding) {
        frame = Matrix::Zero(d, p);
        frame.topLeftCorner(p, p).setIdentity();
    } else {
        Eigen::HouseholderQR<Matrix> qr(w_star);
        frame = qr.householderQ() * Matrix::Identity(d, p);
    }
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            result.overlap_signal(i, j) = std::abs(result.eigenvectors.col(i).dot(w_star.col(j)));
            result.overlap_basis(i, j) = std::abs(result.eigenvectors.col(i).dot(frame.col(j)));
        }
    result.subspace_score = weak_recovery_stat(result.eigenvectors, w_star);
    return result;
}

std::vector<AggregateRow> run_experiment(const ExperimentConfig& cfg,
                                         const std::vector<double>& deltas) {
    if (deltas.empty()) throw ConfigError("run_experiment: empty delta grid");
    if (cfg.trials < 1) throw ConfigError("run_experiment: trials must be at least 1");
    const int p = cfg.model.p;

    std::vector<AggregateRow> rows;
    for (std::size_t di = 0; di < deltas.size(); ++di) {
        const double delta = deltas[di];
        ExperimentConfig local = cfg;
        local.n = std::max(1, static_cast<int>(std::llround(delta * cfg.d)));

        std::vector<SpectralResult> results(cfg.trials);
        auto worker = [&](int first, int step) {
            for (int t = first; t < cfg.trials; t += step) {
                Rng stream = Rng::substream(cfg.seed, (static_cast<std::uint64_t>(di) << 32) | t);
                results[t] = run_trial(local, stream);
            }
        };
        const int n_threads = std::max(1, std::min(cfg.threads, cfg.trials));
        if (n_threads == 1) {
            worker(0, 1);
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t, n_threads);
            for (auto& th : pool) th.join();
        }

        auto emit = [&](const std::string& stat, int i, int j, auto getter) {
            double mean = 0.0;
            for (const auto& r : results) mean += getter(r);
            mean /= cfg.trials;
            double var = 0.0;
            for (const auto& r : results) {
                const double dev = getter(r) - mean;
                var += dev * dev;
            }
            const double sd = cfg.trials > 1 ? std::sqrt(var / (cfg.trials - 1)) : 0.0;
            rows.push_back({delta, local.n, cfg.d, stat, i, j, mean, sd, cfg.trials});
        };

        for (int i = 0; i < p; ++i) {
            emit("eigenvalue", i + 1, 0, [i](const SpectralResult& r) { return r.eigenvalues[i]; });
            for (int j = 0; j < p; ++j) {
                emit("overlap_signal", i + 1, j + 1,
                     [i, j](const SpectralResult& r) { return r.overlap_signal(i, j); });
                emit("overlap_basis", i + 1, j + 1,
                     [i, j](const SpectralResult& r) { return r.overlap_basis(i, j); });
            }
        }
        emit("subspace_score", 0, 0, [](const SpectralResult& r) { return r.subspace_score; });
    }
    return rows;
}

}  // namespace specmim
