#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "specmim/model.hpp"

using namespace specmim;

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double ks = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        ks = std::max(ks, std::abs(fa - fb));
    }
    return ks;
}

Matrix random_orthogonal(int n, Rng& rng) {
    Matrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ();
}

}  // namespace

TEST_CASE("orthonormal signals are the identity block") {
    SignalSpec s = make_signals_orthonormal(2);
    CHECK((s.w_tilde() - Matrix::Identity(2, 2)).norm() == 0.0);
    CHECK((s.sigma() - Matrix::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("correlated signals carry the requested covariance") {
    SignalSpec s = make_signals_correlated(2, 0.3);
    CHECK(s.sigma()(0, 1) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(s.sigma()(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.w_tilde()(0, 1) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(s.w_tilde()(1, 1) == doctest::Approx(std::sqrt(0.91)).epsilon(1e-14));
    CHECK(s.w_tilde()(1, 0) == 0.0);
}

TEST_CASE("random signals are reproducible and unit-normalized") {
    SignalSpec a = make_signals_random_iid_gaussian(3, 7);
    SignalSpec b = make_signals_random_iid_gaussian(3, 7);
    CHECK((a.w_tilde() - b.w_tilde()).norm() == 0.0);
    for (int j = 0; j < 3; ++j) CHECK(a.sigma()(j, j) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((a.w_tilde().transpose() * a.w_tilde() - a.sigma()).norm() < 1e-12);
}

TEST_CASE("signal construction rejects bad input") {
    CHECK_THROWS_AS(make_signals_correlated(2, 1.0), DegenerateSignals);
    CHECK_THROWS_AS(make_signals_correlated(2, -1.2), DegenerateSignals);
    CHECK_THROWS_AS(make_signals_orthonormal(0), InvalidDimension);
}

TEST_CASE("reparametrize reproduces the rotated block") {
    Matrix w = Matrix::Zero(5, 2);
    w(0, 0) = 1.0;
    w(0, 1) = 0.3;
    w(1, 1) = std::sqrt(0.91);
    SignalSpec s = reparametrize(w);
    CHECK(s.w_tilde()(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.w_tilde()(0, 1) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(s.w_tilde()(1, 1) == doctest::Approx(std::sqrt(0.91)).epsilon(1e-14));
    CHECK(s.w_star().has_value());

    SUBCASE("orthonormal columns give the identity") {
        Matrix q = Matrix::Zero(6, 3);
        q(0, 0) = q(2, 1) = q(4, 2) = 1.0;
        CHECK((reparametrize(q).w_tilde() - Matrix::Identity(3, 3)).norm() < 1e-14);
    }
    SUBCASE("left rotations leave the Gram matrix alone") {
        Rng rng(5);
        Matrix q = random_orthogonal(5, rng);
        SignalSpec rotated = reparametrize(q * w);
        CHECK((rotated.w_tilde() - s.w_tilde()).norm() < 1e-12);
    }
    SUBCASE("rank-deficient input is rejected") {
        Matrix bad(4, 2);
        bad.setZero();
        bad(0, 0) = 1.0;
        bad(0, 1) = 1.0;
        CHECK_THROWS_AS(reparametrize(bad), DegenerateSignals);
    }
}

TEST_CASE("built-in links evaluate as stated") {
    LinkModel prod = make_product_model();
    Vector t(2);
    t << 1.0, 2.0;
    CHECK(prod.link(t, 0.0) == 2.0);

    LinkModel mpr = make_mixed_pr_model(0.6);
    Vector t2(2);
    t2 << -3.0, 1.0;
    CHECK(mpr.link(t2, 1.0) == 3.0);
    CHECK(mpr.link(t2, 2.0) == 1.0);

    CHECK(mpr.noise.atoms()[0].prob == doctest::Approx(0.6));
    CHECK_THROWS_AS(make_mixed_pr_model(0.0), DomainError);
}

TEST_CASE("noise atoms must form a distribution") {
    CHECK_THROWS_AS(NoiseSpec::discrete({{0.0, 0.5}, {1.0, 0.6}}), DomainError);
    NoiseSpec ok = NoiseSpec::discrete({{1.0, 0.25}, {-1.0, 0.75}});
    CHECK(ok.mean() == doctest::Approx(-0.5));
    CHECK(ok.variance() == doctest::Approx(0.75));
}

TEST_CASE("product responses have zero mean at monte-carlo accuracy") {
    LinkModel model = make_product_model();
    SignalSpec signals = make_signals_orthonormal(2);
    Rng rng(321);
    const int n = 1000000;
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += sample_pair(model, signals, rng).second;
    mean /= n;
    // Var(s1 s2) = 1, so a 3 sigma band is 3/sqrt(n)
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("low-dimensional and ambient sampling produce the same response law") {
    LinkModel model = make_product_model();
    SignalSpec signals = make_signals_correlated(2, 0.3);
    const int n = 100000, d = 120;

    std::vector<double> y_low(n);
    Rng rng(17);
    for (int i = 0; i < n; ++i) y_low[i] = sample_pair(model, signals, rng).second;

    // ambient draw: y = q(W*' a) with W* an embedded frame
    std::vector<double> y_amb(n);
    Rng rng2(18);
    Matrix q = random_orthogonal(d, rng2).leftCols(2);
    Matrix w_star = q * signals.w_tilde();
    Vector a(d), t(2);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) a[j] = rng2.normal();
        t = w_star.transpose() * a;
        y_amb[i] = model.link(t, 0.0);
    }
    // 1% two-sample KS critical value: 1.63 sqrt(2/n)
    CHECK(ks_statistic(y_low, y_amb) < 1.63 * std::sqrt(2.0 / n));
}

TEST_CASE("discrete conditional mass matches empirical frequencies") {
    LinkModel model = make_single_index_model("sign", 0.1);
    SignalSpec signals = make_signals_orthonormal(1);
    Rng rng(99);
    const int n = 200000;
    // bin t = s by sign, count y = +1
    int count_pos_t = 0, count_pos_t_pos_y = 0;
    for (int i = 0; i < n; ++i) {
        auto [s, y] = sample_pair(model, signals, rng);
        if (s[0] >= 0.0) {
            ++count_pos_t;
            if (y > 0.0) ++count_pos_t_pos_y;
        }
    }
    const double freq = static_cast<double>(count_pos_t_pos_y) / count_pos_t;
    Vector t(1);
    t << 0.7;
    const double expected = model.cond_density(1.0, t);
    const double se = std::sqrt(expected * (1.0 - expected) / count_pos_t);
    CHECK(std::abs(freq - expected) < 3.0 * se);

    SUBCASE("mass sums to one on a t grid") {
        for (double tv : {-2.0, -0.5, 0.1, 1.7}) {
            Vector tt(1);
            tt << tv;
            double total = 0.0;
            for (double atom : model.y_support.atoms) total += model.cond_density(atom, tt);
            CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("permutation invariance of the product link") {
    LinkModel model = make_product_model();
    REQUIRE(model.permutation_invariant_coords.has_value());
    CHECK(*model.permutation_invariant_coords == 2);
    Rng rng(3);
    for (int trial = 0; trial < 64; ++trial) {
        Vector t(2);
        t << rng.normal(), rng.normal();
        Vector swapped(2);
        swapped << t[1], t[0];
        CHECK(model.link(t, 0.0) == model.link(swapped, 0.0));
    }
}

TEST_CASE("preprocessing samples respect the declared bound and tau") {
    LinkModel model = make_product_model();
    SignalSpec signals = make_signals_orthonormal(2);
    for (const Preprocessing& pre :
         {make_preproc_quadratic_capped(10.0), make_preproc_subset(2.0),
          make_preproc_trimming(7.0), make_preproc_pr_nonmixed_optimal(-10.0)}) {
        CAPTURE(pre.name);
        Rng rng(7);
        const int n = 100000;
        double max_z = -1e300;
        int nonzero = 0;
        for (int i = 0; i < n; ++i) {
            const double z = pre.eval(sample_pair(model, signals, rng).second);
            CHECK(std::abs(z) <= pre.bound + 1e-12);
            CHECK(z <= pre.tau + 1e-9);
            max_z = std::max(max_z, z);
            if (z != 0.0) ++nonzero;
        }
        CHECK(nonzero > 0);
        // the capped and indicator forms attain their supremum on a large
        // sample; the reciprocal form only approaches it (soft by design)
        if (pre.name == "quadratic_capped" || pre.name == "subset")
            CHECK(max_z == doctest::Approx(pre.tau).epsilon(1e-9));
    }
}
