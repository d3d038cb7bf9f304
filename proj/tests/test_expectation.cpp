#include <doctest.h>

#include <cmath>

#include "specmim/design.hpp"
#include "specmim/expectation.hpp"

using namespace specmim;

namespace {

Preprocessing raw_square(double tau_bound) {
    return {"square_raw", [](double y) { return y * y; }, tau_bound, tau_bound};
}

Preprocessing identity_preproc(double tau_bound) {
    return {"identity_raw", [](double y) { return y; }, tau_bound, tau_bound};
}

}  // namespace

TEST_CASE("constant preprocessing gives a point mass at one") {
    LinkModel model = make_product_model();
    SignalSpec signals = make_signals_orthonormal(2);
    auto rule = QuadratureRule::gauss_hermite_tensor(2, 21);
    ZLaw law = build_zlaw(model, signals, make_preproc_constant(1.0), rule);
    CHECK(law.tau == 1.0);
    CHECK((law.z.array() == 1.0).all());
    CHECK(std::abs(law.w.sum() - 1.0) < 1e-10);
}

TEST_CASE("second moment of the product response") {
    LinkModel model = make_product_model();
    SignalSpec signals = make_signals_orthonormal(2);
    auto rule = QuadratureRule::gauss_hermite_tensor(2, 41);
    ZLaw law = build_zlaw(model, signals, raw_square(1e5), rule);
    const double mean_z = expect(law, [](const Vector&, double z) { return z; });
    // E[(s1 s2)^2] = E[s1^2] E[s2^2] = 1
    CHECK(mean_z == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mixed-retrieval weights split across noise atoms") {
    LinkModel model = make_mixed_pr_model(0.6);
    SignalSpec signals = make_signals_correlated(2, 0.3);
    auto rule = QuadratureRule::gauss_hermite_tensor(2, 21);
    ZLaw law = build_zlaw(model, signals, make_preproc_quadratic_capped(10.0), rule);
    CHECK(law.size() == rule.size() * 2);
    double first_weight = 0.0;
    for (std::int64_t i = 0; i < law.size(); i += 2) first_weight += law.w[i];
    CHECK(first_weight == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("sampler noise demands a monte carlo rule") {
    LinkModel model = make_pure_noise_model();
    SignalSpec signals = make_signals_orthonormal(2);
    auto gh = QuadratureRule::gauss_hermite_tensor(2, 11);
    CHECK_THROWS_AS(build_zlaw(model, signals, make_preproc_constant(1.0), gh),
                    UnsupportedCombination);
    auto mc = QuadratureRule::monte_carlo(2, 5000, 3);
    ZLaw law = build_zlaw(model, signals, make_preproc_quadratic_capped(10.0), mc);
    CHECK(law.size() == 5000);
}

TEST_CASE("expect handles scalars, matrices, and bad integrands") {
    LinkModel model = make_product_model();
    SignalSpec signals = make_signals_orthonormal(2);
    auto rule = QuadratureRule::gauss_hermite_tensor(2, 41);
    ZLaw law = build_zlaw(model, signals, identity_preproc(1e4), rule);

    CHECK(expect(law, [](const Vector&, double) { return 1.0; }) == doctest::Approx(1.0));

    Matrix cov = expect_matrix(law, [](const Vector& s, double) { return Matrix(s * s.transpose()); });
    CHECK((cov - Matrix::Identity(2, 2)).norm() < 1e-6);

    // E[s1 s2 * s s'] has entries E[s1^2 s2^2] = 1 off the diagonal, 0 on it
    Matrix weighted =
        expect_matrix(law, [](const Vector& s, double z) { return Matrix(z * s * s.transpose()); });
    CHECK(weighted(0, 0) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(weighted(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK((weighted - weighted.transpose()).norm() == 0.0);  // symmetrized exactly

    ZLaw constant = build_zlaw(model, signals, make_preproc_constant(1.0), rule);
    CHECK_THROWS_AS(expect(constant, [](const Vector&, double z) { return 1.0 / (z - 1.0); }),
                    NumericalDomainError);
}

TEST_CASE("marginal density of the product link integrates to one") {
    LinkModel model = make_product_model();
    auto g = [](double y) {
        return y == 0.0 ? 0.0 : bessel_k0(std::abs(y)) / 3.14159265358979323846;
    };
    IntegrationOptions opt;
    opt.abs_tol = 1e-9;
    CHECK(integrate_y(model, g, opt) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("discrete supports sum over atoms") {
    LinkModel model = make_single_index_model("sign", 0.1);
    const double total = integrate_y(model, [](double y) { return y > 0 ? 0.25 : 0.5; });
    CHECK(total == doctest::Approx(0.75));
}

TEST_CASE("monte carlo and tensor quadrature agree on resolvent moments") {
    LinkModel model = make_product_model();
    SignalSpec signals = make_signals_orthonormal(2);
    Preprocessing t_opt = make_preproc_prod_optimal();

    ZLaw gh = build_zlaw(model, signals, t_opt, QuadratureRule::gauss_hermite_tensor(2, 61));
    ZLaw mc = build_zlaw(model, signals, t_opt, QuadratureRule::monte_carlo(2, 1000000, 5));

    auto moment = [](const ZLaw& law) {
        return expect(law, [](const Vector&, double z) { return z / (1.5 - z); });
    };
    // standard error of the monte carlo estimate
    const double m_mc = moment(mc);
    double var = 0.0;
    for (std::int64_t i = 0; i < mc.size(); ++i) {
        const double v = mc.z[i] / (1.5 - mc.z[i]) - m_mc;
        var += mc.w[i] * v * v;
    }
    const double se = std::sqrt(var / mc.size());
    CHECK(std::abs(moment(gh) - m_mc) < 4.0 * se);
}

TEST_CASE("doubling tensor resolution moves bounded moments very little") {
    LinkModel model = make_product_model();
    SignalSpec signals = make_signals_orthonormal(2);
    Preprocessing t_opt = make_preproc_prod_optimal();
    auto moment = [&](int nodes) {
        ZLaw law = build_zlaw(model, signals, t_opt, QuadratureRule::gauss_hermite_tensor(2, nodes));
        return expect(law, [](const Vector&, double z) { return z / (1.5 - z); });
    };
    CHECK(std::abs(moment(61) - moment(122)) < 1e-4);
}
