#include <doctest.h>

#include <cmath>

#include "specmim/quadrature.hpp"

using namespace specmim;

namespace {

// Closed-form standard Gaussian moments E[x^k].
double gaussian_moment(int k) {
    if (k % 2) return 0.0;
    double m = 1.0;
    for (int j = k - 1; j > 1; j -= 2) m *= j;
    return m;
}

}  // namespace

TEST_CASE("gauss-hermite weights are a probability distribution") {
    for (int n : {1, 5, 41, 61}) {
        auto rule = gauss_hermite(n);
        CHECK(std::abs(rule.weights.sum() - 1.0) < 1e-10);
    }
}

TEST_CASE("gauss-hermite integrates low-degree monomials exactly") {
    auto rule = gauss_hermite(7);
    for (int k = 0; k <= 6; ++k) {
        double acc = 0.0;
        for (int i = 0; i < rule.nodes.size(); ++i)
            acc += rule.weights[i] * std::pow(rule.nodes[i], k);
        CHECK(std::abs(acc - gaussian_moment(k)) < 1e-10);
    }
}

TEST_CASE("tensor rule matches product moments") {
    auto rule = QuadratureRule::gauss_hermite_tensor(2, 9);
    CHECK(std::abs(rule.weights.sum() - 1.0) < 1e-10);
    double acc = 0.0;
    for (std::int64_t i = 0; i < rule.size(); ++i) {
        const double x = rule.points(i, 0), y = rule.points(i, 1);
        acc += rule.weights[i] * x * x * y * y * y * y;  // E[x^2] E[y^4] = 3
    }
    CHECK(std::abs(acc - 3.0) < 1e-10);
}

TEST_CASE("monte carlo rule reproduces moments to sampling accuracy") {
    auto rule = QuadratureRule::monte_carlo(2, 200000, 11);
    CHECK(std::abs(rule.weights.sum() - 1.0) < 1e-10);
    double mean = 0.0, second = 0.0;
    for (std::int64_t i = 0; i < rule.size(); ++i) {
        mean += rule.weights[i] * rule.points(i, 0);
        second += rule.weights[i] * rule.points(i, 0) * rule.points(i, 0);
    }
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(second - 1.0) < 0.02);
}

TEST_CASE("adaptive integrator handles smooth and log-singular integrands") {
    auto res = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, 3.141592653589793);
    CHECK(std::abs(res.value - 2.0) < 1e-12);

    // integral of -log|x| over [-1, 1] is 2
    IntegrationOptions opt;
    opt.abs_tol = 1e-10;
    auto res2 = integrate_adaptive([](double x) { return x == 0.0 ? 0.0 : -std::log(std::abs(x)); },
                                   -1.0, 1.0, {0.0}, opt);
    CHECK(std::abs(res2.value - 2.0) < 1e-8);
}

TEST_CASE("doubling the resolution leaves converged expectations in place") {
    auto coarse = gauss_hermite(31);
    auto fine = gauss_hermite(62);
    auto apply = [](const GaussHermite1d& rule, auto f) {
        double acc = 0.0;
        for (int i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(rule.nodes[i]);
        return acc;
    };
    auto entire = [](double x) { return std::cos(x); };  // E[cos X] = exp(-1/2)
    CHECK(std::abs(apply(coarse, entire) - std::exp(-0.5)) < 1e-14);
    CHECK(std::abs(apply(coarse, entire) - apply(fine, entire)) < 1e-14);
    auto bounded = [](double x) { return std::tanh(x * x); };  // poles off the axis
    CHECK(std::abs(apply(coarse, bounded) - apply(fine, bounded)) < 1e-3);
}

TEST_CASE("generalized laguerre rule recovers gamma integrals") {
    // integral_0^inf x^{-1/2} e^{-x} x dx = Gamma(3/2) = sqrt(pi)/2
    auto rule = gauss_laguerre(40, -0.5);
    double acc = 0.0;
    for (int i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * rule.nodes[i];
    CHECK(std::abs(acc - 0.5 * std::sqrt(3.141592653589793)) < 1e-12);
}
