#include "specmim/bessel.hpp"

#include <cmath>

#include "specmim/errors.hpp"
#include "specmim/quadrature.hpp"

namespace specmim {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209008240;

// K0(x) = e^-x * int_0^inf e^-v v^-1/2 (v+2x)^-1/2 dv
// K1(x) = e^-x * int_0^inf e^-v v^-1/2 (1+v/x) (v+2x)^-1/2 dv
// The v^-1/2 e^-v weight is handled exactly by a generalized Gauss-Laguerre
// rule with alpha = -1/2; the remaining factor is analytic for x >= 2.
const GaussLaguerre1d& laguerre_half() {
    static const GaussLaguerre1d rule = gauss_laguerre(120, -0.5);
    return rule;
}

double k0_scaled_large(double x) {
    const auto& rule = laguerre_half();
    double sum = 0.0;
    for (int i = 0; i < rule.nodes.size(); ++i)
        sum += rule.weights[i] / std::sqrt(rule.nodes[i] + 2.0 * x);
    return sum;
}

double k1_scaled_large(double x) {
    const auto& rule = laguerre_half();
    double sum = 0.0;
    for (int i = 0; i < rule.nodes.size(); ++i)
        sum += rule.weights[i] * (1.0 + rule.nodes[i] / x) / std::sqrt(rule.nodes[i] + 2.0 * x);
    return sum;
}

double k0_series(double x) {
    const double q = 0.25 * x * x;
    const double lead = -(std::log(0.5 * x) + kEulerGamma);
    double term = 1.0;     // q^k / (k!)^2
    double harmonic = 0.0; // H_k
    double i0 = 1.0;
    double corr = 0.0;
    for (int k = 1; k <= 40; ++k) {
        term *= q / (static_cast<double>(k) * k);
        harmonic += 1.0 / k;
        i0 += term;
        corr += term * harmonic;
        if (term < 1e-19) break;
    }
    return lead * i0 + corr;
}

double k1_series(double x) {
    const double q = 0.25 * x * x;
    const double lg = std::log(0.5 * x);
    // K1(x) = 1/x + log(x/2) I1(x) - (x/4) sum_k [psi(k+1)+psi(k+2)] q^k / (k! (k+1)!)
    double term = 1.0;  // q^k / (k! (k+1)!)
    double harmonic = 0.0;
    double i1_core = 1.0;   // sum q^k/(k!(k+1)!)  -> I1 = (x/2) * i1_core
    double psi_sum = -2.0 * kEulerGamma + 1.0;  // psi(1)+psi(2)
    double corr = psi_sum;
    for (int k = 1; k <= 40; ++k) {
        term *= q / (static_cast<double>(k) * (k + 1));
        harmonic += 1.0 / k;
        psi_sum = -2.0 * kEulerGamma + 2.0 * harmonic + 1.0 / (k + 1.0);
        i1_core += term;
        corr += term * psi_sum;
        if (term < 1e-19) break;
    }
    return 1.0 / x + lg * (0.5 * x) * i1_core - 0.25 * x * corr;
}

void check_domain(double x) {
    if (!(x > 0.0)) throw DomainError("bessel_k: argument must be positive");
}

}  // namespace

double bessel_i0(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 60; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-19 * sum) break;
    }
    return sum;
}

double bessel_i1(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 60; ++k) {
        term *= q / (static_cast<double>(k) * (k + 1));
        sum += term;
        if (term < 1e-19 * sum) break;
    }
    return 0.5 * x * sum;
}

double bessel_k0(double x) {
    check_domain(x);
    if (x <= 2.0) return k0_series(x);
    return std::exp(-x) * k0_scaled_large(x);
}

double bessel_k1(double x) {
    check_domain(x);
    if (x <= 2.0) return k1_series(x);
    return std::exp(-x) * k1_scaled_large(x);
}

double bessel_k0_scaled(double x) {
    check_domain(x);
    if (x <= 2.0) return std::exp(x) * k0_series(x);
    return k0_scaled_large(x);
}

double bessel_k1_scaled(double x) {
    check_domain(x);
    if (x <= 2.0) return std::exp(x) * k1_series(x);
    return k1_scaled_large(x);
}

}  // namespace specmim
