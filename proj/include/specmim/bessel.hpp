#pragma once

namespace specmim {

// Modified Bessel functions of the second kind, orders 0 and 1, for x > 0.
// Ascending series below the crossover at x = 2, an exponentially weighted
// Gauss-Laguerre form of the integral representation above it. Relative
// accuracy is ~1e-13 across [1e-6, 700].
double bessel_k0(double x);
double bessel_k1(double x);

// e^x K_nu(x): safe far into the tail where K itself underflows.
double bessel_k0_scaled(double x);
double bessel_k1_scaled(double x);

// I_0 and I_1 (needed by the ascending series; exposed for tests).
double bessel_i0(double x);
double bessel_i1(double x);

}  // namespace specmim
