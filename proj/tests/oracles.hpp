#pragma once

// Reference values computed independently of the library code paths.

#include <cmath>
#include <numbers>

namespace oracle {

/// Dawson integral D(x) = e^{-x^2} \int_0^x e^{t^2} dt from its Maclaurin
/// series (|x| <= 4 is plenty for the tests).
inline double dawson(double x) {
    // D(x) = sum_n (-1)^n 2^n x^{2n+1} / (2n+1)!!
    double term = x, sum = x;
    for (int n = 1; n < 400; ++n) {
        term *= -2.0 * x * x / (2.0 * n + 1.0);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

/// (1/pi) PV \int e^{-p^2}/(p-u) dp = -(2/sqrt(pi)) D(u).
inline double hilbert_gaussian(double u) { return -2.0 / std::sqrt(std::numbers::pi) * dawson(u); }

/// (1/pi) PV \int 1/(1+p^2) /(p-u) dp by residues.
inline double hilbert_lorentzian(double u) { return -u / (1.0 + u * u); }

}  // namespace oracle
