#include "qtrack/special.hpp"

#include <array>
#include <cmath>

#include "qtrack/errors.hpp"

namespace qtrack {

namespace {

// B_2 .. B_12
constexpr std::array<double, 6> kBernoulli = {
    1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0,
};

constexpr double kAsymptoticThreshold = 10.0;

// psi'(y) ~ 1/y + 1/(2y^2) + sum_k B_2k / y^(2k+1), valid for y >= 10.
double trigamma_asymptotic(double y) {
    const double inv = 1.0 / y;
    const double inv2 = inv * inv;
    double series = 0.0;
    double pw = inv2 * inv;  // y^-3
    for (double b : kBernoulli) {
        series += b * pw;
        pw *= inv2;
    }
    return inv + 0.5 * inv2 + series;
}

}  // namespace

double trigamma(double z) {
    if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("trigamma requires a finite z > 0");
    // psi'(z) = psi'(z + n) + sum_{k<n} 1/(z+k)^2; smallest terms added first.
    int shift = 0;
    while (z + shift < kAsymptoticThreshold) ++shift;
    double acc = trigamma_asymptotic(z + shift);
    for (int k = shift - 1; k >= 0; --k) {
        const double y = z + k;
        acc += 1.0 / (y * y);
    }
    return acc;
}

}  // namespace qtrack
