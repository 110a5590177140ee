#pragma once

#include <complex>

#include "qtrack/errors.hpp"
#include "qtrack/rng.hpp"
#include "qtrack/units.hpp"

namespace qtrack {

using cplx = std::complex<double>;

// psi(x) ~ exp{-(m omega / 2 hbar) [alpha x^2 - 2 beta x]}. Normalization and
// global phase are not tracked; beta carries position units.
struct ScalarGaussianState {
    cplx alpha{1.0, 0.0};
    cplx beta{0.0, 0.0};

    static ScalarGaussianState ground() { return {}; }
};

// Gaussian measurement kernel of strength delta. delta = 1 means the device
// variance equals the ground-state variance; large delta is a sharp device.
struct MeasurementDevice {
    double delta = 1.0;

    static MeasurementDevice from_sigma2(double sigma2_device, const OscillatorParams& p);
    double sigma2_device(const OscillatorParams& p) const { return p.ground_state_variance() / delta; }
};

struct GaussianLaw {
    double mu = 0.0;
    double sigma2 = 1.0;
};

GaussianLaw measurement_distribution(const ScalarGaussianState& s, const OscillatorParams& p);

// Free harmonic evolution over time t.
ScalarGaussianState evolve_free(const ScalarGaussianState& s, double t, const OscillatorParams& p);

// Post-measurement update for outcome xbar.
ScalarGaussianState apply_measurement(const ScalarGaussianState& s, double xbar, const MeasurementDevice& d);

// Measure x_prev, then evolve for tau.
ScalarGaussianState step(const ScalarGaussianState& s, double x_prev, double tau, const MeasurementDevice& d,
                         const OscillatorParams& p);

template <NormalSource G>
double sample_measurement(const ScalarGaussianState& s, const OscillatorParams& p, G& rng) {
    const GaussianLaw law = measurement_distribution(s, p);
    return law.mu + std::sqrt(law.sigma2) * rng.next();
}

}  // namespace qtrack
