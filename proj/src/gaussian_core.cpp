#include "qtrack/gaussian_core.hpp"

#include <cmath>
#include <string>

namespace qtrack {

void OscillatorParams::validate() const {
    auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!ok(mass) || !ok(omega) || !ok(hbar))
        throw DomainError("oscillator mass, omega and hbar must be finite and positive");
    if (!ok(ground_state_variance())) throw DomainError("ground-state variance is not finite");
}

MeasurementDevice MeasurementDevice::from_sigma2(double sigma2_device, const OscillatorParams& p) {
    if (!(sigma2_device > 0.0) || !std::isfinite(sigma2_device))
        throw DomainError("device variance must be finite and positive");
    return {p.ground_state_variance() / sigma2_device};
}

GaussianLaw measurement_distribution(const ScalarGaussianState& s, const OscillatorParams& p) {
    const double ra = s.alpha.real();
    if (!(ra > 0.0))
        throw NonNormalizableState("Re(alpha) = " + std::to_string(ra) + " is not positive");
    return {s.beta.real() / ra, p.ground_state_variance() / ra};
}

ScalarGaussianState evolve_free(const ScalarGaussianState& s, double t, const OscillatorParams& p) {
    const double c = std::cos(p.omega * t);
    const double sn = std::sin(p.omega * t);
    const cplx i{0.0, 1.0};
    const cplx den = c + i * s.alpha * sn;
    return {(s.alpha * c + i * sn) / den, s.beta / den};
}

ScalarGaussianState apply_measurement(const ScalarGaussianState& s, double xbar, const MeasurementDevice& d) {
    return {s.alpha + d.delta, s.beta + d.delta * xbar};
}

ScalarGaussianState step(const ScalarGaussianState& s, double x_prev, double tau, const MeasurementDevice& d,
                         const OscillatorParams& p) {
    return evolve_free(apply_measurement(s, x_prev, d), tau, p);
}

}  // namespace qtrack
