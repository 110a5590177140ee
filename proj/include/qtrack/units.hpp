#pragma once

#include <cmath>

namespace qtrack {

enum class Units { SI, natural };

// CODATA 2018 reduced Planck constant, J s.
inline constexpr double kHbarSI = 1.054571817e-34;

// Mass, angular frequency and hbar of the measured oscillator.
//
// The natural system is m = 1, omega = 1, hbar = 2: positions are measured
// in ground-state standard deviations sqrt(hbar / (2 m omega)) and times in
// 1/omega, so the ground-state variance is exactly 1.
struct OscillatorParams {
    double mass = 1.0;
    double omega = 1.0;
    double hbar = 2.0;
    Units units = Units::natural;

    static OscillatorParams natural() { return {1.0, 1.0, 2.0, Units::natural}; }
    static OscillatorParams si(double mass_kg, double omega_rad_s, double hbar = kHbarSI) {
        return {mass_kg, omega_rad_s, hbar, Units::SI};
    }

    double ground_state_variance() const { return hbar / (2.0 * mass * omega); }
    double length_scale() const { return std::sqrt(ground_state_variance()); }
    double time_scale() const { return 1.0 / omega; }
    // m omega / hbar, the prefactor of the Gaussian exponent.
    double stiffness() const { return mass * omega / hbar; }
    double period() const { return 2.0 * M_PI / omega; }

    // Throws DomainError unless mass, omega, hbar are finite and positive.
    void validate() const;
};

}  // namespace qtrack
