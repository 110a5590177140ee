#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "qtrack/coupled_core.hpp"

namespace qtrack {

enum class ZetaBranch { small, large };

// Ohmic bath discretized onto N oscillators over a band B centred on omega.
struct OhmicConfig {
    std::size_t N = 11;
    double bandwidth = 1.0 / 3.0;  // same units as omega
    double eta = 0.2;
    ZetaBranch branch = ZetaBranch::small;

    void validate(double omega) const;
};

// omega_j = omega - B/2 + B (j-1)/(N-1); the single point is omega when N = 1.
std::vector<double> frequencies(double omega, double bandwidth, std::size_t N);

// zeta_small = (pi/B) omega^2 eta^2 / N, zeta_large = (pi/B) omega^2 N / eta^2.
double friction(double omega, double bandwidth, std::size_t N, double eta, ZetaBranch branch);

// c_j = sqrt(m m_j omega_j^2 (zeta/pi)(B/N)).
std::vector<double> couplings(const OscillatorParams& main, const std::vector<double>& masses,
                              const std::vector<double>& freqs, double zeta, double bandwidth, std::size_t N);

// sum_j |K_0j| / K_00.
double coupling_ratio(const SystemMatrices& sys);

// Discrete spectral density weights (pi/2) c_j^2 / (m_j omega_j) per grid point.
std::vector<double> spectral_weights(const EnsembleSpec& ens);

// Full bath. Bath masses default to the main mass.
EnsembleSpec build_ohmic_ensemble(const OscillatorParams& main, const OhmicConfig& cfg,
                                  std::optional<std::vector<double>> masses = std::nullopt);

}  // namespace qtrack
