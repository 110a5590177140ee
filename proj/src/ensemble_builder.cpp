#include "qtrack/ensemble_builder.hpp"

#include <cmath>

namespace qtrack {

void OhmicConfig::validate(double omega) const {
    if (N < 1) throw DomainError("ohmic bath needs N >= 1");
    if (!(bandwidth > 0.0)) throw DomainError("bandwidth must be positive");
    if (!(bandwidth < 2.0 * omega)) throw DomainError("bandwidth must be below 2 omega");
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("eta must lie in (0, 1)");
}

std::vector<double> frequencies(double omega, double bandwidth, std::size_t N) {
    if (N < 1) throw DomainError("frequency grid needs N >= 1");
    if (!(bandwidth < 2.0 * omega)) throw DomainError("bandwidth >= 2 omega gives non-positive frequencies");
    if (N == 1) return {omega};
    std::vector<double> w(N);
    const double step = bandwidth / static_cast<double>(N - 1);
    // Fill symmetrically from both ends so the grid sums to N omega.
    for (std::size_t j = 0; j < N; ++j) {
        const double offset = (static_cast<double>(j) - 0.5 * static_cast<double>(N - 1)) * step;
        w[j] = omega + offset;
    }
    return w;
}

double friction(double omega, double bandwidth, std::size_t N, double eta, ZetaBranch branch) {
    const double base = (M_PI / bandwidth) * omega * omega;
    const double n = static_cast<double>(N);
    return branch == ZetaBranch::small ? base * eta * eta / n : base * n / (eta * eta);
}

std::vector<double> couplings(const OscillatorParams& main, const std::vector<double>& masses,
                              const std::vector<double>& freqs, double zeta, double bandwidth, std::size_t N) {
    if (!(zeta >= 0.0)) throw DomainError("friction must be non-negative");
    if (masses.size() != freqs.size()) throw DomainError("masses and frequencies differ in length");
    std::vector<double> c(freqs.size());
    const double per_mode = (zeta / M_PI) * (bandwidth / static_cast<double>(N));
    for (std::size_t j = 0; j < freqs.size(); ++j)
        c[j] = std::sqrt(main.mass * masses[j] * freqs[j] * freqs[j] * per_mode);
    return c;
}

double coupling_ratio(const SystemMatrices& sys) {
    double off = 0.0;
    for (Eigen::Index j = 1; j < sys.dim(); ++j) off += std::fabs(sys.K(0, j));
    return off / sys.K(0, 0);
}

std::vector<double> spectral_weights(const EnsembleSpec& ens) {
    std::vector<double> J(ens.size());
    for (std::size_t j = 0; j < ens.size(); ++j)
        J[j] = 0.5 * M_PI * ens.couplings[j] * ens.couplings[j] / (ens.masses[j] * ens.frequencies[j]);
    return J;
}

EnsembleSpec build_ohmic_ensemble(const OscillatorParams& main, const OhmicConfig& cfg,
                                  std::optional<std::vector<double>> masses) {
    cfg.validate(main.omega);
    EnsembleSpec ens;
    ens.frequencies = frequencies(main.omega, cfg.bandwidth, cfg.N);
    ens.masses = masses ? std::move(*masses) : std::vector<double>(cfg.N, main.mass);
    if (ens.masses.size() != cfg.N) throw DomainError("bath mass array must have length N");
    const double zeta = friction(main.omega, cfg.bandwidth, cfg.N, cfg.eta, cfg.branch);
    ens.couplings = couplings(main, ens.masses, ens.frequencies, zeta, cfg.bandwidth, cfg.N);
    ens.validate();
    return ens;
}

}  // namespace qtrack
