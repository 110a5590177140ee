#include "qtrack/montecarlo.hpp"

#include <cmath>
#include <string>

#include "qtrack/isolated_qnd.hpp"
#include "qtrack/rng.hpp"

namespace qtrack {

namespace {

// Rethrow a step failure with the step index in front of the message, keeping
// the exception type.
template <class F>
auto at_step(std::uint64_t n, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const SolveFailure& e) {
        throw SolveFailure("step " + std::to_string(n) + ": " + e.what());
    } catch (const NonNormalizableState& e) {
        throw NonNormalizableState("step " + std::to_string(n) + ": " + e.what());
    }
}

}  // namespace

void RunConfig::validate() const {
    main.validate();
    if (n_steps == 0) throw ConfigError("n_steps must be positive");
    if (n_runs == 0) throw ConfigError("n_runs must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be finite and positive");
    if (!(device.delta > 0.0) || !std::isfinite(device.delta))
        throw ConfigError("measurement delta must be finite and positive");
    if (regime == Regime::coupled && !ensemble) throw ConfigError("coupled regime requires an ensemble");
    if (regime == Regime::isolated && ensemble) throw ConfigError("isolated regime takes no ensemble");
    if (ensemble) ensemble->validate();
}

bool RunConfig::is_qnd() const {
    const double period = main.period();
    return std::fabs(tau - period) <= 1e-12 * period;
}

CoupledModel CoupledModel::prepare(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.regime != Regime::coupled) throw ConfigError("CoupledModel needs a coupled configuration");
    CoupledModel m;
    m.main_ = cfg.main;
    m.device_ = cfg.device;
    m.tau_ = cfg.tau;
    m.sys_ = build_matrices(cfg.main, *cfg.ensemble);
    if (cfg.propagator == PropagatorKind::matrix)
        m.propagator_ = evolution_operators(m.sys_, cfg.tau, cfg.main.hbar);
    else
        m.propagator_ = mode_propagator(m.sys_, cfg.tau, cfg.main.hbar);
    m.initial_ = cfg.initial == InitialBath::product ? initial_frozen_state(cfg.main, *cfg.ensemble)
                                                     : normal_mode_ground_state(m.sys_, cfg.main.hbar);
    return m;
}

CovariancePropagation CoupledModel::propagate(const Eigen::MatrixXcd& A0) const {
    return std::visit([&](const auto& p) { return propagate_covariance(A0, p); }, propagator_);
}

CoupledGaussianState CoupledModel::step(const CoupledGaussianState& s, double x, EvolveAudit* audit) const {
    return std::visit([&](const auto& p) { return step_nd(s, x, p, device_, main_, audit); }, propagator_);
}

Track run_isolated(const RunConfig& cfg, std::uint64_t run_index) {
    cfg.validate();
    if (cfg.regime != Regime::isolated) throw ConfigError("run_isolated needs an isolated configuration");
    Track t;
    t.seed = derive_seed(cfg.master_seed, run_index);
    t.regime = Regime::isolated;
    CounterNormalStream rng(t.seed);
    if (cfg.is_qnd()) {
        t.xs = simulate_track(cfg.n_steps, QndTheory(cfg.device.delta, cfg.main), rng);
        return t;
    }
    t.xs.reserve(cfg.n_steps + 1);
    ScalarGaussianState s = ScalarGaussianState::ground();
    for (std::uint64_t n = 0; n <= cfg.n_steps; ++n) {
        const double x = at_step(n, [&] { return sample_measurement(s, cfg.main, rng); });
        t.xs.push_back(x);
        s = step(s, x, cfg.tau, cfg.device, cfg.main);
    }
    return t;
}

AuditedTrack run_coupled_audited(const CoupledModel& model, const RunConfig& cfg, std::uint64_t run_index) {
    AuditedTrack out;
    Track& t = out.track;
    t.seed = derive_seed(cfg.master_seed, run_index);
    t.regime = Regime::coupled;
    t.xs.reserve(cfg.n_steps + 1);
    CounterNormalStream rng(t.seed);
    CoupledGaussianState s = model.initial_state();
    out.min_pd_eig = check_pd_real(s.A).min_eig;
    for (std::uint64_t n = 0; n <= cfg.n_steps; ++n) {
        const GaussianLaw law = at_step(n, [&] { return measurement_distribution_nd(s); });
        const double x = law.mu + std::sqrt(law.sigma2) * rng.next();
        t.xs.push_back(x);
        if (n == cfg.n_steps) break;
        EvolveAudit audit;
        s = at_step(n, [&] { return model.step(s, x, &audit); });
        const PdCheck pd = check_pd_real(s.A);
        if (!pd.positive_definite)
            throw SolveFailure("step " + std::to_string(n) + ": Re(A) not positive definite, min eig " +
                               std::to_string(pd.min_eig));
        out.min_pd_eig = std::min(out.min_pd_eig, pd.min_eig);
        out.max_asymmetry = std::max(out.max_asymmetry, audit.asymmetry);
    }
    return out;
}

Track run_coupled(const CoupledModel& model, const RunConfig& cfg, std::uint64_t run_index) {
    return run_coupled_audited(model, cfg, run_index).track;
}

std::vector<GaussianLaw> conditional_laws_isolated(const RunConfig& cfg, std::span<const double> xs) {
    std::vector<GaussianLaw> laws;
    laws.reserve(xs.size());
    if (cfg.is_qnd()) {
        const QndTheory th(cfg.device.delta, cfg.main);
        QndState s;
        for (std::size_t n = 0; n < xs.size(); ++n) {
            laws.push_back({s.beta / s.alpha, th.params.ground_state_variance() / s.alpha});
            s = qnd_update(s, xs[n], th.delta);
        }
        return laws;
    }
    ScalarGaussianState s = ScalarGaussianState::ground();
    for (std::size_t n = 0; n < xs.size(); ++n) {
        laws.push_back(at_step(n, [&] { return measurement_distribution(s, cfg.main); }));
        s = step(s, xs[n], cfg.tau, cfg.device, cfg.main);
    }
    return laws;
}

std::vector<GaussianLaw> conditional_laws_coupled(const CoupledModel& model, std::span<const double> xs) {
    std::vector<GaussianLaw> laws;
    laws.reserve(xs.size());
    CoupledGaussianState s = model.initial_state();
    for (std::size_t n = 0; n < xs.size(); ++n) {
        laws.push_back(at_step(n, [&] { return measurement_distribution_nd(s); }));
        if (n + 1 < xs.size()) s = at_step(n, [&] { return model.step(s, xs[n]); });
    }
    return laws;
}

double gaussian_log_density(double x, const GaussianLaw& law) {
    const double d = x - law.mu;
    return -0.5 * (std::log(2.0 * M_PI * law.sigma2) + d * d / law.sigma2);
}

double log_likelihood_ratio(std::span<const double> xs, const RunConfig& isolated_model,
                            const CoupledModel& coupled_model) {
    const auto iso = conditional_laws_isolated(isolated_model, xs);
    const auto cpl = conditional_laws_coupled(coupled_model, xs);
    double llr = 0.0;
    for (std::size_t n = 0; n < xs.size(); ++n)
        llr += gaussian_log_density(xs[n], cpl[n]) - gaussian_log_density(xs[n], iso[n]);
    return llr;
}

}  // namespace qtrack
