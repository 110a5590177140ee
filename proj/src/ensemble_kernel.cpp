#include "qtrack/ensemble_kernel.hpp"

#include <cmath>
#include <span>
#include <string>

#include <omp.h>

#include "qtrack/isolated_qnd.hpp"
#include "qtrack/rng.hpp"

namespace qtrack {

namespace {

// Mirrors run_isolated step for step, so both give identical bits.
class IsolatedStepper {
public:
    explicit IsolatedStepper(const RunConfig& cfg)
        : cfg_(&cfg), qnd_(cfg.is_qnd()), gs_(cfg.main.ground_state_variance()) {}

    GaussianLaw law() const {
        if (qnd_) return {q_.beta / q_.alpha, gs_ / q_.alpha};
        return measurement_distribution(s_, cfg_->main);
    }
    double sample(double z) const {
        if (qnd_) return q_.beta / q_.alpha + std::sqrt(gs_ / q_.alpha) * z;
        const GaussianLaw l = law();
        return l.mu + std::sqrt(l.sigma2) * z;
    }
    void update(double x) {
        if (qnd_)
            q_ = qnd_update(q_, x, cfg_->device.delta);
        else
            s_ = step(s_, x, cfg_->tau, cfg_->device, cfg_->main);
    }

private:
    const RunConfig* cfg_;
    bool qnd_;
    double gs_;
    QndState q_;
    ScalarGaussianState s_ = ScalarGaussianState::ground();
};

std::size_t effective_chunk(const KernelOptions& opt) {
    const std::size_t seg = std::max<std::size_t>(opt.segment, 1);
    const std::size_t c = std::max(opt.chunk_steps, seg);
    return (c + seg - 1) / seg * seg;
}

int thread_count(const KernelOptions& opt) { return opt.threads > 0 ? opt.threads : omp_get_max_threads(); }

// Per-run coefficient vector c (Re then Im) for the coupled kernel.
struct RunCoeffs {
    std::vector<double> data;
    std::size_t dim = 0;
    double* at(std::size_t run) { return data.data() + 2 * dim * run; }
};

void apply_frame(const Eigen::MatrixXcd& Pi, double* c, std::size_t dim) {
    Eigen::Map<Eigen::VectorXd> cr(c, static_cast<Eigen::Index>(dim));
    Eigen::Map<Eigen::VectorXd> ci(c + dim, static_cast<Eigen::Index>(dim));
    const Eigen::VectorXcd v = Pi * (cr.cast<cplx>() + cplx(0.0, 1.0) * ci.cast<cplx>());
    cr = v.real();
    ci = v.imag();
}

// Advance a block of coupled runs through a chunk, step-major so the table
// row for a step is loaded once per block. `emit(r, n, mu, sigma, x&)` picks
// the outcome x of run r at global step n and returns false to stop the run.
template <class Emit>
void advance_block(const CoupledGainTable::Chunk& ch, std::size_t segment, RunCoeffs& coeffs,
                   std::span<const std::size_t> runs, std::span<unsigned char> alive, Emit& emit) {
    const std::size_t d = ch.dim;
    std::size_t n_alive = 0;
    for (std::size_t j = 0; j < runs.size(); ++j) n_alive += alive[j];
    for (std::size_t k = 0; k < ch.count && n_alive > 0; ++k) {
        if (k % segment == 0 && !(ch.first == 0 && k == 0)) {
            for (std::size_t j = 0; j < runs.size(); ++j)
                if (alive[j]) apply_frame(ch.frames[k / segment], coeffs.at(runs[j]), d);
        }
        const double* hr = ch.h.data() + 2 * d * k;
        const double* hi = hr + d;
        const double* qr = ch.q.data() + 2 * d * k;
        const double* qi = qr + d;
        const double sigma = ch.sigma[k];
        const std::uint64_t n = ch.first + k;
        for (std::size_t j = 0; j < runs.size(); ++j) {
            if (!alive[j]) continue;
            double* cr = coeffs.at(runs[j]);
            double* ci = cr + d;
            double mu = 0.0;
            for (std::size_t i = 0; i < d; ++i) mu += hr[i] * cr[i] - hi[i] * ci[i];
            double x = 0.0;
            if (!emit(runs[j], n, mu, sigma, x)) {
                alive[j] = 0;
                --n_alive;
                continue;
            }
            for (std::size_t i = 0; i < d; ++i) {
                cr[i] += x * qr[i];
                ci[i] += x * qi[i];
            }
        }
    }
}

// Drive the coupled kernel over `n_runs` runs and `n_total` steps per run.
template <class Emit>
void drive_coupled(const CoupledModel& model, std::size_t n_runs, std::uint64_t n_total, const KernelOptions& opt,
                   Emit&& emit) {
    constexpr std::size_t kBlock = 32;
    CoupledGainTable table(model, std::max<std::size_t>(opt.segment, 1));
    const std::size_t chunk = effective_chunk(opt);
    const auto dim = static_cast<std::size_t>(model.dim());

    RunCoeffs coeffs{std::vector<double>(2 * dim * n_runs, 0.0), dim};
    const Eigen::VectorXcd& b0 = model.initial_state().b;
    for (std::size_t r = 0; r < n_runs; ++r) {
        double* c = coeffs.at(r);
        for (std::size_t i = 0; i < dim; ++i) {
            c[i] = b0(static_cast<Eigen::Index>(i)).real();
            c[dim + i] = b0(static_cast<Eigen::Index>(i)).imag();
        }
    }
    std::vector<std::size_t> active(n_runs);
    for (std::size_t r = 0; r < n_runs; ++r) active[r] = r;
    std::vector<unsigned char> alive(n_runs, 1);

    CoupledGainTable::Chunk ch;
    const int threads = thread_count(opt);
    while (table.next_step() < n_total && !active.empty()) {
        const auto count = static_cast<std::size_t>(std::min<std::uint64_t>(chunk, n_total - table.next_step()));
        table.next_chunk(count, ch);
        const auto n_blocks = static_cast<std::ptrdiff_t>((active.size() + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
        for (std::ptrdiff_t b = 0; b < n_blocks; ++b) {
            const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
            const std::size_t len = std::min(kBlock, active.size() - lo);
            advance_block(ch, table.segment(), coeffs, std::span<const std::size_t>(active.data() + lo, len),
                          std::span<unsigned char>(alive.data() + lo, len), emit);
        }
        std::size_t w = 0;
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (alive[i]) {
                active[w] = active[i];
                alive[w] = 1;
                ++w;
            }
        }
        active.resize(w);
    }
}

}  // namespace

CoupledGainTable::CoupledGainTable(const CoupledModel& model, std::size_t segment)
    : model_(&model), segment_(std::max<std::size_t>(segment, 1)), A_(model.initial_state().A) {
    Pi_ = Eigen::MatrixXcd::Identity(model.dim(), model.dim());
}

void CoupledGainTable::next_chunk(std::size_t count, Chunk& out) {
    if (n_ % segment_ != 0) throw DomainError("gain table chunks must start on a segment boundary");
    const Eigen::Index d = model_->dim();
    const auto du = static_cast<std::size_t>(d);
    const double kick = model_->kick();
    out.first = n_;
    out.count = count;
    out.dim = du;
    out.sigma.resize(count);
    out.h.resize(2 * du * count);
    out.q.resize(2 * du * count);
    out.frames.clear();
    for (std::size_t k = 0; k < count; ++k, ++n_) {
        if (n_ % segment_ == 0) {
            out.frames.push_back(Pi_);
            Pi_.setIdentity();
        }
        MainReadout ro;
        try {
            ro = main_readout(A_);
        } catch (const SolveFailure& e) {
            throw SolveFailure("step " + std::to_string(n_) + ": " + e.what());
        }
        out.sigma[k] = std::sqrt(ro.sigma2);
        const Eigen::VectorXcd h = Pi_.transpose() * ro.r.cast<cplx>();
        const Eigen::VectorXcd q = Pi_.partialPivLu().solve(Eigen::VectorXcd::Unit(d, 0)) * kick;
        for (std::size_t i = 0; i < du; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            out.h[2 * du * k + i] = h(ii).real();
            out.h[2 * du * k + du + i] = h(ii).imag();
            out.q[2 * du * k + i] = q(ii).real();
            out.q[2 * du * k + du + i] = q(ii).imag();
        }
        Eigen::MatrixXcd Abar = A_;
        Abar(0, 0) += kick;
        CovariancePropagation prop;
        try {
            prop = model_->propagate(Abar);
        } catch (const SolveFailure& e) {
            throw SolveFailure("step " + std::to_string(n_) + ": " + e.what());
        }
        max_asym_ = std::max(max_asym_, prop.audit.asymmetry);
        A_ = std::move(prop.A);
        Pi_ = prop.G * Pi_;
    }
}

std::vector<Track> simulate_tracks(const RunConfig& cfg, const CoupledModel* model, std::uint64_t first_run,
                                   std::uint64_t count, const KernelOptions& opt) {
    cfg.validate();
    std::vector<Track> tracks(count);
    const std::uint64_t n_total = cfg.n_steps + 1;
    for (std::uint64_t i = 0; i < count; ++i) {
        tracks[i].seed = derive_seed(cfg.master_seed, first_run + i);
        tracks[i].regime = cfg.regime;
        tracks[i].xs.resize(n_total);
    }
    if (cfg.regime == Regime::isolated) {
        const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 8) num_threads(thread_count(opt))
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            Track& t = tracks[static_cast<std::size_t>(i)];
            const CounterNormalStream rng(t.seed);
            IsolatedStepper st(cfg);
            for (std::uint64_t k = 0; k < n_total; ++k) {
                const double x = st.sample(rng.at(k));
                t.xs[k] = x;
                st.update(x);
            }
        }
        return tracks;
    }
    if (!model) throw ConfigError("coupled simulation needs a prepared model");
    drive_coupled(*model, count, n_total, opt,
                  [&](std::size_t r, std::uint64_t n, double mu, double sigma, double& x) {
                      Track& t = tracks[r];
                      x = mu + sigma * CounterNormalStream(t.seed).at(n);
                      t.xs[n] = x;
                      return true;
                  });
    return tracks;
}

std::vector<CrossingResult> simulate_crossings(const RunConfig& cfg, const CoupledModel* model, double gamma,
                                               const KernelOptions& opt) {
    cfg.validate();
    if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
    const std::uint64_t n_total = cfg.n_steps + 1;
    std::vector<CrossingResult> out(cfg.n_runs);
    std::vector<std::uint64_t> seeds(cfg.n_runs);
    for (std::uint64_t r = 0; r < cfg.n_runs; ++r) {
        out[r].gamma = gamma;
        out[r].horizon = cfg.n_steps;
        out[r].tau = cfg.tau;
        seeds[r] = derive_seed(cfg.master_seed, r);
    }
    if (cfg.regime == Regime::isolated) {
        const auto n = static_cast<std::ptrdiff_t>(cfg.n_runs);
#pragma omp parallel for schedule(dynamic, 8) num_threads(thread_count(opt))
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto r = static_cast<std::size_t>(i);
            const CounterNormalStream rng(seeds[r]);
            IsolatedStepper st(cfg);
            for (std::uint64_t k = 0; k < n_total; ++k) {
                const double x = st.sample(rng.at(k));
                if (std::fabs(x) > gamma) {
                    out[r].n_gamma = k;
                    break;
                }
                st.update(x);
            }
        }
        return out;
    }
    if (!model) throw ConfigError("coupled simulation needs a prepared model");
    drive_coupled(*model, cfg.n_runs, n_total, opt,
                  [&](std::size_t r, std::uint64_t n, double mu, double sigma, double& x) {
                      x = mu + sigma * CounterNormalStream(seeds[r]).at(n);
                      if (std::fabs(x) > gamma) {
                          out[r].n_gamma = n;
                          return false;
                      }
                      return true;
                  });
    return out;
}

std::vector<double> llr_scores(std::span<const Track> tracks, const RunConfig& isolated_model,
                               const CoupledModel& coupled_model, const KernelOptions& opt) {
    std::vector<double> scores(tracks.size(), 0.0);
    std::uint64_t longest = 0;
    for (const auto& t : tracks) longest = std::max<std::uint64_t>(longest, t.xs.size());

    const auto n = static_cast<std::ptrdiff_t>(tracks.size());
#pragma omp parallel for schedule(dynamic, 8) num_threads(thread_count(opt))
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& xs = tracks[static_cast<std::size_t>(i)].xs;
        IsolatedStepper st(isolated_model);
        double s = 0.0;
        for (double x : xs) {
            s -= gaussian_log_density(x, st.law());
            st.update(x);
        }
        scores[static_cast<std::size_t>(i)] = s;
    }
    drive_coupled(coupled_model, tracks.size(), longest, opt,
                  [&](std::size_t r, std::uint64_t k, double mu, double sigma, double& x) {
                      const auto& xs = tracks[r].xs;
                      if (k >= xs.size()) return false;
                      x = xs[k];
                      scores[r] += gaussian_log_density(x, {mu, sigma * sigma});
                      return true;
                  });
    return scores;
}

}  // namespace qtrack
