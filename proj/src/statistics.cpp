#include "qtrack/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qtrack {

double CrossingResult::epoch() const {
    if (!n_gamma) throw DomainError("censored run has no crossing epoch");
    return static_cast<double>(*n_gamma) * tau;
}

CrossingResult first_crossing(std::span<const double> xs, double gamma, double tau) {
    if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
    CrossingResult r;
    r.gamma = gamma;
    r.tau = tau;
    r.horizon = xs.empty() ? 0 : xs.size() - 1;
    for (std::size_t n = 0; n < xs.size(); ++n) {
        if (std::fabs(xs[n]) > gamma) {
            r.n_gamma = n;
            break;
        }
    }
    return r;
}

std::vector<std::size_t> CcdfEstimate::change_points() const {
    std::vector<std::size_t> idx;
    if (values.empty()) return idx;
    idx.push_back(0);
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] != values[i - 1]) idx.push_back(i);
    if (idx.back() != values.size() - 1) idx.push_back(values.size() - 1);
    return idx;
}

CcdfEstimate ccdf(std::span<const CrossingResult> results, double tau) {
    if (results.empty()) throw EmptyInput("ccdf of an empty result set");
    std::uint64_t horizon = results.front().horizon;
    for (const auto& r : results) {
        if (r.gamma != results.front().gamma) throw DomainError("ccdf inputs must share gamma");
        if (r.tau != tau) throw DomainError("ccdf inputs must share tau");
        horizon = std::min(horizon, r.horizon);
    }
    // crossings[n]: runs whose first crossing is at index n.
    std::vector<std::uint64_t> crossings(horizon + 1, 0);
    CcdfEstimate out;
    out.n_runs = results.size();
    for (const auto& r : results) {
        if (r.censored())
            ++out.censored;
        else if (*r.n_gamma <= horizon)
            ++crossings[*r.n_gamma];
    }
    out.grid.resize(horizon + 1);
    out.values.resize(horizon + 1);
    const double total = static_cast<double>(out.n_runs);
    std::uint64_t crossed = 0;
    for (std::uint64_t n = 0; n <= horizon; ++n) {
        crossed += crossings[n];
        out.grid[n] = static_cast<double>(n) * tau;
        out.values[n] = static_cast<double>(out.n_runs - crossed) / total;
    }
    return out;
}

MeanEpoch mean_crossing_epoch(std::span<const CrossingResult> results) {
    if (results.empty()) throw EmptyInput("mean crossing epoch of an empty result set");
    MeanEpoch m;
    double sum = 0.0;
    for (const auto& r : results) {
        if (r.censored()) {
            ++m.censored;
        } else {
            ++m.uncensored;
            sum += r.epoch();
        }
    }
    if (m.uncensored == 0) throw AllCensored("every run is censored");
    m.mean = sum / static_cast<double>(m.uncensored);
    if (m.uncensored < 2) {
        m.stderr_ = std::numeric_limits<double>::quiet_NaN();
        return m;
    }
    double ss = 0.0;
    for (const auto& r : results) {
        if (r.censored()) continue;
        const double d = r.epoch() - m.mean;
        ss += d * d;
    }
    const double k = static_cast<double>(m.uncensored);
    m.stderr_ = std::sqrt(ss / (k - 1.0) / k);
    return m;
}

double normal_cdf(double x, double mean, double variance) {
    return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

Histogram limit_point_histogram(std::span<const Track> tracks, std::size_t bins, double theory_variance) {
    if (tracks.empty()) throw EmptyInput("no tracks to histogram");
    if (bins == 0) throw DomainError("histogram needs at least one bin");
    if (!(theory_variance > 0.0)) throw DomainError("theory variance must be positive");
    double half = 4.0 * std::sqrt(theory_variance);
    for (const auto& t : tracks) {
        if (t.xs.empty()) throw EmptyInput("empty track");
        half = std::max(half, std::fabs(t.xs.back()) * (1.0 + 1e-12));
    }
    Histogram h;
    h.theory_variance = theory_variance;
    h.edges.resize(bins + 1);
    const double width = 2.0 * half / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = -half + width * static_cast<double>(i);
    h.counts.assign(bins, 0);
    for (const auto& t : tracks) {
        const double x = t.xs.back();
        auto i = static_cast<std::size_t>(std::floor((x + half) / width));
        ++h.counts[std::min(i, bins - 1)];
    }
    const double total = static_cast<double>(tracks.size());
    const double norm = 1.0 / std::sqrt(2.0 * M_PI * theory_variance);
    h.density.resize(bins);
    h.theory.resize(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        h.density[i] = static_cast<double>(h.counts[i]) / (total * width);
        const double c = 0.5 * (h.edges[i] + h.edges[i + 1]);
        h.theory[i] = norm * std::exp(-0.5 * c * c / theory_variance);
    }
    return h;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw EmptyInput("KS statistic of an empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_critical_value(std::size_t n, KsLevel level) {
    if (n == 0) throw DomainError("KS critical value needs n > 0");
    const double c = level == KsLevel::one_percent ? 1.628 : 1.358;
    const double rn = std::sqrt(static_cast<double>(n));
    return c / (rn + 0.12 + 0.11 / rn);
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) throw EmptyInput("sample variance needs two values");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace qtrack
