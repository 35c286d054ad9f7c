#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "numstats.hpp"

namespace diskprep {

/// Normal-Gamma prior for the Gaussian observation model (unknown mean and
/// variance), applied to the standardized sequence: one pseudo-observation at
/// unit scale. A much smaller beta lets runs of one or two samples claim a
/// near-zero variance, which fires spurious changes at the start of a window.
struct NormalGammaPrior {
    double mu = 0.0;
    double kappa = 1.0;
    double alpha = 1.0;
    double beta = 1.0;
};

namespace detail {

inline double log_student_t(double x, double df, double loc, double scale2) {
    const double z = (x - loc) * (x - loc) / (df * scale2);
    return std::lgamma(0.5 * (df + 1)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * M_PI * scale2) -
           0.5 * (df + 1) * std::log1p(z);
}

inline double log_predictive(const NormalGammaPrior& p, double x) {
    return log_student_t(x, 2 * p.alpha, p.mu, p.beta * (p.kappa + 1) / (p.alpha * p.kappa));
}

inline NormalGammaPrior update(const NormalGammaPrior& p, double x) {
    NormalGammaPrior q;
    q.kappa = p.kappa + 1;
    q.mu = (p.kappa * p.mu + x) / q.kappa;
    q.alpha = p.alpha + 0.5;
    q.beta = p.beta + p.kappa * (x - p.mu) * (x - p.mu) / (2 * q.kappa);
    return q;
}

inline double log_add(double a, double b) {
    if (a == -INFINITY) return b;
    if (b == -INFINITY) return a;
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

} // namespace detail

/// Bayesian online change-point detection (constant hazard 1/n, Gaussian
/// likelihood with a conjugate Normal-Gamma prior).
///
/// Returns, for each position t, the posterior probability that a new run
/// starts at t given x[0..t]: the run-length-0 mass, where the new run's
/// predictive is the prior predictive. The sequence is standardized first so
/// the fixed prior is scale-free. The run that exists before any data is
/// empty, so position 0 always equals the hazard.
inline std::vector<double> change_probabilities(std::span<const double> values, NormalGammaPrior prior = {}) {
    const std::size_t n = values.size();
    if (n < 2) throw DataError("change_probabilities: need at least 2 values");
    const double hazard = 1.0 / static_cast<double>(n);
    const double m = stats::mean(values);
    const double sd = stats::stddev(values);
    // A constant sequence carries no evidence of change.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(m)))) return std::vector<double>(n, hazard);

    const double log_h = std::log(hazard), log_1mh = std::log1p(-hazard);

    std::vector<double> log_run{0.0};  // log P(run | data so far)
    std::vector<NormalGammaPrior> params{prior};
    std::vector<double> out(n);

    std::vector<double> next_log;
    std::vector<NormalGammaPrior> next_params;
    for (std::size_t t = 0; t < n; ++t) {
        const double x = (values[t] - m) / sd;
        const double log_cp = log_h + detail::log_predictive(prior, x);  // sum of run mass is 1
        next_log.assign(1, log_cp);
        next_params.assign(1, detail::update(prior, x));
        double log_evidence = log_cp;
        for (std::size_t r = 0; r < log_run.size(); ++r) {
            const double lg = log_run[r] + log_1mh + detail::log_predictive(params[r], x);
            next_log.push_back(lg);
            next_params.push_back(detail::update(params[r], x));
            log_evidence = detail::log_add(log_evidence, lg);
        }
        for (double& v : next_log) v -= log_evidence;
        out[t] = std::clamp(std::exp(next_log.front()), 0.0, 1.0);
        log_run.swap(next_log);
        params.swap(next_params);
    }
    return out;
}

/// Earliest position whose z-scored change probability lies outside
/// [-z_threshold, z_threshold]; none for zero-variance input.
inline std::optional<std::size_t> significant_change_day(std::span<const double> probs, double z_threshold = 2.5) {
    const auto z = stats::zscores(probs);
    if (z.degenerate) return std::nullopt;
    for (std::size_t i = 0; i < z.values.size(); ++i) {
        if (std::abs(z.values[i]) > z_threshold) return i;
    }
    return std::nullopt;
}

} // namespace diskprep
