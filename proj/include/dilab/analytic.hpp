#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "dilab/errors.hpp"

namespace dilab {

// Closed-form success/failure probabilities of the margin-gap decision rule
// for the linear suspect model, plus the normal CDF they are built on.
// Every function here has a Monte-Carlo counterpart in montecarlo.hpp.
namespace analytic {

// Standard normal CDF. Complementary-error-function evaluation keeps the
// absolute error at libm level (well below 1e-10).
inline double phi(double z) {
    if (std::isnan(z)) throw std::domain_error("phi: NaN argument");
    return 0.5 * std::erfc(-z * 0.7071067811865475244008443621048);
}

// Parameter bundle for the closed-form expressions below.
struct TheoryInputs {
    std::size_t noise_dim = 1;       // D
    std::size_t dataset_size = 1;    // m
    std::size_t k_reveal = 1;        // k
    double sigma = 1.0;              // per-coordinate noise std
    double u_norm_sq = 1.0;          // ||u||^2
    std::size_t p_overlap = 0;       // revealed points unknown to the suspect
    double lambda = 0.0;             // decision threshold
};

// P[verifier decides correctly] for a dependent linear model with the full
// training set revealed: 1 - phi(-sqrt(D) / (2 sqrt(2))).
inline double di_success_prob(std::size_t noise_dim) {
    if (noise_dim < 1) throw SpecError("di_success_prob: D >= 1 required");
    const double d = static_cast<double>(noise_dim);
    return 1.0 - phi(-std::sqrt(d) / (2.0 * std::sqrt(2.0)));
}

// Held-out accuracy of the trained linear model:
// 1 - phi(-m u^2 / (sqrt(m D) sigma^2)).
inline double accuracy_bound(std::size_t m, double u_norm_sq, double sigma,
                             std::size_t noise_dim) {
    if (m < 1 || noise_dim < 1 || sigma <= 0.0 || u_norm_sq <= 0.0)
        throw SpecError("accuracy_bound: positive inputs required");
    const double md = static_cast<double>(m) * static_cast<double>(noise_dim);
    const double arg = static_cast<double>(m) * u_norm_sq / (std::sqrt(md) * sigma * sigma);
    return 1.0 - phi(-arg);
}

// False-positive probability at the optimal threshold lambda = D sigma^2 / 2:
// 1 - phi(sqrt(k D) / (2 sqrt(2 m))).
inline double analytic_fp(std::size_t k, std::size_t noise_dim, std::size_t m) {
    if (k < 1 || k > m) throw SpecError("analytic_fp: 1 <= k <= m required");
    const double kd = static_cast<double>(k) * static_cast<double>(noise_dim);
    return 1.0 - phi(std::sqrt(kd) / (2.0 * std::sqrt(2.0 * static_cast<double>(m))));
}

// False-positive probability at an arbitrary threshold:
// 1 - phi(sqrt(k) lambda / (sqrt(2 m D) sigma^2)).
inline double fp_at_threshold(std::size_t k, std::size_t noise_dim, std::size_t m,
                              double sigma, double lambda) {
    if (k < 1 || m < 1 || noise_dim < 1 || sigma <= 0.0)
        throw SpecError("fp_at_threshold: positive inputs required");
    const double md = 2.0 * static_cast<double>(m) * static_cast<double>(noise_dim);
    const double arg =
        std::sqrt(static_cast<double>(k)) * lambda / (std::sqrt(md) * sigma * sigma);
    return 1.0 - phi(arg);
}

// Detection probability when the suspect's training set misses p of the k
// revealed points (p = 0 is the fully dependent case, p = k is a coin flip):
// 1 - phi(-(k - p) sqrt(D) / (2 sqrt(2 m k))).
inline double overlap_fp_prob(std::size_t k, std::size_t p_overlap, std::size_t noise_dim,
                              std::size_t m) {
    if (p_overlap > k) throw SpecError("overlap_fp_prob: p <= k required");
    if (k < 1 || k > m) throw SpecError("overlap_fp_prob: 1 <= k <= m required");
    const double kp = static_cast<double>(k - p_overlap);
    const double arg = kp * std::sqrt(static_cast<double>(noise_dim)) /
                       (2.0 * std::sqrt(2.0 * static_cast<double>(m) * static_cast<double>(k)));
    return 1.0 - phi(-arg);
}

// Per-sample membership-inference success: 1 - phi(-sqrt(D) / (2 sqrt(2 m))).
inline double mi_success_prob(std::size_t noise_dim, std::size_t m) {
    if (noise_dim < 1 || m < 1) throw SpecError("mi_success_prob: positive inputs required");
    const double arg = std::sqrt(static_cast<double>(noise_dim)) /
                       (2.0 * std::sqrt(2.0 * static_cast<double>(m)));
    return 1.0 - phi(-arg);
}

// True-positive probability with k revealed samples:
// 1 - phi(-sqrt(k D) / (2 sqrt(2 m))).
inline double tp_vs_k_prob(std::size_t k, std::size_t noise_dim, std::size_t m) {
    if (k < 1 || k > m) throw SpecError("tp_vs_k_prob: 1 <= k <= m required");
    const double kd = static_cast<double>(k) * static_cast<double>(noise_dim);
    return 1.0 - phi(-std::sqrt(kd) / (2.0 * std::sqrt(2.0 * static_cast<double>(m))));
}

// (k, analytic_fp(k, D, m)) rows over a grid of k values.
inline std::vector<std::pair<std::size_t, double>> fp_curve(
    std::size_t noise_dim, std::size_t m, const std::vector<std::size_t>& k_grid) {
    if (k_grid.empty()) throw SpecError("fp_curve: empty k grid");
    std::vector<std::pair<std::size_t, double>> rows;
    rows.reserve(k_grid.size());
    for (std::size_t k : k_grid) rows.emplace_back(k, analytic_fp(k, noise_dim, m));
    return rows;
}

}  // namespace analytic
}  // namespace dilab
