#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>

namespace dilab {

inline double mean(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Unbiased sample variance.
inline double variance(std::span<const double> xs) {
    const double mu = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - mu) * (x - mu);
    return s / static_cast<double>(xs.size() - 1);
}

namespace detail {

// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction.
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// CDF of Student's t with (possibly fractional) dof nu.
inline double student_t_cdf(double t, double nu) {
    if (nu <= 0.0) throw std::domain_error("student_t_cdf: dof must be positive");
    if (std::isnan(t)) throw std::domain_error("student_t_cdf: NaN statistic");
    if (std::isinf(t)) return t > 0.0 ? 1.0 : 0.0;
    const double x = nu / (nu + t * t);
    const double tail = 0.5 * detail::incomplete_beta(0.5 * nu, 0.5, x);  // P[|T| > |t|] / 2
    return t >= 0.0 ? 1.0 - tail : tail;
}

struct WelchResult {
    double t = 0.0;             // (mean(a) - mean(b)) / pooled standard error
    double dof = 0.0;           // Welch-Satterthwaite degrees of freedom
    double p_one_sided = 0.5;   // P[T >= t] under H0
    bool degenerate = false;    // both samples had zero variance
};

// Welch two-sample t statistic with one-sided p-value for Ha: mean(a) > mean(b).
inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("welch_t_test: need at least 2 values per sample");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean(a);
    const double mb = mean(b);
    const double va = variance(a) / na;
    const double vb = variance(b) / nb;
    WelchResult res;
    if (va + vb == 0.0) {
        // No spread at all. Equal means carry no evidence either way.
        res.degenerate = true;
        res.dof = na + nb - 2.0;
        if (ma == mb) {
            res.t = 0.0;
            res.p_one_sided = 0.5;
        } else {
            res.t = (ma > mb) ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
            res.p_one_sided = (ma > mb) ? 0.0 : 1.0;
        }
        return res;
    }
    res.t = (ma - mb) / std::sqrt(va + vb);
    res.dof = (va + vb) * (va + vb) /
              (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    res.p_one_sided = 1.0 - student_t_cdf(res.t, res.dof);
    return res;
}

}  // namespace dilab
