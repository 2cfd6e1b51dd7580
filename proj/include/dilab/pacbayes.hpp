#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "dilab/distribution.hpp"
#include "dilab/errors.hpp"
#include "dilab/neuralnet.hpp"
#include "dilab/rng.hpp"

namespace dilab {
namespace pacbayes {

inline std::vector<double> layer_spectral_norms(const MlpModel& f, std::size_t iters = 500) {
    std::vector<double> out;
    out.reserve(f.depth());
    for (const Layer& l : f.layers) out.push_back(spectral_norm(l.weights, iters));
    return out;
}

inline std::vector<double> layer_frobenius_norms(const MlpModel& f) {
    std::vector<double> out;
    out.reserve(f.depth());
    for (const Layer& l : f.layers) out.push_back(l.weights.frobenius_norm());
    return out;
}

struct BoundInputs {
    double input_norm_bound = 1.0;  // B with ||x|| <= B
    std::size_t depth = 1;          // d
    std::size_t max_width = 1;      // h
    double gamma_margin = 1.0;      // margin threshold
    std::size_t train_size = 1;     // m
    double sigma_p = 0.1;           // perturbation std (the sigma of the bound)
    std::vector<double> spectral_norms;
    std::vector<double> frob_norms;

    void validate() const {
        if (depth < 1 || max_width < 1 || train_size < 1)
            throw SpecError("BoundInputs: positive counts required");
        if (!(input_norm_bound > 0.0) || !(gamma_margin > 0.0) || !(sigma_p > 0.0))
            throw SpecError("BoundInputs: positive reals required");
        if (spectral_norms.size() != depth || frob_norms.size() != depth)
            throw SpecError("BoundInputs: need one norm per layer");
    }

    static BoundInputs from_model(const MlpModel& f, double input_norm_bound,
                                  double gamma_margin, std::size_t train_size, double sigma_p) {
        BoundInputs in;
        in.input_norm_bound = input_norm_bound;
        in.depth = f.depth();
        in.max_width = f.max_width();
        in.gamma_margin = gamma_margin;
        in.train_size = train_size;
        in.sigma_p = sigma_p;
        in.spectral_norms = layer_spectral_norms(f);
        in.frob_norms = layer_frobenius_norms(f);
        return in;
    }
};

// Output-change bound for weight perturbations U_i with
// ||U_i||_2 <= (1/d) ||W_i||_2:  e B (prod ||W_i||_2) sum ||U_i||_2 / ||W_i||_2.
// The precondition is checked and failure is explicit.
inline double perturbation_bound(const MlpModel& f, double input_norm_bound,
                                 const std::vector<double>& u_spectral_norms,
                                 std::size_t power_iters = 500) {
    if (u_spectral_norms.size() != f.depth())
        throw ShapeError("perturbation_bound: one perturbation norm per layer required");
    const auto w_norms = layer_spectral_norms(f, power_iters);
    const double d = static_cast<double>(f.depth());
    double prod = 1.0, ratio_sum = 0.0;
    for (std::size_t i = 0; i < f.depth(); ++i) {
        if (u_spectral_norms[i] > w_norms[i] / d)
            throw BoundError("perturbation_bound: ||U_i|| exceeds ||W_i||/d, bound inapplicable");
        prod *= w_norms[i];
        if (u_spectral_norms[i] > 0.0) ratio_sum += u_spectral_norms[i] / w_norms[i];
    }
    const double e = 2.718281828459045235360287471353;
    return e * input_norm_bound * prod * ratio_sum;
}

// The displayed generalization radius:
// sqrt((B^2 d^2 h ln(dh) prod ||W||_2^2 sum ||W||_F^2/||W||_2^2 + ln(d m / sigma))
//      / (gamma^2 m)).
inline double generalization_epsilon(const BoundInputs& in) {
    in.validate();
    const double b2 = in.input_norm_bound * in.input_norm_bound;
    const double d = static_cast<double>(in.depth);
    const double h = static_cast<double>(in.max_width);
    const double m = static_cast<double>(in.train_size);
    double prod_sq = 1.0, ratio_sum = 0.0;
    for (std::size_t i = 0; i < in.depth; ++i) {
        prod_sq *= in.spectral_norms[i] * in.spectral_norms[i];
        ratio_sum += in.frob_norms[i] * in.frob_norms[i] /
                     (in.spectral_norms[i] * in.spectral_norms[i]);
    }
    const double numerator =
        b2 * d * d * h * std::log(d * h) * prod_sq * ratio_sum + std::log(d * m / in.sigma_p);
    return std::sqrt(numerator / (in.gamma_margin * in.gamma_margin * m));
}

// The spectral level sigma_p sqrt(2 h ln(2 d h)) that each ||U_i||_2 stays
// below with probability >= 1/sqrt(2) per model.
inline double spectral_tail_level(double sigma_p, std::size_t depth, std::size_t max_width) {
    const double d = static_cast<double>(depth);
    const double h = static_cast<double>(max_width);
    return sigma_p * std::sqrt(2.0 * h * std::log(2.0 * d * h));
}

// Gaussian tail bound 2 h exp(-t^2 / (2 h sigma^2)) on P[||U_i||_2 > t].
inline double spectral_tail_bound(double t, double sigma_p, std::size_t max_width) {
    const double h = static_cast<double>(max_width);
    return 2.0 * h * std::exp(-t * t / (2.0 * h * sigma_p * sigma_p));
}

// Largest sigma_p whose tail level still satisfies the perturbation-bound
// precondition ||U_i||_2 <= ||W_i||_2 / d on every layer of the model.
inline double max_valid_sigma(const MlpModel& f, std::size_t power_iters = 500) {
    const auto w_norms = layer_spectral_norms(f, power_iters);
    const double d = static_cast<double>(f.depth());
    const double unit_level = spectral_tail_level(1.0, f.depth(), f.max_width());
    double best = std::numeric_limits<double>::infinity();
    for (double wn : w_norms) best = std::min(best, wn / (d * unit_level));
    return best;
}

struct PerturbedModel {
    MlpModel model;
    std::vector<double> u_spectral_norms;
};

// Adds i.i.d. N(0, sigma_p^2) noise to every weight entry (biases excluded;
// the bounds are stated for bias-free evaluation).
inline PerturbedModel perturb_model(const MlpModel& f, double sigma_p, Rng& rng,
                                    std::size_t power_iters = 300) {
    PerturbedModel out;
    out.model = f;
    out.u_spectral_norms.reserve(f.depth());
    for (std::size_t li = 0; li < f.depth(); ++li) {
        Matrix u(f.layers[li].weights.rows(), f.layers[li].weights.cols());
        for (double& v : u.data()) v = rng.normal(0.0, sigma_p);
        for (std::size_t i = 0; i < u.data().size(); ++i)
            out.model.layers[li].weights.data()[i] += u.data()[i];
        out.u_spectral_norms.push_back(spectral_norm(u, power_iters));
    }
    return out;
}

// Largest l2 output change over a probe set.
inline double max_output_deviation(const MlpModel& a, const MlpModel& b,
                                   const std::vector<LabeledSample>& probes) {
    double worst = 0.0;
    for (const LabeledSample& s : probes) {
        const auto x = s.input();
        const auto ya = forward(a, x);
        const auto yb = forward(b, x);
        double diff_sq = 0.0;
        for (std::size_t j = 0; j < ya.size(); ++j)
            diff_sq += (ya[j] - yb[j]) * (ya[j] - yb[j]);
        worst = std::max(worst, std::sqrt(diff_sq));
    }
    return worst;
}

inline double mean_margin(const MlpModel& f, const std::vector<LabeledSample>& probes) {
    double s = 0.0;
    for (const LabeledSample& p : probes) s += margin_nl(f, p);
    return s / static_cast<double>(probes.size());
}

struct MarginSimilarityReport {
    double base_gap = 0.0;       // |E p(f_V, x) - E p(f_I, x)|, unperturbed
    double epsilon = 0.0;        // two perturbation-bound halves at the tail level
    std::vector<double> gaps;    // per-draw |E p(f_V + U_V) - E p(f_I + U_I)|
    std::size_t within = 0;      // draws with gap <= epsilon
    std::size_t n_draws = 0;
    double fraction_within() const {
        return n_draws ? static_cast<double>(within) / static_cast<double>(n_draws) : 0.0;
    }
};

// Empirical form of the margin-similarity statement: perturb both trained
// models with N(0, sigma_p^2) weight noise and compare the expected-margin
// gap against the bound built from two perturbation-bound halves evaluated
// at the spectral tail level (factor 2 per half: margins subtract two
// logits).
inline MarginSimilarityReport margin_similarity_check(const MlpModel& fv, const MlpModel& fi,
                                                      const std::vector<LabeledSample>& probes,
                                                      double input_norm_bound, double sigma_p,
                                                      std::size_t n_perturbations,
                                                      std::uint64_t seed) {
    if (!fv.same_architecture(fi))
        throw ShapeError("margin_similarity_check: models must share one architecture");
    if (probes.empty()) throw SpecError("margin_similarity_check: empty probe set");

    MarginSimilarityReport rep;
    rep.base_gap = std::abs(mean_margin(fv, probes) - mean_margin(fi, probes));

    const double level = spectral_tail_level(sigma_p, fv.depth(), fv.max_width());
    const std::vector<double> level_per_layer(fv.depth(), level);
    rep.epsilon = 2.0 * perturbation_bound(fv, input_norm_bound, level_per_layer) +
                  2.0 * perturbation_bound(fi, input_norm_bound, level_per_layer);

    Rng rng(derive_seed(seed, 0x9ac));
    rep.n_draws = n_perturbations;
    rep.gaps.reserve(n_perturbations);
    for (std::size_t t = 0; t < n_perturbations; ++t) {
        const auto pv = perturb_model(fv, sigma_p, rng);
        const auto pi = perturb_model(fi, sigma_p, rng);
        const double gap =
            std::abs(mean_margin(pv.model, probes) - mean_margin(pi.model, probes));
        rep.gaps.push_back(gap);
        if (gap <= rep.epsilon) ++rep.within;
    }
    return rep;
}

}  // namespace pacbayes
}  // namespace dilab
