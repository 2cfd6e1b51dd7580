#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dilab/csv.hpp"
#include "dilab/distribution.hpp"
#include "dilab/errors.hpp"
#include "dilab/linalg.hpp"
#include "dilab/rng.hpp"

namespace dilab {

// Closed-form linear suspect model: w1 = m*u, w2 = sum_i y_i x2_i.
struct LinearModel {
    std::vector<double> w1;
    std::vector<double> w2;
    Provenance trained_on = Provenance::Custom;

    double raw_score(const LabeledSample& s) const {
        if (s.x1.size() != w1.size() || s.x2.size() != w2.size())
            throw ShapeError("LinearModel: sample dimensions do not match weights");
        return dot(w1, s.x1) + dot(w2, s.x2);
    }

    // sgn(f(x)) with the margin >= 0 convention mapping 0 to +1.
    int predict(const LabeledSample& s) const { return raw_score(s) >= 0.0 ? 1 : -1; }

    // Split-input predict for callers that hold a concatenated vector.
    int predict_concat(std::span<const double> x) const {
        if (x.size() != w1.size() + w2.size())
            throw ShapeError("LinearModel: input dimension mismatch");
        const double v = dot(w1, x.subspan(0, w1.size())) + dot(w2, x.subspan(w1.size()));
        return v >= 0.0 ? 1 : -1;
    }
};

inline LinearModel train_linear(const Dataset& s) {
    if (s.samples.empty()) throw SpecError("train_linear: empty dataset");
    const std::size_t k = s.samples.front().x1.size();
    const std::size_t d = s.samples.front().x2.size();
    if (k != s.spec.signal_dim() || d != s.spec.noise_dim)
        throw ShapeError("train_linear: samples do not match the dataset spec");

    LinearModel f;
    f.trained_on = s.provenance;
    f.w1.assign(k, 0.0);
    f.w2.assign(d, 0.0);
    // One pass of w += y x per sample; x1 = y u collapses to m u.
    const double m = static_cast<double>(s.size());
    for (std::size_t j = 0; j < k; ++j) f.w1[j] = m * s.spec.signal[j];
    for (const LabeledSample& smp : s.samples) {
        if (smp.x2.size() != d) throw ShapeError("train_linear: ragged sample");
        for (std::size_t j = 0; j < d; ++j)
            f.w2[j] += smp.label > 0 ? smp.x2[j] : -smp.x2[j];
    }
    return f;
}

// Prediction margin p(x) = y * f(x).
inline double margin(const LinearModel& f, const LabeledSample& s) {
    return static_cast<double>(s.label) * f.raw_score(s);
}

// Fraction of samples with non-negative margin.
inline double accuracy(const LinearModel& f, const Dataset& d) {
    if (d.samples.empty()) throw SpecError("accuracy: empty dataset");
    std::size_t correct = 0;
    for (const LabeledSample& s : d.samples)
        if (margin(f, s) >= 0.0) ++correct;
    return static_cast<double>(correct) / static_cast<double>(d.size());
}

struct DecisionConfig {
    double lambda = 0.0;        // threshold in [0, D sigma^2]
    std::size_t k_reveal = 1;   // verification samples per side

    // lambda = D sigma^2 / 2, the optimum for the false-positive analysis.
    static DecisionConfig optimal(const DistributionSpec& spec, std::size_t k_reveal) {
        DecisionConfig cfg;
        cfg.lambda = 0.5 * static_cast<double>(spec.noise_dim) * spec.noise_std * spec.noise_std;
        cfg.k_reveal = k_reveal;
        return cfg;
    }
};

struct PsiDecision {
    int decision = 0;        // 1 = stolen, 0 = independent
    double statistic = 0.0;  // mean-margin difference t
};

// Decision function: draw seeded k-subsets of S_V and S_0, decide stolen when
// the mean-margin difference is >= lambda (ties decide stolen).
inline PsiDecision psi_decide(const LinearModel& f, const Dataset& sv, const Dataset& s0,
                              const DecisionConfig& cfg, std::uint64_t seed) {
    if (cfg.k_reveal < 1 || cfg.k_reveal > sv.size() || cfg.k_reveal > s0.size())
        throw ConfigError("psi_decide: k_reveal exceeds dataset size");

    Rng rng(derive_seed(seed, 0xdec1));
    const auto iv = sample_indices(sv.size(), cfg.k_reveal, rng);
    const auto i0 = sample_indices(s0.size(), cfg.k_reveal, rng);

    double tv = 0.0, t0 = 0.0;
    for (std::size_t i : iv) tv += margin(f, sv.samples[i]);
    for (std::size_t i : i0) t0 += margin(f, s0.samples[i]);
    const double k = static_cast<double>(cfg.k_reveal);

    PsiDecision out;
    out.statistic = (tv - t0) / k;
    out.decision = out.statistic >= cfg.lambda ? 1 : 0;
    return out;
}

// --- file format ------------------------------------------------------------

inline std::string linear_model_to_text(const LinearModel& f) {
    std::string out;
    out += "k = " + std::to_string(f.w1.size()) + "\n";
    out += "d = " + std::to_string(f.w2.size()) + "\n";
    out += "w1 = " + join_doubles(f.w1) + "\n";
    out += "w2 = " + join_doubles(f.w2) + "\n";
    out += "provenance = " + std::string(to_string(f.trained_on)) + "\n";
    return out;
}

inline void save_linear_model(const LinearModel& f, const std::string& path) {
    write_file(path, linear_model_to_text(f));
}

inline LinearModel load_linear_model(const std::string& path) {
    LinearModel f;
    std::size_t k = 0, d = 0;
    for (const auto& raw : split(read_file(path), '\n')) {
        const auto line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw FormatError("bad model line: " + std::string(line));
        const auto key = trim(line.substr(0, eq));
        const auto val = trim(line.substr(eq + 1));
        if (key == "k") k = static_cast<std::size_t>(parse_int(val));
        else if (key == "d") d = static_cast<std::size_t>(parse_int(val));
        else if (key == "w1") f.w1 = parse_double_list(val);
        else if (key == "w2") f.w2 = parse_double_list(val);
        else if (key == "provenance") f.trained_on = provenance_from_string(val);
        else throw FormatError("unknown model key: " + std::string(key));
    }
    if (f.w1.size() != k || f.w2.size() != d)
        throw FormatError("linear model dimensions disagree with weight lists");
    return f;
}

}  // namespace dilab
