#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dilab/blindwalk.hpp"
#include "dilab/csv.hpp"
#include "dilab/distribution.hpp"
#include "dilab/errors.hpp"
#include "dilab/neuralnet.hpp"
#include "dilab/rng.hpp"
#include "dilab/stats.hpp"

namespace dilab {

enum class GvArch { TwoLayerTanh, FourLayerDropout };

inline const char* to_string(GvArch a) {
    return a == GvArch::TwoLayerTanh ? "two_layer_tanh" : "four_layer_dropout";
}

// Margin regressor g_V. Scores are trained toward 0 for private-origin
// embeddings (b = 1) and 1 for public-origin ones (b = 0).
struct Distinguisher {
    MlpModel regressor;
    GvArch arch = GvArch::TwoLayerTanh;
    std::uint64_t seed = 0;

    double score(const Embedding& e) const {
        return forward(regressor, e.distances)[0];
    }
};

struct GvTrainOptions {
    std::size_t hidden_width = 32;
    std::size_t epochs = 150;
    std::size_t batch_size = 16;
    double learning_rate = 0.05;
    double dropout_rate = 0.1;  // four-layer variant only
};

inline Distinguisher train_gv(const std::vector<Embedding>& embeddings, GvArch arch,
                              std::uint64_t seed, const GvTrainOptions& opt = {}) {
    if (embeddings.empty()) throw ProtocolError("train_gv: no embeddings");
    bool has_private = false, has_public = false;
    for (const Embedding& e : embeddings) {
        if (e.membership == 1) has_private = true;
        else if (e.membership == 0) has_public = true;
        else throw ProtocolError("train_gv: membership labels must be 0 or 1");
    }
    if (!has_private || !has_public)
        throw ProtocolError("train_gv: both membership classes are required");

    const std::size_t in_dim = embeddings.front().distances.size();
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;
    inputs.reserve(embeddings.size());
    for (const Embedding& e : embeddings) {
        if (e.distances.size() != in_dim) throw ShapeError("train_gv: ragged embeddings");
        inputs.push_back(e.distances);
        targets.push_back(e.membership == 1 ? 0.0 : 1.0);
    }

    const std::vector<std::size_t> hidden =
        arch == GvArch::TwoLayerTanh
            ? std::vector<std::size_t>{opt.hidden_width}
            : std::vector<std::size_t>{opt.hidden_width, opt.hidden_width, opt.hidden_width};
    MlpModel net = make_mlp(in_dim, hidden, 1, Activation::Tanh, derive_seed(seed, 0x6f));

    TrainConfig cfg;
    cfg.epochs = opt.epochs;
    cfg.batch_size = opt.batch_size;
    cfg.learning_rate = opt.learning_rate;
    cfg.seed = derive_seed(seed, 0x70);
    const double dropout = arch == GvArch::FourLayerDropout ? opt.dropout_rate : 0.0;

    Distinguisher g;
    g.regressor = train_regressor(std::move(net), inputs, targets, cfg, dropout).model;
    g.arch = arch;
    g.seed = seed;
    return g;
}

enum class Verdict { Stolen, Inconclusive };

inline const char* to_string(Verdict v) {
    return v == Verdict::Stolen ? "stolen" : "inconclusive";
}

struct VerificationReport {
    double mu = 0.0;        // mean score of S_0-origin embeddings
    double mu_v = 0.0;      // mean score of S_V-origin embeddings
    double delta_mu = 0.0;  // mu - mu_v
    double t_statistic = 0.0;
    double p_value = 1.0;
    double alpha = 0.01;
    Verdict verdict = Verdict::Inconclusive;
    bool degenerate = false;  // zero variance in both score vectors
    std::size_t k_reveal = 0;
    std::uint64_t seed = 0;
    std::string suspect_tag;
};

// One-sided Welch test of H0: mu < mu_V against Ha: mu > mu_V. Rejecting H0
// (p < alpha) marks the suspect as stolen.
inline VerificationReport hypothesis_test(const std::vector<double>& scores_v,
                                          const std::vector<double>& scores_0, double alpha) {
    if (scores_v.size() < 2 || scores_0.size() < 2)
        throw ProtocolError("hypothesis_test: need at least 2 scores per side");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("hypothesis_test: alpha must be in (0, 1)");

    const WelchResult w = welch_t_test(scores_0, scores_v);
    VerificationReport rep;
    rep.mu = mean(scores_0);
    rep.mu_v = mean(scores_v);
    rep.delta_mu = rep.mu - rep.mu_v;
    rep.t_statistic = w.t;
    rep.p_value = w.p_one_sided;
    rep.alpha = alpha;
    rep.degenerate = w.degenerate;
    rep.verdict = rep.p_value < alpha ? Verdict::Stolen : Verdict::Inconclusive;
    return rep;
}

// End-to-end ownership verification: reveal k private and k public samples,
// embed them by querying the suspect, score with g_V, and test.
template <typename Predictor>
VerificationReport verify_ownership(Predictor&& suspect, const Dataset& sv, const Dataset& s0,
                                    const Distinguisher& g, std::size_t k_reveal,
                                    const WalkConfig& walk, double alpha, std::uint64_t seed) {
    if (k_reveal < 2 || k_reveal > sv.size() || k_reveal > s0.size())
        throw ConfigError("verify_ownership: k_reveal must be in [2, min(|S_V|, |S_0|)]");

    Rng rng(derive_seed(seed, 0xfe11));
    const auto iv = sample_indices(sv.size(), k_reveal, rng);
    const auto i0 = sample_indices(s0.size(), k_reveal, rng);

    Dataset sv_subset, s0_subset;
    sv_subset.spec = sv.spec;
    s0_subset.spec = s0.spec;
    for (std::size_t i : iv) sv_subset.samples.push_back(sv.samples[i]);
    for (std::size_t i : i0) s0_subset.samples.push_back(s0.samples[i]);

    const EmbeddingSet set = embed_dataset(suspect, sv_subset, s0_subset, walk);
    std::vector<double> scores_v, scores_0;
    for (const Embedding& e : set.items)
        (e.membership == 1 ? scores_v : scores_0).push_back(g.score(e));

    VerificationReport rep = hypothesis_test(scores_v, scores_0, alpha);
    rep.k_reveal = k_reveal;
    rep.seed = seed;
    return rep;
}

// Trains g_V from the victim's own model: embed n_train samples of S_V
// (b = 1) and S_0 (b = 0) through the victim and fit the regressor.
template <typename Predictor>
Distinguisher build_gv(Predictor&& victim, const Dataset& sv, const Dataset& s0,
                       std::size_t n_train, const WalkConfig& walk, GvArch arch,
                       std::uint64_t seed, const GvTrainOptions& opt = {}) {
    if (n_train < 1 || n_train > sv.size() || n_train > s0.size())
        throw ConfigError("build_gv: n_train must be in [1, min sizes]");
    Rng rng(derive_seed(seed, 0x6711));
    const auto iv = sample_indices(sv.size(), n_train, rng);
    const auto i0 = sample_indices(s0.size(), n_train, rng);

    Dataset sv_subset, s0_subset;
    sv_subset.spec = sv.spec;
    s0_subset.spec = s0.spec;
    for (std::size_t i : iv) sv_subset.samples.push_back(sv.samples[i]);
    for (std::size_t i : i0) s0_subset.samples.push_back(s0.samples[i]);

    const EmbeddingSet set = embed_dataset(victim, sv_subset, s0_subset, walk);
    return train_gv(set.items, arch, derive_seed(seed, 0x6712), opt);
}

// The augmented-distinguisher countermeasure: the public embedding pool is
// S_0 plus a portion of S_I, all labeled b = 0. A zero-size portion reduces
// to build_gv.
template <typename Predictor>
Distinguisher augment_gv_training(Predictor&& victim, const Dataset& sv, const Dataset& s0,
                                  const Dataset& si_portion, std::size_t n_train,
                                  const WalkConfig& walk, GvArch arch, std::uint64_t seed,
                                  const GvTrainOptions& opt = {}) {
    if (n_train < 1 || n_train > sv.size() || n_train > s0.size())
        throw ConfigError("augment_gv_training: n_train must be in [1, min sizes]");
    Rng rng(derive_seed(seed, 0x6711));
    const auto iv = sample_indices(sv.size(), n_train, rng);
    const auto i0 = sample_indices(s0.size(), n_train, rng);

    Dataset sv_subset, s0_subset;
    sv_subset.spec = sv.spec;
    s0_subset.spec = s0.spec;
    for (std::size_t i : iv) sv_subset.samples.push_back(sv.samples[i]);
    for (std::size_t i : i0) s0_subset.samples.push_back(s0.samples[i]);

    EmbeddingSet set = embed_dataset(victim, sv_subset, s0_subset, walk);
    if (!si_portion.samples.empty()) {
        const EmbeddingSet extra =
            embed_labeled(victim, si_portion, 0, walk, /*id_offset=*/n_train);
        set.items.insert(set.items.end(), extra.items.begin(), extra.items.end());
    }
    return train_gv(set.items, arch, derive_seed(seed, 0x6712), opt);
}

// --- report formats ---------------------------------------------------------

inline std::string report_csv_header() {
    return "suspect,delta_mu,t,p,alpha,verdict,k,seed";
}

inline std::string report_csv_row(const VerificationReport& r) {
    std::string row = r.suspect_tag;
    row += ',' + fmt_double(r.delta_mu);
    row += ',' + fmt_double(r.t_statistic);
    row += ',' + fmt_double(r.p_value);
    row += ',' + fmt_double(r.alpha);
    row += ',' + std::string(to_string(r.verdict));
    row += ',' + std::to_string(r.k_reveal);
    row += ',' + std::to_string(r.seed);
    return row;
}

inline std::string report_block(const VerificationReport& r) {
    std::string out;
    out += "suspect    = " + (r.suspect_tag.empty() ? std::string("-") : r.suspect_tag) + "\n";
    out += "mu         = " + fmt_double(r.mu) + "\n";
    out += "mu_v       = " + fmt_double(r.mu_v) + "\n";
    out += "delta_mu   = " + fmt_double(r.delta_mu) + "\n";
    out += "t          = " + fmt_double(r.t_statistic) + "\n";
    out += "p_value    = " + fmt_double(r.p_value) + "\n";
    out += "alpha      = " + fmt_double(r.alpha) + "\n";
    out += "verdict    = " + std::string(to_string(r.verdict)) + "\n";
    if (r.degenerate) out += "note       = degenerate: zero variance in both score vectors\n";
    return out;
}

}  // namespace dilab
