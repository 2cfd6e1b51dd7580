#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dilab/csv.hpp"
#include "dilab/distribution.hpp"
#include "dilab/errors.hpp"
#include "dilab/linear.hpp"
#include "dilab/neuralnet.hpp"
#include "dilab/rng.hpp"

namespace dilab {

struct WalkConfig {
    std::size_t n_directions = 30;
    std::size_t max_steps = 50;
    double step_size = 0.02;
    std::uint64_t seed = 0;
    // Perturbations are l-inf: each direction is a random sign vector scaled
    // by step_size, so s steps add exactly s*step_size of l-inf noise.

    void validate() const {
        if (n_directions < 1) throw ConfigError("WalkConfig: n_directions >= 1 required");
        if (max_steps < 1) throw ConfigError("WalkConfig: max_steps >= 1 required");
        if (!(step_size > 0.0)) throw ConfigError("WalkConfig: step_size > 0 required");
    }
};

// Per-sample embedding: l-inf distance walked until misclassification, one
// entry per direction, capped at max_steps * step_size.
struct Embedding {
    std::vector<double> distances;
    std::size_t sample_id = 0;
    int membership = 0;  // b: 1 for S_V-origin, 0 for S_0-origin
    std::size_t queries = 0;
};

// Adapters give every suspect model the same black-box face: a callable
// mapping an input vector to a {-1,+1} label.
inline auto make_predictor(const LinearModel& f) {
    return [&f](std::span<const double> x) { return f.predict_concat(x); };
}

inline auto make_predictor(const MlpModel& f) {
    return [&f](std::span<const double> x) { return predict_label(f, x); };
}

// Walks along seeded random sign directions until the prediction flips,
// recording the step count times step_size (capped). Directions depend only
// on (cfg.seed, direction index), so every sample is probed identically.
template <typename Predictor>
Embedding blind_walk(Predictor&& model, const LabeledSample& sample, const WalkConfig& cfg,
                     std::size_t sample_id = 0) {
    cfg.validate();
    const std::vector<double> x = sample.input();
    Embedding e;
    e.sample_id = sample_id;
    e.distances.resize(cfg.n_directions);
    std::vector<double> delta(x.size());
    std::vector<double> probe(x.size());

    for (std::size_t j = 0; j < cfg.n_directions; ++j) {
        Rng rng(derive_seed(cfg.seed, 0xd17ec7 + j));
        for (std::size_t i = 0; i < x.size(); ++i)
            delta[i] = cfg.step_size * static_cast<double>(rng.sign());
        probe = x;
        std::size_t steps = cfg.max_steps;
        for (std::size_t s = 1; s <= cfg.max_steps; ++s) {
            for (std::size_t i = 0; i < probe.size(); ++i) probe[i] += delta[i];
            ++e.queries;
            const int predicted = model(probe);
            if (predicted != 1 && predicted != -1)
                throw ProtocolError("blind_walk: model returned an invalid class");
            if (predicted != sample.label) {
                steps = s;
                break;
            }
        }
        e.distances[j] = static_cast<double>(steps) * cfg.step_size;
    }
    return e;
}

struct EmbeddingSet {
    std::vector<Embedding> items;
    std::size_t total_queries = 0;
};

// Embeds one dataset with a fixed membership label; ids are positions offset
// by id_offset.
template <typename Predictor>
EmbeddingSet embed_labeled(Predictor&& model, const Dataset& data, int membership,
                           const WalkConfig& cfg, std::size_t id_offset = 0) {
    if (data.samples.empty()) throw ProtocolError("embed_labeled: empty dataset");
    EmbeddingSet out;
    out.items.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        Embedding e = blind_walk(model, data.samples[i], cfg, id_offset + i);
        e.membership = membership;
        out.total_queries += e.queries;
        out.items.push_back(std::move(e));
    }
    return out;
}

// The verification embedding protocol: equal-sized private and public
// subsets, b = 1 for S_V-origin and b = 0 for S_0-origin.
template <typename Predictor>
EmbeddingSet embed_dataset(Predictor&& model, const Dataset& sv_subset, const Dataset& s0_subset,
                           const WalkConfig& cfg) {
    if (sv_subset.samples.empty() || s0_subset.samples.empty())
        throw ProtocolError("embed_dataset: subsets must be non-empty");
    if (sv_subset.size() != s0_subset.size())
        throw ProtocolError("embed_dataset: subsets must have equal sizes");
    EmbeddingSet out = embed_labeled(model, sv_subset, 1, cfg, 0);
    EmbeddingSet pub = embed_labeled(model, s0_subset, 0, cfg, 0);
    out.total_queries += pub.total_queries;
    out.items.insert(out.items.end(), std::make_move_iterator(pub.items.begin()),
                     std::make_move_iterator(pub.items.end()));
    return out;
}

// --- file format ------------------------------------------------------------
// CSV: sample_id,b,d_0..d_{n-1}

inline std::string embeddings_to_csv(const EmbeddingSet& set) {
    if (set.items.empty()) throw ProtocolError("embeddings_to_csv: empty set");
    const std::size_t n = set.items.front().distances.size();
    std::string out = "sample_id,b";
    for (std::size_t j = 0; j < n; ++j) out += ",d_" + std::to_string(j);
    out.push_back('\n');
    for (const Embedding& e : set.items) {
        if (e.distances.size() != n)
            throw FormatError("embeddings_to_csv: ragged embedding lengths");
        out += std::to_string(e.sample_id);
        out += ',' + std::to_string(e.membership);
        for (double v : e.distances) { out.push_back(','); out += fmt_double(v); }
        out.push_back('\n');
    }
    return out;
}

inline void save_embeddings(const EmbeddingSet& set, const std::string& path) {
    write_file(path, embeddings_to_csv(set));
}

inline EmbeddingSet load_embeddings(const std::string& path) {
    const auto lines = split(read_file(path), '\n');
    if (lines.size() < 2) throw FormatError("embeddings file: no rows");
    const auto header = split(lines[0], ',');
    if (header.size() < 3 || header[0] != "sample_id" || header[1] != "b")
        throw FormatError("embeddings file: bad header");
    const std::size_t n = header.size() - 2;

    EmbeddingSet set;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        const auto cells = split(lines[li], ',');
        if (cells.size() != n + 2) throw FormatError("embeddings file: ragged row");
        Embedding e;
        e.sample_id = static_cast<std::size_t>(parse_int(cells[0]));
        e.membership = static_cast<int>(parse_int(cells[1]));
        e.distances.reserve(n);
        for (std::size_t j = 0; j < n; ++j) e.distances.push_back(parse_double(cells[2 + j]));
        set.items.push_back(std::move(e));
    }
    return set;
}

}  // namespace dilab
