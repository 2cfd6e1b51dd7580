#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "dilab/csv.hpp"
#include "dilab/errors.hpp"
#include "dilab/linalg.hpp"
#include "dilab/rng.hpp"

namespace dilab {

// Signal-plus-noise distribution: y uniform in {-1,+1}, x1 = y*u in R^K,
// x2 ~ N(0, sigma^2 I) in R^D.
struct DistributionSpec {
    std::vector<double> signal;   // u
    std::size_t noise_dim = 1;    // D
    double noise_std = 1.0;       // sigma, per coordinate
    std::size_t dataset_size = 1; // m

    std::size_t signal_dim() const { return signal.size(); }       // K
    std::size_t input_dim() const { return signal.size() + noise_dim; }
    double signal_norm_sq() const { return norm2_sq(signal); }

    void validate() const {
        if (signal.empty()) throw SpecError("DistributionSpec: K >= 1 required");
        if (noise_dim < 1) throw SpecError("DistributionSpec: D >= 1 required");
        if (!(noise_std > 0.0)) throw SpecError("DistributionSpec: sigma > 0 required");
        if (dataset_size < 1) throw SpecError("DistributionSpec: m >= 1 required");
    }

    // Weak-signal/strong-noise regime: ||u|| <= 1/sqrt(m) and
    // sigma^2 > 1/(10 sqrt(m)).
    bool in_bounded_signal_subspace() const {
        const double root_m = std::sqrt(static_cast<double>(dataset_size));
        return std::sqrt(signal_norm_sq()) <= 1.0 / root_m &&
               noise_std * noise_std > 1.0 / (10.0 * root_m);
    }

    // The canonical spec for that regime: u = (1/sqrt(m)) e1 padded to length K.
    static DistributionSpec bounded_signal(std::size_t k, std::size_t noise_dim,
                                           double sigma, std::size_t m) {
        DistributionSpec spec;
        spec.signal.assign(k, 0.0);
        spec.signal[0] = 1.0 / std::sqrt(static_cast<double>(m));
        spec.noise_dim = noise_dim;
        spec.noise_std = sigma;
        spec.dataset_size = m;
        spec.validate();
        return spec;
    }
};

struct LabeledSample {
    std::vector<double> x1;  // y * u, reconstructible exactly
    std::vector<double> x2;  // Gaussian noise block
    int label = 1;           // y in {-1, +1}

    // Concatenated (x1, x2) input for models that see the full vector.
    std::vector<double> input() const {
        std::vector<double> x;
        x.reserve(x1.size() + x2.size());
        x.insert(x.end(), x1.begin(), x1.end());
        x.insert(x.end(), x2.begin(), x2.end());
        return x;
    }
};

enum class Provenance { SV, S0, SI, Custom };

inline const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::SV: return "S_V";
        case Provenance::S0: return "S_0";
        case Provenance::SI: return "S_I";
        default: return "custom";
    }
}

inline Provenance provenance_from_string(std::string_view s) {
    if (s == "S_V") return Provenance::SV;
    if (s == "S_0") return Provenance::S0;
    if (s == "S_I") return Provenance::SI;
    if (s == "custom") return Provenance::Custom;
    throw FormatError("unknown provenance tag: " + std::string(s));
}

struct Dataset {
    DistributionSpec spec;
    std::vector<LabeledSample> samples;
    Provenance provenance = Provenance::Custom;
    std::uint64_t seed = 0;

    std::size_t size() const { return samples.size(); }
};

// In-place variant of sample_dataset. Reusing a Dataset across calls keeps
// sample storage allocated, which matters in tight Monte-Carlo loops.
inline void sample_dataset_into(Dataset& d, const DistributionSpec& spec, std::size_t n,
                                std::uint64_t seed, Provenance provenance = Provenance::Custom,
                                bool balanced = false) {
    spec.validate();
    if (n < 1) throw SpecError("sample_dataset: n >= 1 required");

    Rng rng(derive_seed(seed, 0x5a17));
    d.spec = spec;
    d.provenance = provenance;
    d.seed = seed;
    d.samples.resize(n);

    if (balanced) {
        for (std::size_t i = 0; i < n; ++i) d.samples[i].label = (i < (n + 1) / 2) ? 1 : -1;
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(d.samples[i - 1].label, d.samples[j].label);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) d.samples[i].label = rng.sign();
    }

    for (std::size_t i = 0; i < n; ++i) {
        LabeledSample& s = d.samples[i];
        s.x1.resize(spec.signal_dim());
        for (std::size_t j = 0; j < spec.signal_dim(); ++j)
            s.x1[j] = s.label > 0 ? spec.signal[j] : -spec.signal[j];
        s.x2.resize(spec.noise_dim);
        for (std::size_t j = 0; j < spec.noise_dim; ++j)
            s.x2[j] = rng.normal(0.0, spec.noise_std);
    }
}

// Draws n i.i.d. samples. With balanced = true the label sequence is an exact
// half/half split (extra +1 when n is odd), shuffled deterministically.
inline Dataset sample_dataset(const DistributionSpec& spec, std::size_t n, std::uint64_t seed,
                              Provenance provenance = Provenance::Custom,
                              bool balanced = false) {
    Dataset d;
    sample_dataset_into(d, spec, n, seed, provenance, balanced);
    return d;
}

// Disjoint partition with the given fractions; the union is the input multiset.
inline std::vector<Dataset> split_dataset(const Dataset& d, const std::vector<double>& fractions,
                                          std::uint64_t seed) {
    if (fractions.empty()) throw PartitionError("split_dataset: no fractions");
    double total = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0)) throw PartitionError("split_dataset: fractions must be positive");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw PartitionError("split_dataset: fractions must sum to 1");

    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 0x5b1f));
    shuffle(order, rng);

    // Cumulative rounding so part sizes always add up to n.
    std::vector<std::size_t> bounds;
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < fractions.size(); ++i) {
        cum += fractions[i];
        bounds.push_back(static_cast<std::size_t>(std::llround(cum * static_cast<double>(n))));
    }
    bounds.push_back(n);

    std::vector<Dataset> parts(fractions.size());
    std::size_t start = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (bounds[i] <= start) throw PartitionError("split_dataset: empty part");
        Dataset& part = parts[i];
        part.spec = d.spec;
        part.provenance = Provenance::Custom;
        part.seed = seed;
        for (std::size_t j = start; j < bounds[i]; ++j)
            part.samples.push_back(d.samples[order[j]]);
        start = bounds[i];
    }
    return parts;
}

// --- file format ------------------------------------------------------------
//
// <path>       CSV, header y,x1_0..x1_{K-1},x2_0..x2_{D-1}, one sample per row
// <path>.spec  key = value block: k, d, sigma, m, u (comma list), seed, provenance

inline std::string dataset_to_csv(const Dataset& d) {
    std::string out = "y";
    for (std::size_t j = 0; j < d.spec.signal_dim(); ++j) out += ",x1_" + std::to_string(j);
    for (std::size_t j = 0; j < d.spec.noise_dim; ++j) out += ",x2_" + std::to_string(j);
    out.push_back('\n');
    for (const LabeledSample& s : d.samples) {
        out += std::to_string(s.label);
        for (double v : s.x1) { out.push_back(','); out += fmt_double(v); }
        for (double v : s.x2) { out.push_back(','); out += fmt_double(v); }
        out.push_back('\n');
    }
    return out;
}

inline std::string spec_sidecar(const Dataset& d) {
    std::string out;
    out += "k = " + std::to_string(d.spec.signal_dim()) + "\n";
    out += "d = " + std::to_string(d.spec.noise_dim) + "\n";
    out += "sigma = " + fmt_double(d.spec.noise_std) + "\n";
    out += "m = " + std::to_string(d.spec.dataset_size) + "\n";
    out += "u = " + join_doubles(d.spec.signal) + "\n";
    out += "seed = " + std::to_string(d.seed) + "\n";
    out += "provenance = " + std::string(to_string(d.provenance)) + "\n";
    return out;
}

inline void save_dataset(const Dataset& d, const std::string& path) {
    write_file(path, dataset_to_csv(d));
    write_file(path + ".spec", spec_sidecar(d));
}

inline Dataset load_dataset(const std::string& path) {
    Dataset d;
    for (const auto& raw : split(read_file(path + ".spec"), '\n')) {
        const auto line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw FormatError("bad sidecar line: " + std::string(line));
        const auto key = trim(line.substr(0, eq));
        const auto val = trim(line.substr(eq + 1));
        if (key == "k") continue;  // implied by u
        else if (key == "d") d.spec.noise_dim = static_cast<std::size_t>(parse_int(val));
        else if (key == "sigma") d.spec.noise_std = parse_double(val);
        else if (key == "m") d.spec.dataset_size = static_cast<std::size_t>(parse_int(val));
        else if (key == "u") d.spec.signal = parse_double_list(val);
        else if (key == "seed") d.seed = static_cast<std::uint64_t>(parse_int(val));
        else if (key == "provenance") d.provenance = provenance_from_string(val);
        else throw FormatError("unknown sidecar key: " + std::string(key));
    }
    d.spec.validate();

    const auto lines = split(read_file(path), '\n');
    if (lines.empty()) throw FormatError("empty dataset file: " + path);
    const std::size_t k = d.spec.signal_dim();
    const std::size_t dd = d.spec.noise_dim;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cells = split(lines[i], ',');
        if (cells.size() != 1 + k + dd)
            throw FormatError("dataset row has wrong number of fields");
        LabeledSample s;
        s.label = static_cast<int>(parse_int(cells[0]));
        s.x1.reserve(k);
        for (std::size_t j = 0; j < k; ++j) s.x1.push_back(parse_double(cells[1 + j]));
        s.x2.reserve(dd);
        for (std::size_t j = 0; j < dd; ++j) s.x2.push_back(parse_double(cells[1 + k + j]));
        d.samples.push_back(std::move(s));
    }
    return d;
}

}  // namespace dilab
