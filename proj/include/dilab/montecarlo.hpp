#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "dilab/analytic.hpp"
#include "dilab/csv.hpp"
#include "dilab/distribution.hpp"
#include "dilab/errors.hpp"
#include "dilab/linear.hpp"

namespace dilab {

enum class Scenario {
    TpDependent,    // suspect trained on S_V itself
    FpIndependent,  // suspect trained on a disjoint S_I
    Overlap,        // suspect's training set misses p of the revealed points
    Mi              // single-sample membership inference (k = 1)
};

inline const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::TpDependent: return "TP_dependent";
        case Scenario::FpIndependent: return "FP_independent";
        case Scenario::Overlap: return "OVERLAP";
        default: return "MI";
    }
}

struct TrialPlan {
    DistributionSpec spec;
    std::size_t k_reveal = 1;
    double lambda = 0.0;
    std::size_t n_trials = 10000;
    Scenario scenario = Scenario::FpIndependent;
    std::size_t p_overlap = 0;  // only for Scenario::Overlap
    std::uint64_t base_seed = 0;

    void validate() const {
        spec.validate();
        if (n_trials < 1) throw ConfigError("TrialPlan: n_trials >= 1 required");
        const std::size_t k = scenario == Scenario::Mi ? 1 : k_reveal;
        if (k < 1 || k > spec.dataset_size)
            throw ConfigError("TrialPlan: k_reveal must be in [1, m]");
        if (scenario == Scenario::Overlap && p_overlap > k_reveal)
            throw ConfigError("TrialPlan: p_overlap must be <= k_reveal");
        if (scenario != Scenario::Overlap && p_overlap != 0)
            throw ConfigError("TrialPlan: p_overlap only applies to OVERLAP");
    }

    // Mean of the margin-gap statistic t under this scenario.
    double statistic_mean() const {
        const double dsig2 =
            static_cast<double>(spec.noise_dim) * spec.noise_std * spec.noise_std;
        switch (scenario) {
            case Scenario::TpDependent: return dsig2;
            case Scenario::FpIndependent: return 0.0;
            case Scenario::Overlap:
                return dsig2 * static_cast<double>(k_reveal - p_overlap) /
                       static_cast<double>(k_reveal);
            default: return dsig2;  // MI reveals one training sample
        }
    }

    // The threshold the closed-form expressions assume: D sigma^2 / 2 for the
    // TP/FP/MI formulas, and half the overlap-adjusted mean for OVERLAP.
    double canonical_lambda() const {
        if (scenario == Scenario::Overlap) return 0.5 * statistic_mean();
        return 0.5 * static_cast<double>(spec.noise_dim) * spec.noise_std * spec.noise_std;
    }

    // Closed-form prediction of the positive rate: t is asymptotically
    // N(mean, (2m/k) D sigma^4), so P[t >= lambda] = 1 - phi((lambda-mean)/sd).
    double analytic_prediction() const {
        const std::size_t k = scenario == Scenario::Mi ? 1 : k_reveal;
        const double m = static_cast<double>(spec.dataset_size);
        const double d = static_cast<double>(spec.noise_dim);
        const double sig2 = spec.noise_std * spec.noise_std;
        const double sd = std::sqrt(2.0 * m * d / static_cast<double>(k)) * sig2;
        return 1.0 - analytic::phi((lambda - statistic_mean()) / sd);
    }
};

struct TrialOutcome {
    double positive_rate = 0.0;
    double stderr_rate = 0.0;  // sqrt(rate (1-rate) / n)
    std::size_t n_trials = 0;
    double analytic_prediction = 0.0;
    double z_gap = 0.0;
    bool z_gap_defined = false;
};

namespace detail {

// One seeded trial; workspace datasets are reused across calls.
struct TrialWorkspace {
    Dataset sv, s0, si, revealed;
};

// Datasets are generated only as large as the statistic needs: fresh points
// that merely get revealed are drawn directly at size k instead of carving a
// k-subset out of m unused samples.
inline bool run_one_trial(const TrialPlan& plan, std::uint64_t trial_seed,
                          TrialWorkspace& ws) {
    const std::size_t m = plan.spec.dataset_size;
    DecisionConfig cfg;
    cfg.lambda = plan.lambda;
    cfg.k_reveal = plan.k_reveal;

    switch (plan.scenario) {
        case Scenario::TpDependent: {
            sample_dataset_into(ws.sv, plan.spec, m, derive_seed(trial_seed, 1), Provenance::SV);
            sample_dataset_into(ws.s0, plan.spec, plan.k_reveal, derive_seed(trial_seed, 2),
                                Provenance::S0);
            const LinearModel f = train_linear(ws.sv);
            return psi_decide(f, ws.sv, ws.s0, cfg, derive_seed(trial_seed, 3)).decision == 1;
        }
        case Scenario::FpIndependent: {
            sample_dataset_into(ws.sv, plan.spec, plan.k_reveal, derive_seed(trial_seed, 1),
                                Provenance::SV);
            sample_dataset_into(ws.s0, plan.spec, plan.k_reveal, derive_seed(trial_seed, 2),
                                Provenance::S0);
            sample_dataset_into(ws.si, plan.spec, m, derive_seed(trial_seed, 4), Provenance::SI);
            const LinearModel f = train_linear(ws.si);
            return psi_decide(f, ws.sv, ws.s0, cfg, derive_seed(trial_seed, 3)).decision == 1;
        }
        case Scenario::Overlap: {
            // Revealed set R from S_V; the suspect's training set contains R
            // minus p of its points, topped up with fresh data.
            const std::size_t k = plan.k_reveal;
            const std::size_t shared = k - plan.p_overlap;
            sample_dataset_into(ws.revealed, plan.spec, k, derive_seed(trial_seed, 1),
                                Provenance::SV);
            sample_dataset_into(ws.s0, plan.spec, k, derive_seed(trial_seed, 2), Provenance::S0);
            sample_dataset_into(ws.si, plan.spec, m, derive_seed(trial_seed, 4), Provenance::SI);
            for (std::size_t i = 0; i < shared; ++i) ws.si.samples[i] = ws.revealed.samples[i];

            const LinearModel f = train_linear(ws.si);
            return psi_decide(f, ws.revealed, ws.s0, cfg, derive_seed(trial_seed, 3)).decision == 1;
        }
        default: {  // Scenario::Mi
            sample_dataset_into(ws.sv, plan.spec, m, derive_seed(trial_seed, 1), Provenance::SV);
            sample_dataset_into(ws.s0, plan.spec, 1, derive_seed(trial_seed, 2), Provenance::S0);
            const LinearModel f = train_linear(ws.sv);
            Rng rng(derive_seed(trial_seed, 6));
            const LabeledSample& member = ws.sv.samples[rng.below(m)];
            const double t = margin(f, member) - margin(f, ws.s0.samples[0]);
            return t >= plan.lambda;
        }
    }
}

}  // namespace detail

// Runs the plan's trials and compares the positive rate with the closed-form
// prediction. Trials are independent; per-trial seeds are base_seed XOR a
// hash of the trial index, so the tally is the same sequentially or in
// parallel.
inline TrialOutcome run_trials(const TrialPlan& plan, unsigned n_threads = 0) {
    plan.validate();
    if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(plan.n_trials));

    std::vector<std::size_t> counts(n_threads, 0);
    auto worker = [&](unsigned tid) {
        detail::TrialWorkspace ws;
        const std::size_t lo = plan.n_trials * tid / n_threads;
        const std::size_t hi = plan.n_trials * (tid + 1) / n_threads;
        std::size_t positives = 0;
        for (std::size_t trial = lo; trial < hi; ++trial) {
            const std::uint64_t trial_seed = plan.base_seed ^ mix64(trial + 1);
            if (detail::run_one_trial(plan, trial_seed, ws)) ++positives;
        }
        counts[tid] = positives;
    };

    if (n_threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }

    std::size_t positives = 0;
    for (std::size_t c : counts) positives += c;

    TrialOutcome out;
    out.n_trials = plan.n_trials;
    out.positive_rate = static_cast<double>(positives) / static_cast<double>(plan.n_trials);
    out.stderr_rate = std::sqrt(out.positive_rate * (1.0 - out.positive_rate) /
                                static_cast<double>(plan.n_trials));
    out.analytic_prediction = plan.analytic_prediction();
    if (out.stderr_rate > 0.0) {
        out.z_gap = (out.positive_rate - out.analytic_prediction) / out.stderr_rate;
        out.z_gap_defined = true;
    }
    return out;
}

enum class SweepParameter { K, D, M, Lambda };

inline SweepParameter sweep_parameter_from_string(std::string_view s) {
    if (s == "k") return SweepParameter::K;
    if (s == "D" || s == "d") return SweepParameter::D;
    if (s == "m") return SweepParameter::M;
    if (s == "lambda") return SweepParameter::Lambda;
    throw ConfigError("sweep: parameter must be one of k, D, m, lambda");
}

struct SweepRow {
    TrialPlan plan;
    TrialOutcome outcome;
};

// One run_trials per grid value; each point gets a derived base seed.
inline std::vector<SweepRow> sweep(const TrialPlan& base, SweepParameter vary,
                                   const std::vector<double>& grid, unsigned n_threads = 0) {
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        TrialPlan plan = base;
        switch (vary) {
            case SweepParameter::K: plan.k_reveal = static_cast<std::size_t>(grid[i]); break;
            case SweepParameter::D: plan.spec.noise_dim = static_cast<std::size_t>(grid[i]); break;
            case SweepParameter::M: plan.spec.dataset_size = static_cast<std::size_t>(grid[i]); break;
            case SweepParameter::Lambda: plan.lambda = grid[i]; break;
        }
        plan.base_seed = derive_seed(base.base_seed, 0x57ee + i);
        rows.push_back({plan, run_trials(plan, n_threads)});
    }
    return rows;
}

inline std::string sweep_csv_header() {
    return "scenario,k,D,m,lambda,n_trials,rate,stderr,analytic,z_gap";
}

inline std::string sweep_csv_row(const TrialPlan& plan, const TrialOutcome& o) {
    std::string row;
    row += to_string(plan.scenario);
    if (plan.scenario == Scenario::Overlap)
        row += "(p=" + std::to_string(plan.p_overlap) + ")";
    row += ',' + std::to_string(plan.scenario == Scenario::Mi ? 1 : plan.k_reveal);
    row += ',' + std::to_string(plan.spec.noise_dim);
    row += ',' + std::to_string(plan.spec.dataset_size);
    row += ',' + fmt_double(plan.lambda);
    row += ',' + std::to_string(o.n_trials);
    row += ',' + fmt_double(o.positive_rate);
    row += ',' + fmt_double(o.stderr_rate);
    row += ',' + fmt_double(o.analytic_prediction);
    row += ',' + (o.z_gap_defined ? fmt_double(o.z_gap) : std::string("nan"));
    return row;
}

}  // namespace dilab
