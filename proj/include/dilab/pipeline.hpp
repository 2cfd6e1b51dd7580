#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dilab/blindwalk.hpp"
#include "dilab/distribution.hpp"
#include "dilab/errors.hpp"
#include "dilab/neuralnet.hpp"
#include "dilab/rng.hpp"
#include "dilab/verifier.hpp"

namespace dilab {

// Desk-scale analogue of the split-protocol experiment: one pool distribution
// for S_V and S_I, and a public distribution that differs by the two scale
// knobs below. The noise-std scale plays the role of the train/test gap that
// real image sets carry implicitly: overfit suspects lean on noise features
// and expose the gap, adversarially regularized ones do not. Setting both
// scales to 1.0 makes all three sets exchangeable.
struct ProtocolConfig {
    DistributionSpec pool_spec;
    double public_sigma_scale = 1.25;
    double public_signal_scale = 1.0;

    std::vector<std::size_t> suspect_hidden = {64, 64};
    TrainConfig suspect_train;   // adversarial stays unset here; f_A gets its own
    PgdConfig adversarial = PgdConfig::with_gamma(0.5);

    WalkConfig walk;
    GvArch gv_arch = GvArch::TwoLayerTanh;
    GvTrainOptions gv_options;
    std::size_t gv_train_samples = 150;

    std::size_t k_reveal = 10;
    double alpha = 0.01;
    std::size_t eval_samples = 1000;  // held-out pool data for accuracy reporting

    ProtocolConfig() {
        pool_spec.signal = {0.5, 0.25, 0.25, 0.25};
        pool_spec.noise_dim = 10;
        pool_spec.noise_std = 0.25;
        pool_spec.dataset_size = 2000;
        suspect_train.epochs = 40;
        suspect_train.batch_size = 32;
        suspect_train.learning_rate = 0.1;
        walk.n_directions = 30;
        walk.max_steps = 50;
        walk.step_size = 0.02;
    }

    DistributionSpec public_spec() const {
        DistributionSpec spec = pool_spec;
        spec.noise_std *= public_sigma_scale;
        for (double& u : spec.signal) u *= public_signal_scale;
        return spec;
    }

    void validate() const {
        pool_spec.validate();
        if (!(public_signal_scale > 0.0) || !(public_sigma_scale > 0.0))
            throw ConfigError("ProtocolConfig: public scale knobs must be positive");
        suspect_train.validate();
        adversarial.validate();
        walk.validate();
        if (k_reveal < 2) throw ConfigError("ProtocolConfig: k_reveal >= 2 required");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("ProtocolConfig: bad alpha");
    }
};

struct ProtocolRun {
    Dataset sv, si, s0;   // m samples each
    Dataset pool_eval;    // fresh pool-distribution data for accuracy
    MlpModel fv, fi, f0;
    Distinguisher gv;
};

inline MlpModel train_suspect(const ProtocolConfig& cfg, const Dataset& data,
                              std::uint64_t seed, bool adversarial = false) {
    TrainConfig train_cfg = cfg.suspect_train;
    train_cfg.seed = derive_seed(seed, 0x7e8);
    if (adversarial) train_cfg.adversarial = cfg.adversarial;
    MlpModel net = make_mlp(data.spec.input_dim(), cfg.suspect_hidden, 2, Activation::Relu,
                            derive_seed(seed, 0x7e9));
    return train(std::move(net), data, train_cfg).model;
}

// Steps 1-4 of the split protocol: pool -> S_V/S_I halves, separate public
// S_0, suspects f_V/f_I/f_0 with one recipe, g_V from the victim's model.
inline ProtocolRun run_split_protocol(const ProtocolConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const std::size_t m = cfg.pool_spec.dataset_size;

    ProtocolRun run;
    const Dataset pool =
        sample_dataset(cfg.pool_spec, 2 * m, derive_seed(seed, 0x901), Provenance::Custom);
    auto halves = split_dataset(pool, {0.5, 0.5}, derive_seed(seed, 0x902));
    run.sv = std::move(halves[0]);
    run.sv.provenance = Provenance::SV;
    run.si = std::move(halves[1]);
    run.si.provenance = Provenance::SI;
    run.s0 = sample_dataset(cfg.public_spec(), m, derive_seed(seed, 0x903), Provenance::S0);
    run.pool_eval =
        sample_dataset(cfg.pool_spec, cfg.eval_samples, derive_seed(seed, 0x904));

    run.fv = train_suspect(cfg, run.sv, derive_seed(seed, 0x905));
    run.fi = train_suspect(cfg, run.si, derive_seed(seed, 0x906));
    run.f0 = train_suspect(cfg, run.s0, derive_seed(seed, 0x907));

    run.gv = build_gv(make_predictor(run.fv), run.sv, run.s0, cfg.gv_train_samples, cfg.walk,
                      cfg.gv_arch, derive_seed(seed, 0x908), cfg.gv_options);
    return run;
}

// Verification of one suspect against the run's S_V/S_0 and distinguisher.
inline VerificationReport verify_suspect(const ProtocolRun& run, const ProtocolConfig& cfg,
                                         const MlpModel& suspect, const std::string& tag,
                                         std::uint64_t seed,
                                         const WalkConfig* walk_override = nullptr) {
    VerificationReport rep =
        verify_ownership(make_predictor(suspect), run.sv, run.s0, run.gv, cfg.k_reveal,
                         walk_override ? *walk_override : cfg.walk, cfg.alpha,
                         derive_seed(seed, 0x909));
    rep.suspect_tag = tag;
    return rep;
}

}  // namespace dilab
