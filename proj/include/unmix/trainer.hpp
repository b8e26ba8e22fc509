#pragma once

#include "unmix/metrics.hpp"
#include "unmix/policy.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace unmix {

struct TrainConfig {
    long long iterations = 70000;
    int batch_size = 6;
    double lr_theta = 1e-3;
    double lr_dict = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;
    double augment_factor = 4.0;  // training lattice uses alpha / this
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5};
    bool freeze_dictionary = false;
    long long checkpoint_every = 2500;

    void validate() const;
};

// Single scalar AdaMax update; the shared denominator variant for dictionary
// columns feeds the column maximum in as m2.
inline double adamax_update(double param, double g, double& m1, double m2,
                            double lr, long long tau, const TrainConfig& cfg) {
    m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * g;
    double corr = 1.0 - std::pow(cfg.beta1, static_cast<double>(tau));
    return param - lr / corr * m1 / (m2 + cfg.eps);
}

struct OptimizerState {
    std::vector<net::Tensor> m_theta;  // first moments, aligned with UNet params
    std::vector<net::Tensor> u_theta;  // infinity norms
    std::vector<double> m_dict;        // Dictionary::entries layout
    std::vector<double> u_dict;        // one shared denominator per instrument
    long long tau = 0;                 // applied steps
};

// D0[h, eta] = (0.5 / (eta + 1))^h with 0-based h and eta, i.e. column eta
// decays by the factor 0.5/(eta+1) per harmonic starting at 1.
Dictionary init_dictionary(int n_har, int n_ins);

void adamax_step_theta(net::UNet& net, const std::vector<net::Tensor>& grads,
                       OptimizerState& opt, const TrainConfig& cfg);
void adamax_step_dict(Dictionary& dict, const std::vector<double>& grad,
                      OptimizerState& opt, const TrainConfig& cfg);

struct HistoryRow {
    long long iteration = 0;
    double d_abs = 0.0;  // d(Y, y_spr), probe average
    double d_rad = 0.0;  // d(Y, y_dir)
    double reg = 0.0;    // tone-wise regularizer
};

struct TrainState {
    net::UNet net;
    Dictionary dict;
    OptimizerState opt;
    long long iteration = 0;  // completed training iterations
    std::uint64_t seed = 0;
    int skipped_steps = 0;
};

TrainState init_train_state(const net::UNetConfig& ncfg, int n_har,
                            std::uint64_t seed);

struct TrainResult {
    TrainState state;
    std::vector<HistoryRow> history;
    bool numeric_failure = false;
};

// Algorithm-1 training loop over the frames of Z (already analyzed on the
// augmented lattice).  Frames are normalized to unit maximum magnitude per
// frame; epochs re-partition the frame set into random batches.  Resuming
// from a saved TrainState reproduces the uninterrupted trajectory exactly.
TrainResult train(TrainState state, const Spectrogram& Z, const GaborConfig& gcfg,
                  const PolicyConfig& pcfg, const TrainConfig& tcfg,
                  const std::function<void(const TrainState&, const HistoryRow&)>&
                      on_checkpoint = {});

struct EnsembleRun {
    TrainResult result;
    std::vector<TimeSignal> tracks;
    double mean_sdr_db = 0.0;  // only meaningful with references
};

struct EnsembleResult {
    std::vector<EnsembleRun> runs;
    int best = 0;  // index of the selected run (max mean SDR, or 0)
};

// Trains one run per seed and separates the signal with each result.  When
// reference tracks are given, the run with the highest mean SDR is selected.
EnsembleResult run_ensemble(const TimeSignal& x, const GaborConfig& gcfg,
                            const net::UNetConfig& ncfg, const PolicyConfig& pcfg,
                            const TrainConfig& tcfg,
                            const std::vector<TimeSignal>& references = {});

}  // namespace unmix
