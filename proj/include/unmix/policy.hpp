#pragma once

#include "unmix/net/unet.hpp"
#include "unmix/objectives.hpp"
#include "unmix/tonemodel.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace unmix {

struct PolicyConfig {
    LossConfig loss;
    int n_har = 16;
    double sigma_min_hz = 0.0;    // lower clip of the peak-width head
    double policy_scale = 0.1;    // down-scaling of the score term
    std::array<double, 3> r_values = {1.0, 0.1, 0.01};
};

// All lift-exponent combinations over m tones (S = 3^m); index 0 is the
// all-ones combination.
std::vector<std::vector<double>> lift_combinations(const PolicyConfig& cfg, int m);

enum class DecodeMode {
    Sample,  // draw from the lifted distributions
    Mode,    // deterministic: distribution modes, no input noise
};

// One frame-level rollout: m sequential network applications, each sampling
// one tone, with the full differentiable graph kept on the tape.
struct Rollout {
    std::unique_ptr<net::Tape> tape;
    std::vector<int> param_ids;  // network leaves, aligned with UNet params
    int dict_id = -1;            // dictionary leaf
    int loss_id = -1;
    int logpi_id = -1;    // log pi_theta of the draw (unlifted)
    int logpi_r_id = -1;  // log pi_theta^R of the draw
    double loss = 0.0;
    double log_pi = 0.0;
    double log_pi_r = 0.0;
    double rho = 1.0;  // importance weight pi / pi^R
    FramePrediction frame;
    bool finite = true;
};

// Pins the stochastic choices of a rollout (used by gradient checks, where
// the estimator differentiates at fixed draws).
struct ForcedDraws {
    struct Tone {
        int nu = 0;
        int instrument = 0;
        double b = 0.0;
        int u = 1;
    };
    std::vector<Tone> tones;
};

// Y must be normalized to unit maximum magnitude.  r holds one lift exponent
// per tone (ignored in Mode decoding).  The random stream for tone j is keyed
// (k0, k1, k2, j).
Rollout rollout(const net::UNet& net, const Dictionary& dict, const ComplexVec& Y,
                const GaborConfig& gcfg, const PolicyConfig& pcfg,
                const std::vector<double>& r, DecodeMode mode,
                std::uint64_t k0, std::uint64_t k1, std::uint64_t k2,
                const ForcedDraws* forced = nullptr);

// Combined estimator over the S lift combinations of one frame:
//   theta: (1/S) sum_i [ policy_scale * grad log pi^{R_i} * (L_i - mean L)
//                        + grad L_i ]
//   dict:  sum_i rho_i grad_D L_i / sum_i rho_i
struct FrameGradients {
    std::vector<net::Tensor> theta;  // aligned with UNet params
    std::vector<double> dict;        // Dictionary::entries layout
    double mean_loss = 0.0;
    double loss_all_ones = 0.0;
    bool finite = true;
};

FrameGradients frame_gradients(const net::UNet& net, const Dictionary& dict,
                               const ComplexVec& Y, const GaborConfig& gcfg,
                               const PolicyConfig& pcfg, std::uint64_t seed,
                               std::uint64_t iteration, std::uint64_t sample_base);

}  // namespace unmix
