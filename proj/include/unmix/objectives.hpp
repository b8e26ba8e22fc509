#pragma once

#include "unmix/tonemodel.hpp"

namespace unmix {

struct LossConfig {
    double q = 0.5;        // lift exponent, in (0, 1]
    double delta = 1e-4;   // lift offset (spectra are unit-max normalized)
    double mu1 = 10.0;     // weight of d_abs(Y, y_spr)
    double mu2 = 10.0;     // weight of d_rad(Y, y_dir)
    double mu3 = 1.0;      // weight of the tone-wise regularizer
    double lambda = 0.9;   // sparsity discount, in (0, 1]
    double eps_rad = 1e-12;  // stabilizer inside d_rad denominators

    void validate() const;
};

// Magnitude-only lifted distance: 1/2 sum_l ((|Y|+delta)^q - (|y|+delta)^q)^2.
double dist_abs(const ComplexVec& Y, const ComplexVec& y, const LossConfig& cfg);

// Phase-aware lifted distance:
// 1/2 sum_l |(|Y|+d)^q Y/(|Y|+eps) - (|y|+d)^q y/(|y|+eps)|^2.
double dist_rad(const ComplexVec& Y, const ComplexVec& y, const LossConfig& cfg);

// Composite training loss: mu1 d_abs(Y, y_spr) lambda^{sum(1-u)} +
// mu2 d_rad(Y, y_dir) + mu3/m sum_j d_rad(y_j_dir, y_j).
// Requires aggregate() to have been run on the frame.
double total_loss(const FramePrediction& frame, const ComplexVec& Y,
                  const LossConfig& cfg);

// Dictionary upper-bound regularizer: 1/n_ins sum_eta log(max_h D[h,eta])^2.
double dict_bound_loss(const Dictionary& dict);

// Gradient of dict_bound_loss with respect to the entries (same layout as
// Dictionary::entries).
std::vector<double> dict_bound_loss_grad(const Dictionary& dict);

}  // namespace unmix
