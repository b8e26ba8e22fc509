#pragma once

#include <complex>
#include <vector>

#include "unmix/gabor.hpp"

namespace unmix {

using ComplexVec = std::vector<std::complex<double>>;

// Relative harmonic amplitudes, one column per instrument, entries in [0,1]
// up to optimizer slack.  Negative values are projected to zero at read time.
struct Dictionary {
    std::vector<double> entries;  // row-major [n_har][n_ins]
    int n_har = 0;
    int n_ins = 0;

    double& at(int h, int ins) { return entries[static_cast<size_t>(h) * n_ins + ins]; }
    double at(int h, int ins) const { return entries[static_cast<size_t>(h) * n_ins + ins]; }
    double at_clamped(int h, int ins) const {
        double v = at(h, ins);
        return v > 0.0 ? v : 0.0;
    }
};

// Parameters of one tone in one frame.  `instrument` is a 0-based index;
// `phases` are the absolute per-frame phase angles arg(c_h), i.e. they
// already include the 2*pi*f_h*t term of the frame.
struct ToneState {
    int nu = 1;               // integer frequency bin, >= 1
    double nu_tilde = 0.0;    // continuous offset in (-5, 5)
    int instrument = 0;
    double b = 0.0;           // inharmonicity, >= 0
    double a = 0.0;           // global amplitude, >= 0
    double sigma = 1.0;       // peak width in Hz, > 0
    int u = 1;                // sparsity flag
    ComplexVec coeffs;        // per-harmonic c_h (direct prediction)
    std::vector<double> phases;

    double fundamental_hz(const GaborConfig& cfg) const {
        return cfg.beta_hz * (static_cast<double>(nu) + nu_tilde);
    }
};

// Per-frame model state: one tone per instrument plus the aggregated
// dictionary / direct / sparse spectra.
struct FramePrediction {
    std::vector<ToneState> tones;
    std::vector<ComplexVec> y_tone;      // dictionary-based y_j
    std::vector<ComplexVec> y_tone_dir;  // direct y_j^dir
    ComplexVec y;
    ComplexVec y_dir;
    ComplexVec y_spr;
};

// f_h = f1 * h * sqrt(1 + b h^2), h = 1..n_har.  Throws on f1 <= 0 or b < 0.
std::vector<double> harmonic_frequencies(double f1_hz, double b, int n_har);

// Dictionary-based tone spectrum: sum_h a D[h,eta] exp(-(beta l - f_h)^2 /
// (2 sigma^2) + i phi_h).  Each harmonic is evaluated within +-8 sigma of its
// center; harmonics at or above Nyquist (n_spc * beta) contribute nothing.
ComplexVec tone_spectrum_dict(const ToneState& tone, const Dictionary& dict,
                              const GaborConfig& config);

// Direct tone spectrum with free complex coefficients c_h in place of
// a * D[h,eta] * exp(i phi_h).
ComplexVec tone_spectrum_direct(const ToneState& tone, const GaborConfig& config);

// Fills frame.y, frame.y_dir, frame.y_spr from the per-tone spectra.
void aggregate(FramePrediction& frame, int n_spc);

}  // namespace unmix
