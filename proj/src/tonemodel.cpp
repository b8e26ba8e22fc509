#include "unmix/tonemodel.hpp"

#include <cmath>
#include <stdexcept>

namespace unmix {

std::vector<double> harmonic_frequencies(double f1_hz, double b, int n_har) {
    if (!(f1_hz > 0.0))
        throw std::domain_error("harmonic_frequencies: fundamental must be positive");
    if (b < 0.0)
        throw std::domain_error("harmonic_frequencies: inharmonicity must be non-negative");
    std::vector<double> freqs(n_har);
    for (int h = 1; h <= n_har; ++h) {
        double hh = static_cast<double>(h);
        freqs[h - 1] = f1_hz * hh * std::sqrt(1.0 + b * hh * hh);
    }
    return freqs;
}

namespace {

// Adds amp * exp(-(beta l - f)^2 / (2 sigma^2)) to y within +-8 sigma of f.
void add_peak(ComplexVec& y, std::complex<double> amp, double f_hz,
              double sigma_hz, const GaborConfig& cfg) {
    if (f_hz >= cfg.n_spc * cfg.beta_hz) return;
    double radius = 8.0 * sigma_hz / cfg.beta_hz;
    double center = f_hz / cfg.beta_hz;
    int lo = static_cast<int>(std::ceil(center - radius));
    int hi = static_cast<int>(std::floor(center + radius));
    if (lo < 0) lo = 0;
    if (hi >= cfg.n_spc) hi = cfg.n_spc - 1;
    double inv2s2 = 1.0 / (2.0 * sigma_hz * sigma_hz);
    for (int l = lo; l <= hi; ++l) {
        double d = cfg.beta_hz * l - f_hz;
        y[l] += amp * std::exp(-d * d * inv2s2);
    }
}

}  // namespace

ComplexVec tone_spectrum_dict(const ToneState& tone, const Dictionary& dict,
                              const GaborConfig& config) {
    if (tone.instrument < 0 || tone.instrument >= dict.n_ins)
        throw std::invalid_argument("tone_spectrum_dict: instrument out of range");
    ComplexVec y(config.n_spc, {0.0, 0.0});
    if (tone.a == 0.0) return y;
    auto freqs = harmonic_frequencies(tone.fundamental_hz(config), tone.b, dict.n_har);
    for (int h = 0; h < dict.n_har; ++h) {
        double phi = h < static_cast<int>(tone.phases.size()) ? tone.phases[h] : 0.0;
        std::complex<double> amp =
            tone.a * dict.at_clamped(h, tone.instrument) *
            std::complex<double>(std::cos(phi), std::sin(phi));
        add_peak(y, amp, freqs[h], tone.sigma, config);
    }
    return y;
}

ComplexVec tone_spectrum_direct(const ToneState& tone, const GaborConfig& config) {
    ComplexVec y(config.n_spc, {0.0, 0.0});
    int n_har = static_cast<int>(tone.coeffs.size());
    if (n_har == 0) return y;
    auto freqs = harmonic_frequencies(tone.fundamental_hz(config), tone.b, n_har);
    for (int h = 0; h < n_har; ++h)
        add_peak(y, tone.coeffs[h], freqs[h], tone.sigma, config);
    return y;
}

void aggregate(FramePrediction& frame, int n_spc) {
    frame.y.assign(n_spc, {0.0, 0.0});
    frame.y_dir.assign(n_spc, {0.0, 0.0});
    frame.y_spr.assign(n_spc, {0.0, 0.0});
    for (size_t j = 0; j < frame.tones.size(); ++j) {
        const ComplexVec& yj = frame.y_tone[j];
        const ComplexVec& yjd = frame.y_tone_dir[j];
        bool keep = frame.tones[j].u != 0;
        for (int l = 0; l < n_spc; ++l) {
            frame.y[l] += yj[l];
            frame.y_dir[l] += yjd[l];
            if (keep) frame.y_spr[l] += yj[l];
        }
    }
}

}  // namespace unmix
