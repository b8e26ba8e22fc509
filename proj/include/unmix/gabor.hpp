#pragma once

#include <complex>
#include <vector>

namespace unmix {

// Lattice and window constants for the sampled short-time Fourier transform.
// With a Gaussian window and alpha_s * beta_hz < 1 the translates form a
// Gabor frame, and because the truncated window support 1/beta fits into one
// FFT block, the canonical dual window gives exact reconstruction for
// signals band-limited to the stored bins.
struct GaborConfig {
    double sample_rate_hz = 48000.0;
    double zeta_s = 1024.0 / 48000.0;   // window scale
    double alpha_s = 512.0 / 48000.0;   // time step
    double beta_hz = 48000.0 / 12288.0; // frequency step
    int n_spc = 6144;                   // stored frequency bins (l >= 0)
    int n_len = 0;                      // frame count; 0 = derive from signal

    double sigma_hz() const;            // 1 / (2 pi zeta)
    double half_support_s() const;      // window truncation radius 1 / (2 beta)
    int hop_samples() const;            // alpha * fs, must be integral
    int fft_size() const;               // fs / beta, must be integral

    // Throws std::invalid_argument if the frame condition or the lattice
    // integrality requirements are violated.
    void validate() const;

    static GaborConfig defaults(double sample_rate_hz = 48000.0);
};

struct TimeSignal {
    std::vector<double> samples;
    double sample_rate_hz = 48000.0;
};

struct Spectrogram {
    std::vector<std::complex<double>> data;  // row-major [n_len][n_spc]
    int n_len = 0;
    int n_spc = 0;
    // Sample index of the center of frame 0 (negative: frames start inside
    // the zero-padded lead-in) and the original signal length, kept so that
    // synthesis reproduces the exact sample range.
    long long center0 = 0;
    long long signal_len = 0;

    std::complex<double>& at(int k, int l) { return data[static_cast<size_t>(k) * n_spc + l]; }
    const std::complex<double>& at(int k, int l) const { return data[static_cast<size_t>(k) * n_spc + l]; }
    // Time of the center of frame k relative to sample 0, in seconds.
    double frame_time_s(int k, const GaborConfig& cfg) const;
};

// Truncated Gaussian analysis window w(t); zero for |t| > 1/(2 beta).
double gaussian_window(const GaborConfig& config, double t);

// Canonical dual (synthesis) window: beta * w(t) / sum_k |w(t - alpha k)|^2.
double dual_window(const GaborConfig& config, double t);

// Sampled STFT Z[k,l] = V_w X(alpha k, beta l) * exp(i 2 pi alpha k beta l).
// Frames cover the signal plus the window half-support on both sides
// (zero-padded), so the transform is total for any finite signal.
Spectrogram analyze(const TimeSignal& signal, const GaborConfig& config);

// Overlap-add reconstruction with the dual window; returns the real signal.
// Bins l > 0 are counted twice to stand in for the omitted negative
// frequencies.
TimeSignal synthesize(const Spectrogram& spec, const GaborConfig& config);

}  // namespace unmix
