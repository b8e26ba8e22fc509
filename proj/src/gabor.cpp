#include "unmix/gabor.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace unmix {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

class FftPlan {
public:
    FftPlan(int n, int sign) : n_(n) {
        buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        plan_ = fftw_plan_dft_1d(n, buf_, buf_, sign, FFTW_ESTIMATE);
    }
    ~FftPlan() {
        {
            std::lock_guard<std::mutex> lock(fftw_plan_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(buf_);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    std::complex<double>* buffer() { return reinterpret_cast<std::complex<double>*>(buf_); }
    void execute() { fftw_execute(plan_); }
    int size() const { return n_; }

private:
    int n_;
    fftw_complex* buf_;
    fftw_plan plan_;
};

int round_to_int(double x, const char* what) {
    double r = std::round(x);
    if (std::fabs(x - r) > 1e-6 * std::max(1.0, std::fabs(x)))
        throw std::invalid_argument(std::string("GaborConfig: ") + what +
                                    " does not land on the sample grid");
    return static_cast<int>(r);
}

}  // namespace

double GaborConfig::sigma_hz() const { return 1.0 / (kTwoPi * zeta_s); }

double GaborConfig::half_support_s() const { return 1.0 / (2.0 * beta_hz); }

int GaborConfig::hop_samples() const { return round_to_int(alpha_s * sample_rate_hz, "alpha"); }

int GaborConfig::fft_size() const { return round_to_int(sample_rate_hz / beta_hz, "1/beta"); }

void GaborConfig::validate() const {
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("GaborConfig: sample rate must be positive");
    if (!(zeta_s > 0.0)) throw std::invalid_argument("GaborConfig: zeta must be positive");
    if (!(alpha_s > 0.0) || !(beta_hz > 0.0))
        throw std::invalid_argument("GaborConfig: lattice constants must be positive");
    if (!(alpha_s * beta_hz < 1.0))
        throw std::invalid_argument("GaborConfig: alpha * beta must be < 1 (frame condition)");
    if (n_spc < 1) throw std::invalid_argument("GaborConfig: n_spc must be >= 1");
    if (n_spc * beta_hz > sample_rate_hz / 2.0 + 1e-9)
        throw std::invalid_argument("GaborConfig: bins above Nyquist");
    int n = fft_size();
    int a = hop_samples();
    if (a < 1) throw std::invalid_argument("GaborConfig: hop below one sample");
    if (2 * n_spc > n)
        throw std::invalid_argument("GaborConfig: n_spc exceeds fft_size/2");
}

GaborConfig GaborConfig::defaults(double sample_rate_hz) {
    GaborConfig cfg;
    cfg.sample_rate_hz = sample_rate_hz;
    cfg.zeta_s = 1024.0 / sample_rate_hz;
    cfg.alpha_s = 512.0 / sample_rate_hz;
    cfg.beta_hz = sample_rate_hz / 12288.0;
    cfg.n_spc = 6144;
    cfg.n_len = 0;
    return cfg;
}

double Spectrogram::frame_time_s(int k, const GaborConfig& cfg) const {
    return (center0 + static_cast<double>(k) * cfg.hop_samples()) / cfg.sample_rate_hz;
}

double gaussian_window(const GaborConfig& config, double t) {
    if (std::fabs(t) > config.half_support_s()) return 0.0;
    double z2 = config.zeta_s * config.zeta_s;
    return std::exp(-t * t / (2.0 * z2)) / std::sqrt(kTwoPi * z2);
}

double dual_window(const GaborConfig& config, double t) {
    double w = gaussian_window(config, t);
    if (w == 0.0) return 0.0;
    // Periodization of |w|^2 over all alpha-shifts covering t.
    double half = config.half_support_s();
    long long m_lo = static_cast<long long>(std::ceil((t - half) / config.alpha_s));
    long long m_hi = static_cast<long long>(std::floor((t + half) / config.alpha_s));
    double denom = 0.0;
    for (long long m = m_lo; m <= m_hi; ++m) {
        double wm = gaussian_window(config, t - config.alpha_s * static_cast<double>(m));
        denom += wm * wm;
    }
    return config.beta_hz * w / denom;
}

Spectrogram analyze(const TimeSignal& signal, const GaborConfig& config) {
    config.validate();
    if (signal.samples.empty())
        throw std::invalid_argument("analyze: empty signal");
    if (std::fabs(signal.sample_rate_hz - config.sample_rate_hz) > 1e-6)
        throw std::invalid_argument("analyze: sample rate mismatch with config");

    const int a = config.hop_samples();
    const int n = config.fft_size();
    const int half = n / 2;
    const long long len = static_cast<long long>(signal.samples.size());
    const double fs = config.sample_rate_hz;

    // Frame centers a*k spanning the signal plus the window half-support.
    const long long k_min = static_cast<long long>(std::floor(-static_cast<double>(half) / a)) + 1;
    const long long k_max = (len - 1 + half) / a;
    const int n_len = static_cast<int>(k_max - k_min + 1);

    Spectrogram spec;
    spec.n_len = n_len;
    spec.n_spc = config.n_spc;
    spec.center0 = k_min * a;
    spec.signal_len = len;
    spec.data.assign(static_cast<size_t>(n_len) * config.n_spc, {0.0, 0.0});

    // Window samples for offsets j = -half .. half-1.
    std::vector<double> win(n);
    for (int j = -half; j < half; ++j)
        win[j + half] = gaussian_window(config, static_cast<double>(j) / fs);

    FftPlan fft(n, FFTW_FORWARD);
    std::complex<double>* buf = fft.buffer();
    const double scale = 1.0 / fs;  // Riemann weight of the STFT integral

    for (int k = 0; k < n_len; ++k) {
        long long center = spec.center0 + static_cast<long long>(k) * a;
        for (int j = -half; j < half; ++j) {
            long long idx = center + j;
            double x = (idx >= 0 && idx < len) ? signal.samples[static_cast<size_t>(idx)] : 0.0;
            int slot = j >= 0 ? j : j + n;  // offsets stored modulo n
            buf[slot] = {x * win[j + half] * scale, 0.0};
        }
        fft.execute();
        for (int l = 0; l < config.n_spc; ++l) spec.at(k, l) = buf[l];
    }
    return spec;
}

TimeSignal synthesize(const Spectrogram& spec, const GaborConfig& config) {
    config.validate();
    if (spec.n_spc != config.n_spc)
        throw std::invalid_argument("synthesize: spectrogram dims do not match config");

    const int a = config.hop_samples();
    const int n = config.fft_size();
    const int half = n / 2;
    const double fs = config.sample_rate_hz;

    TimeSignal out;
    out.sample_rate_hz = fs;
    out.samples.assign(static_cast<size_t>(std::max<long long>(spec.signal_len, 0)), 0.0);
    if (out.samples.empty() || spec.n_len == 0) return out;

    // Dual window sampled at offsets j; the |w|^2 periodization is
    // alpha-periodic, so it only needs one hop worth of values.
    std::vector<double> win(n), denom(a, 0.0);
    for (int j = -half; j < half; ++j) {
        double w = gaussian_window(config, static_cast<double>(j) / fs);
        win[j + half] = w;
        int r = ((j % a) + a) % a;
        denom[r] += w * w;
    }
    std::vector<double> dual(n);
    for (int j = -half; j < half; ++j) {
        int r = ((j % a) + a) % a;
        dual[j + half] = config.beta_hz * win[j + half] / denom[r];
    }

    FftPlan fft(n, FFTW_BACKWARD);
    std::complex<double>* buf = fft.buffer();
    const long long len = spec.signal_len;

    for (int k = 0; k < spec.n_len; ++k) {
        long long center = spec.center0 + static_cast<long long>(k) * a;
        if (center + half <= 0 || center - half >= len) continue;
        for (int l = 0; l < n; ++l) buf[l] = {0.0, 0.0};
        buf[0] = spec.at(k, 0);
        for (int l = 1; l < spec.n_spc; ++l) buf[l] = 2.0 * spec.at(k, l);
        fft.execute();
        for (int j = -half; j < half; ++j) {
            long long idx = center + j;
            if (idx < 0 || idx >= len) continue;
            int slot = j >= 0 ? j : j + n;
            out.samples[static_cast<size_t>(idx)] += buf[slot].real() * dual[j + half];
        }
    }
    return out;
}

}  // namespace unmix
