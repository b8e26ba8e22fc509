// Acceptance gate: one self-contained check per release criterion, each
// printing a single PASS/FAIL line.  The first argument is the path of the
// unmix command-line binary (used by the determinism criterion); all other
// checks run in-process against the library.

#include "unmix/inference.hpp"
#include "unmix/metrics.hpp"
#include "unmix/net/ops.hpp"
#include "unmix/policy.hpp"
#include "unmix/rng.hpp"
#include "unmix/trainer.hpp"
#include "unmix/wav.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace unmix;
namespace ops = net::ops;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
    std::printf("criterion %d (%s): %s%s%s\n", index, name.c_str(),
                ok ? "PASS" : "FAIL", detail.empty() ? "" : " -- ",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------- shared fixtures

GaborConfig small_gabor() {
    GaborConfig g;
    g.sample_rate_hz = 8000.0;
    g.zeta_s = 64.0 / 8000.0;
    g.alpha_s = 32.0 / 8000.0;
    g.beta_hz = 8000.0 / 128.0;
    g.n_spc = 64;
    return g;
}

net::UNetConfig tiny_unet() {
    net::UNetConfig nc;
    nc.n_ins = 2;
    nc.n_spc = 64;
    nc.strides = {4, 4};
    nc.channels = {6, 8};
    nc.kernel = 5;
    nc.trunk_channels = 6;
    nc.nu_min = 3;
    nc.nu_max = 28;
    return nc;
}

Dictionary tiny_dict() {
    Dictionary dict;
    dict.n_har = 4;
    dict.n_ins = 2;
    dict.entries = {1.0, 1.0, 0.5, 0.35, 0.25, 0.5, 0.125, 0.2};
    return dict;
}

PolicyConfig tiny_policy(const GaborConfig& g) {
    PolicyConfig pc;
    pc.n_har = 4;
    pc.sigma_min_hz = 0.25 / (2.0 * M_PI * g.zeta_s);
    return pc;
}

ComplexVec random_unit_spectrum(int n_spc, std::uint64_t seed) {
    RandomStream rng(seed);
    ComplexVec Y(n_spc);
    double peak = 0.0;
    for (int l = 0; l < n_spc; ++l) {
        Y[l] = {rng.normal(), rng.normal()};
        peak = std::max(peak, std::abs(Y[l]));
    }
    for (auto& v : Y) v /= peak;
    return Y;
}

// Random band-limited multi-tone signal with raised-cosine edge tapers; the
// taper keeps the zero-padded signal edges from exciting the omitted
// Nyquist bin.
TimeSignal tapered_test_signal(int n, double fs, int n_tones, int taper,
                               std::uint64_t seed) {
    RandomStream rng(seed);
    TimeSignal x;
    x.sample_rate_hz = fs;
    x.samples.assign(n, 0.0);
    for (int c = 0; c < n_tones; ++c) {
        double f = 20.0 + rng.uniform() * (0.35 * fs - 20.0);
        double ph = rng.uniform() * 2.0 * M_PI;
        double a = 0.1 + rng.uniform();
        for (int i = 0; i < n; ++i)
            x.samples[i] += a * std::cos(2.0 * M_PI * f * i / fs + ph);
    }
    for (int i = 0; i < taper; ++i) {
        double g = 0.5 - 0.5 * std::cos(M_PI * i / taper);
        x.samples[i] *= g;
        x.samples[n - 1 - i] *= g;
    }
    return x;
}

// Loss node mu1 d_abs(Y, y) + mu2 d_rad(Y, y) rebuilt from primitive ops so
// the gradient checks exercise the same lifted distances as the estimator.
int rad_lift_node(net::Tape& t, int y, const LossConfig& cfg) {
    int m = ops::cmag(t, y);
    int s = ops::divide(t, ops::pow_const(t, ops::add_const(t, m, cfg.delta), cfg.q),
                        ops::add_const(t, m, cfg.eps_rad));
    return ops::stack2(t, ops::mul(t, s, ops::slice_row(t, y, 0)),
                       ops::mul(t, s, ops::slice_row(t, y, 1)));
}

int half_sq_norm_node(net::Tape& t, int a, int b) {
    int d = ops::sub(t, a, b);
    return ops::mul_const(t, ops::sum(t, ops::mul(t, d, d)), 0.5);
}

int distance_loss_node(net::Tape& t, int Y, int y, const LossConfig& cfg) {
    auto abs_lift = [&](int z) {
        return ops::pow_const(t, ops::add_const(t, ops::cmag(t, z), cfg.delta), cfg.q);
    };
    int d_abs = half_sq_norm_node(t, abs_lift(Y), abs_lift(y));
    int d_rad = half_sq_norm_node(t, rad_lift_node(t, Y, cfg), rad_lift_node(t, y, cfg));
    return ops::add(t, ops::mul_const(t, d_abs, cfg.mu1), ops::mul_const(t, d_rad, cfg.mu2));
}

int complex_constant(net::Tape& t, const ComplexVec& v) {
    int n = static_cast<int>(v.size());
    net::Tensor x{2, n};
    for (int l = 0; l < n; ++l) {
        x[l] = v[l].real();
        x[n + l] = v[l].imag();
    }
    return t.constant(std::move(x));
}

// ---------------------------------------------------------------- criterion 1

void criterion_gabor_roundtrip() {
    double t0 = now_s();
    double fs = 48000.0;
    GaborConfig g = GaborConfig::defaults(fs);
    g.validate();
    TimeSignal x = tapered_test_signal(48000, fs, 40, 4096, 2026);
    Spectrogram Z = analyze(x, g);
    TimeSignal y = synthesize(Z, g);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < x.samples.size(); ++i) {
        double d = y.samples[i] - x.samples[i];
        num += d * d;
        den += x.samples[i] * x.samples[i];
    }
    double rel = std::sqrt(num / den);
    double dt = now_s() - t0;
    bool ok = y.samples.size() == x.samples.size() && rel <= 1e-6 && dt <= 10.0;
    report(1, "gabor round trip", ok,
           fmt("relative l2 error %.3g (<= 1e-6), %.2f s (<= 10 s)", rel, dt));
}

// ---------------------------------------------------------------- criterion 2

void criterion_closed_form_spectrum() {
    double fs = 48000.0;
    GaborConfig g = GaborConfig::defaults(fs);
    int n_har = 8;
    double f1 = 440.0, b = 1e-2;
    std::vector<double> amp(n_har), phase(n_har);
    RandomStream rng(77);
    for (int h = 0; h < n_har; ++h) {
        amp[h] = 1.0 / (h + 1.0);
        phase[h] = rng.uniform() * 2.0 * M_PI;
    }
    std::vector<double> freqs = harmonic_frequencies(f1, b, n_har);

    TimeSignal x;
    x.sample_rate_hz = fs;
    x.samples.resize(48000);
    for (size_t i = 0; i < x.samples.size(); ++i) {
        double t = static_cast<double>(i) / fs;
        double v = 0.0;
        for (int h = 0; h < n_har; ++h)
            v += amp[h] * std::cos(2.0 * M_PI * freqs[h] * t + phase[h]);
        x.samples[i] = v;
    }
    Spectrogram Z = analyze(x, g);

    // Interior frame near the middle of the signal.
    int k = Z.n_len / 2;
    double tk = Z.frame_time_s(k, g);

    ToneState tone;
    tone.nu = static_cast<int>(f1 / g.beta_hz);
    tone.nu_tilde = f1 / g.beta_hz - tone.nu;
    tone.b = b;
    tone.sigma = g.sigma_hz();
    tone.coeffs.resize(n_har);
    for (int h = 0; h < n_har; ++h) {
        double ph = phase[h] + 2.0 * M_PI * freqs[h] * tk;
        tone.coeffs[h] = 0.5 * amp[h] * std::complex<double>(std::cos(ph), std::sin(ph));
    }
    ComplexVec y = tone_spectrum_direct(tone, g);

    double peak = 0.0, worst = 0.0;
    for (int l = 0; l < g.n_spc; ++l) peak = std::max(peak, std::abs(Z.at(k, l)));
    for (int l = 0; l < g.n_spc; ++l)
        worst = std::max(worst, std::abs(Z.at(k, l) - y[l]));
    bool ok = worst <= 1e-3 * peak;
    report(2, "closed-form spectrum match", ok,
           fmt("max deviation %.3g of peak %.3g (ratio %.3g <= 1e-3)", worst, peak,
               worst / peak));
}

// ---------------------------------------------------------------- criterion 3

struct GradStat {
    double worst = 0.0;
    int points = 0;
};

void grad_point(GradStat& st, double ana, double fd, double scale) {
    double denom = std::max({std::fabs(fd), std::fabs(ana), 1e-6 * scale});
    st.worst = std::max(st.worst, std::fabs(fd - ana) / denom);
    ++st.points;
}

// Tone model: loss through peak_superposition w.r.t. amplitudes, nu_tilde
// and sigma.
GradStat grads_tone_model() {
    GaborConfig g = small_gabor();
    g.validate();
    LossConfig lc;
    PolicyConfig pc = tiny_policy(g);
    ComplexVec Yv = random_unit_spectrum(g.n_spc, 5);
    int n_har = pc.n_har;

    net::Tensor amps0{2, n_har};
    RandomStream rng(31);
    for (size_t i = 0; i < amps0.size(); ++i) amps0[i] = 0.4 * rng.normal();
    double nut0 = 0.35, sig0 = 95.0;
    int nu = 7;
    double b = 3e-3;

    auto eval = [&](const net::Tensor& amps, double nut, double sig, bool want_grads,
                    std::vector<double>* g_amps, double* g_nut, double* g_sig) {
        net::Tape t;
        int a_id = t.leaf(net::Tensor(amps));
        net::Tensor nt{1};
        nt[0] = nut;
        int nut_id = t.leaf(std::move(nt));
        net::Tensor sg{1};
        sg[0] = sig;
        int sig_id = t.leaf(std::move(sg));
        int y = ops::peak_superposition(t, a_id, nut_id, sig_id, nu, b, g);
        int loss = distance_loss_node(t, complex_constant(t, Yv), y, lc);
        double L = t.val(loss)[0];
        if (want_grads) {
            t.backward({{loss, 1.0}});
            g_amps->assign(t.grad(a_id).v.begin(), t.grad(a_id).v.end());
            *g_nut = t.grad(nut_id)[0];
            *g_sig = t.grad(sig_id)[0];
        }
        return L;
    };

    std::vector<double> ga;
    double gn = 0.0, gs = 0.0;
    double L0 = eval(amps0, nut0, sig0, true, &ga, &gn, &gs);
    double scale = std::max(1.0, std::fabs(L0));

    GradStat st;
    RandomStream pick(41);
    for (int trial = 0; trial < 50; ++trial) {
        int which = static_cast<int>(pick.next_u64() % (amps0.size() + 2));
        double h = 1e-5;
        double fd, ana;
        if (which < static_cast<int>(amps0.size())) {
            net::Tensor ap = amps0, am = amps0;
            ap[which] += h;
            am[which] -= h;
            fd = (eval(ap, nut0, sig0, false, nullptr, nullptr, nullptr) -
                  eval(am, nut0, sig0, false, nullptr, nullptr, nullptr)) /
                 (2.0 * h);
            ana = ga[which];
        } else if (which == static_cast<int>(amps0.size())) {
            fd = (eval(amps0, nut0 + h, sig0, false, nullptr, nullptr, nullptr) -
                  eval(amps0, nut0 - h, sig0, false, nullptr, nullptr, nullptr)) /
                 (2.0 * h);
            ana = gn;
        } else {
            double hs = 1e-3;  // sigma is O(100) Hz
            fd = (eval(amps0, nut0, sig0 + hs, false, nullptr, nullptr, nullptr) -
                  eval(amps0, nut0, sig0 - hs, false, nullptr, nullptr, nullptr)) /
                 (2.0 * hs);
            ana = gs;
        }
        grad_point(st, ana, fd, scale);
    }
    return st;
}

// Phase solver: loss through lsq_solve + peak_superposition w.r.t. the
// artificial spectrum v, nu_tilde and sigma.
GradStat grads_phase_solver() {
    GaborConfig g = small_gabor();
    g.validate();
    LossConfig lc;
    PolicyConfig pc = tiny_policy(g);
    ComplexVec Yv = random_unit_spectrum(g.n_spc, 9);
    int n_har = pc.n_har;
    int nu = 5;
    double b = 1e-3;

    net::Tensor v0{2, g.n_spc};
    RandomStream rng(53);
    for (size_t i = 0; i < v0.size(); ++i) v0[i] = 0.5 * rng.normal();
    double nut0 = -0.2, sig0 = 80.0;

    auto eval = [&](const net::Tensor& v, double nut, double sig, bool want_grads,
                    std::vector<double>* g_v, double* g_nut, double* g_sig) {
        net::Tape t;
        int v_id = t.leaf(net::Tensor(v));
        net::Tensor nt{1};
        nt[0] = nut;
        int nut_id = t.leaf(std::move(nt));
        net::Tensor sg{1};
        sg[0] = sig;
        int sig_id = t.leaf(std::move(sg));
        int coeffs = ops::lsq_solve(t, v_id, nut_id, sig_id, nu, b, n_har, g);
        int y = ops::peak_superposition(t, coeffs, nut_id, sig_id, nu, b, g);
        int loss = distance_loss_node(t, complex_constant(t, Yv), y, lc);
        double L = t.val(loss)[0];
        if (want_grads) {
            t.backward({{loss, 1.0}});
            g_v->assign(t.grad(v_id).v.begin(), t.grad(v_id).v.end());
            *g_nut = t.grad(nut_id)[0];
            *g_sig = t.grad(sig_id)[0];
        }
        return L;
    };

    std::vector<double> gv;
    double gn = 0.0, gs = 0.0;
    double L0 = eval(v0, nut0, sig0, true, &gv, &gn, &gs);
    double scale = std::max(1.0, std::fabs(L0));

    GradStat st;
    RandomStream pick(67);
    for (int trial = 0; trial < 50; ++trial) {
        int which = static_cast<int>(pick.next_u64() % (v0.size() + 2));
        double fd, ana;
        if (which < static_cast<int>(v0.size())) {
            double h = 1e-5;
            net::Tensor vp = v0, vm = v0;
            vp[which] += h;
            vm[which] -= h;
            fd = (eval(vp, nut0, sig0, false, nullptr, nullptr, nullptr) -
                  eval(vm, nut0, sig0, false, nullptr, nullptr, nullptr)) /
                 (2.0 * h);
            ana = gv[which];
        } else if (which == static_cast<int>(v0.size())) {
            double h = 1e-5;
            fd = (eval(v0, nut0 + h, sig0, false, nullptr, nullptr, nullptr) -
                  eval(v0, nut0 - h, sig0, false, nullptr, nullptr, nullptr)) /
                 (2.0 * h);
            ana = gn;
        } else {
            double hs = 1e-3;
            fd = (eval(v0, nut0, sig0 + hs, false, nullptr, nullptr, nullptr) -
                  eval(v0, nut0, sig0 - hs, false, nullptr, nullptr, nullptr)) /
                 (2.0 * hs);
            ana = gs;
        }
        grad_point(st, ana, fd, scale);
    }
    return st;
}

// U-Net: total rollout loss (the full chain network -> tone model -> phase
// solver -> composite loss) w.r.t. network weights at fixed draws.
GradStat grads_unet() {
    GaborConfig g = small_gabor();
    g.validate();
    net::UNet unet(tiny_unet());
    RandomStream wrng(11, 0x696e6974, 0, 0);
    unet.init(wrng);
    Dictionary dict = tiny_dict();
    PolicyConfig pc = tiny_policy(g);
    ComplexVec Y = random_unit_spectrum(g.n_spc, 3);
    std::vector<double> r = {1.0, 1.0};

    Rollout base = rollout(unet, dict, Y, g, pc, r, DecodeMode::Sample, 42, 7, 5);
    ForcedDraws fdraws;
    for (const auto& tone : base.frame.tones)
        fdraws.tones.push_back({tone.nu, tone.instrument, tone.b, tone.u});
    auto run = [&]() {
        return rollout(unet, dict, Y, g, pc, r, DecodeMode::Sample, 42, 7, 5, &fdraws)
            .loss;
    };

    double scale = std::max(1.0, std::fabs(base.loss));
    base.tape->backward({{base.loss_id, 1.0}});

    GradStat st;
    RandomStream pick(99);
    for (int trial = 0; trial < 50; ++trial) {
        size_t p = pick.next_u64() % unet.num_params();
        size_t i = pick.next_u64() % unet.param(p).size();
        double ana = base.tape->has_grad(base.param_ids[p])
                         ? base.tape->grad(base.param_ids[p])[i]
                         : 0.0;
        double h = 1e-5 * std::max(1.0, std::fabs(unet.param(p)[i]));
        double save = unet.param(p)[i];
        unet.param(p)[i] = save + h;
        double lp = run();
        unet.param(p)[i] = save - h;
        double lm = run();
        unet.param(p)[i] = save;
        grad_point(st, ana, (lp - lm) / (2.0 * h), scale);
    }
    return st;
}

void criterion_gradient_suite() {
    double t0 = now_s();
    GradStat tone = grads_tone_model();
    GradStat solver = grads_phase_solver();
    GradStat unet = grads_unet();
    double dt = now_s() - t0;
    double tol = 1e-4;
    bool ok = tone.worst <= tol && solver.worst <= tol && unet.worst <= tol &&
              tone.points == 50 && solver.points == 50 && unet.points == 50 &&
              dt <= 300.0;
    report(3, "gradient suite", ok,
           fmt("worst relative error: tone model %.2e, phase solver %.2e, "
               "u-net %.2e (<= 1e-4 each, 50 points each), %.1f s (<= 300 s)",
               tone.worst, solver.worst, unet.worst, dt));
}

// ---------------------------------------------------------------- criterion 4

void criterion_estimator_bias() {
    // Enumerable toy: categorical distribution pi = softmax(theta) over four
    // outcomes with fixed losses.  The estimator mirrors the per-frame rule:
    // S shared samples, the mean loss as baseline, and the policy term scaled
    // down by policy_scale.  Its expectation is
    //   policy_scale * (S-1)/S * d/dtheta E[L].
    const int K = 4, S = 9;
    const long long reps = 100000;
    double theta[K] = {0.2, -0.4, 0.7, 0.0};
    double L[K] = {1.0, 2.0, 3.0, 0.5};
    double scale = PolicyConfig{}.policy_scale;

    double z = 0.0, pi[K];
    for (int k = 0; k < K; ++k) z += std::exp(theta[k]);
    for (int k = 0; k < K; ++k) pi[k] = std::exp(theta[k]) / z;
    double mean_L = 0.0;
    for (int k = 0; k < K; ++k) mean_L += pi[k] * L[k];

    // Analytic policy gradient d/dtheta_k E[L] = pi_k (L_k - E[L]).
    double expect[K];
    for (int k = 0; k < K; ++k)
        expect[k] = scale * (S - 1.0) / S * pi[k] * (L[k] - mean_L);

    double acc[K] = {0.0, 0.0, 0.0, 0.0};
    RandomStream rng(20260824);
    for (long long rep = 0; rep < reps; ++rep) {
        int draw[S];
        double lbar = 0.0;
        for (int i = 0; i < S; ++i) {
            draw[i] = rng.categorical(pi, K);
            lbar += L[draw[i]];
        }
        lbar /= S;
        for (int i = 0; i < S; ++i) {
            double adv = L[draw[i]] - lbar;
            for (int k = 0; k < K; ++k) {
                double score = (draw[i] == k ? 1.0 : 0.0) - pi[k];
                acc[k] += scale / S * score * adv;
            }
        }
    }

    double err2 = 0.0, ref2 = 0.0, unbiased2 = 0.0;
    for (int k = 0; k < K; ++k) {
        double mc = acc[k] / reps;
        err2 += (mc - expect[k]) * (mc - expect[k]);
        ref2 += expect[k] * expect[k];
        double unb = mc - expect[k] * S / (S - 1.0);  // distance to unbiased value
        unbiased2 += unb * unb;
    }
    double rel = std::sqrt(err2 / ref2);
    double rel_unbiased = std::sqrt(unbiased2 / ref2);
    // The Monte Carlo mean must land on the biased value (within 2%) and must
    // be distinguishable from the unbiased gradient (which is 1/(S-1) away).
    bool ok = rel <= 0.02 && rel_unbiased > 0.05;
    report(4, "estimator bias law", ok,
           fmt("relative distance to (S-1)/S * scaled gradient %.4f (<= 0.02); "
               "to the unbiased value %.4f (> 0.05)",
               rel, rel_unbiased));
}

// ---------------------------------------------------------------- criterion 5

void criterion_lift_closure() {
    double worst_gamma = 0.0;
    for (double alpha : {0.7, 1.5, 3.0}) {
        for (double beta : {0.5, 2.0}) {
            for (double r : {1.0, 0.1, 0.01}) {
                double a2 = r * (alpha - 1.0) + 1.0;
                double b2 = r * beta;
                // Normalizer of f^r: log Z = r (alpha log beta - lgamma(alpha))
                // - (a2 log b2 - lgamma(a2)).
                double logZ = r * (alpha * std::log(beta) - std::lgamma(alpha)) -
                              (a2 * std::log(b2) - std::lgamma(a2));
                for (double b = 0.02; b <= 10.0; b += 0.4077) {
                    net::Tape t;
                    net::Tensor av{1}, bv{1};
                    av[0] = alpha;
                    bv[0] = beta;
                    int lf = ops::gamma_logdensity(t, t.leaf(net::Tensor(av)),
                                                   t.leaf(net::Tensor(bv)), b);
                    net::Tensor a2v{1}, b2v{1};
                    a2v[0] = a2;
                    b2v[0] = b2;
                    int lg = ops::gamma_logdensity(t, t.leaf(net::Tensor(a2v)),
                                                   t.leaf(net::Tensor(b2v)), b);
                    double lifted = std::exp(r * t.val(lf)[0] - logZ);
                    double target = std::exp(t.val(lg)[0]);
                    worst_gamma = std::max(worst_gamma, std::fabs(lifted - target));
                }
            }
        }
    }

    // Lifted Bernoulli densities sum to one over {0, 1}.
    double worst_bern = 0.0;
    for (double zlogit : {-2.5, -0.3, 0.0, 1.7}) {
        for (double r : {1.0, 0.1, 0.01}) {
            net::Tape t;
            net::Tensor zv{1};
            zv[0] = zlogit;
            int zid = t.leaf(net::Tensor(zv));
            double s = std::exp(t.val(ops::bernoulli_lift_logdensity(t, zid, 0, r))[0]) +
                       std::exp(t.val(ops::bernoulli_lift_logdensity(t, zid, 1, r))[0]);
            worst_bern = std::max(worst_bern, std::fabs(s - 1.0));
        }
    }

    // Lifted (masked) categorical densities sum to one over the allowed set.
    double worst_cat = 0.0;
    {
        RandomStream rng(8);
        net::Tensor logits{7};
        for (size_t i = 0; i < logits.size(); ++i) logits[i] = 2.0 * rng.normal();
        std::vector<char> mask = {1, 1, 0, 1, 1, 0, 1};
        for (double r : {1.0, 0.1, 0.01}) {
            net::Tape t;
            int lid = t.leaf(net::Tensor(logits));
            double s = 0.0;
            for (int k = 0; k < 7; ++k) {
                if (!mask[k]) continue;
                s += std::exp(t.val(ops::log_softmax_pick(t, lid, mask, k, r))[0]);
            }
            worst_cat = std::max(worst_cat, std::fabs(s - 1.0));
        }
    }

    bool ok = worst_gamma <= 1e-9 && worst_bern <= 1e-12 && worst_cat <= 1e-12;
    report(5, "lift closure", ok,
           fmt("gamma pointwise %.2e (<= 1e-9), bernoulli sum %.2e, "
               "categorical sum %.2e (<= 1e-12 each)",
               worst_gamma, worst_bern, worst_cat));
}

// ---------------------------------------------------------------- criterion 6

void criterion_metrics_oracle() {
    // estimate = reference + orthogonal noise at 1% energy.  All sines sit on
    // full periods of the 1 s block, so the orthogonality is exact.
    int n = 8000;
    double fs = 8000.0;
    auto sine = [&](double f) {
        TimeSignal s;
        s.sample_rate_hz = fs;
        s.samples.resize(n);
        for (int i = 0; i < n; ++i) s.samples[i] = std::sin(2.0 * M_PI * f * i / fs);
        return s;
    };
    TimeSignal r1 = sine(400.0), r2 = sine(625.0), w = sine(1000.0);
    double er = 0.0, ew = 0.0;
    for (int i = 0; i < n; ++i) {
        er += r1.samples[i] * r1.samples[i];
        ew += w.samples[i] * w.samples[i];
    }
    double gain = std::sqrt(0.01 * er / ew);
    TimeSignal e1 = r1;
    double ee = 0.0;
    for (int i = 0; i < n; ++i) {
        e1.samples[i] += gain * w.samples[i];
        ee += e1.samples[i] * e1.samples[i];
    }

    auto scores = bss_eval({e1, r2}, {r1, r2});
    double sdr = scores[0].sdr_db;
    bool sdr_ok = std::fabs(sdr - 20.0) <= 0.01;

    // Energy completeness of the decomposition, recovered from the ratios:
    // target energy is ||r1||^2, artifacts = target * 10^(-SDR/10) (there is
    // no interference), and the parts must sum to the estimate energy.
    double rebuilt = er * (1.0 + std::pow(10.0, -sdr / 10.0));
    double rel = std::fabs(rebuilt - ee) / ee;
    bool ok = sdr_ok && scores[0].sir_db == 300.0 && rel <= 1e-9;
    report(6, "metrics oracle", ok,
           fmt("SDR %.5f dB (20.00 +- 0.01), energy closure %.2e (<= 1e-9)", sdr, rel));
}

// ---------------------------------------------------------------- criterion 7

void criterion_synthetic_separation() {
    double t0 = now_s();
    GaborConfig g = small_gabor();
    g.validate();
    int n_har = 4;
    // Two fixed timbres: a dark (0.5)^h column and a bright near-flat column.
    Dictionary truth;
    truth.n_har = n_har;
    truth.n_ins = 2;
    truth.entries = {1.0, 1.0, 0.5, 0.9, 0.25, 0.8, 0.125, 0.7};

    // 20 s mixture: twenty one-second notes per instrument, disjoint pitch
    // ranges, short raised-cosine note tapers.
    double fs = g.sample_rate_hz;
    int n = static_cast<int>(20.0 * fs);
    std::vector<TimeSignal> refs(2);
    RandomStream prng(2024);
    const int notes1[] = {5, 7, 9, 6, 8, 5, 9, 7, 6, 8, 5, 7, 9, 6, 8, 5, 9, 7, 6, 8};
    const int notes2[] = {13, 16, 19, 14, 17, 19, 13, 16, 17, 14,
                          13, 19, 16, 14, 17, 16, 13, 19, 17, 14};
    for (int ins = 0; ins < 2; ++ins) {
        TimeSignal& x = refs[ins];
        x.sample_rate_hz = fs;
        x.samples.assign(n, 0.0);
        const int* notes = ins == 0 ? notes1 : notes2;
        double amp = ins == 0 ? 0.5 : 0.35;
        for (int note = 0; note < 20; ++note) {
            int lo = note * n / 20, hi = (note + 1) * n / 20;
            double f1 = g.beta_hz * notes[note];
            double ph[4];
            for (int h = 0; h < n_har; ++h) ph[h] = prng.uniform() * 2.0 * M_PI;
            int taper = static_cast<int>(0.05 * fs);
            for (int i = lo; i < hi; ++i) {
                double env = 1.0;
                if (i - lo < taper) env = 0.5 - 0.5 * std::cos(M_PI * (i - lo) / taper);
                if (hi - 1 - i < taper)
                    env = std::min(env, 0.5 - 0.5 * std::cos(M_PI * (hi - 1 - i) / taper));
                double t = i / fs, v = 0.0;
                for (int h = 0; h < n_har; ++h) {
                    double f = f1 * (h + 1);
                    if (f >= 0.5 * fs) continue;
                    v += truth.at(h, ins) * std::cos(2.0 * M_PI * f * t + ph[h]);
                }
                x.samples[i] += amp * env * v;
            }
        }
    }
    TimeSignal mix;
    mix.sample_rate_hz = fs;
    mix.samples.assign(n, 0.0);
    for (int i = 0; i < n; ++i) mix.samples[i] = refs[0].samples[i] + refs[1].samples[i];

    net::UNetConfig nc;
    nc.n_ins = 2;
    nc.n_spc = 64;
    nc.strides = {4, 4, 4};
    nc.channels = {12, 16, 20};
    nc.kernel = 5;
    nc.trunk_channels = 8;
    nc.nu_min = 3;
    nc.nu_max = 28;
    PolicyConfig pc;
    pc.n_har = n_har;
    // Tone-model material analyzed on its own lattice has peaks of width
    // exactly 1/(2 pi zeta); floor sigma close to that so the width head only
    // refines.  The raised learning rate matches the reduced budget.
    pc.sigma_min_hz = 0.8 / (2.0 * M_PI * g.zeta_s);
    TrainConfig tc;
    tc.iterations = 5000;
    tc.batch_size = 6;
    tc.lr_theta = 1e-2;
    tc.freeze_dictionary = true;
    tc.checkpoint_every = 1000000;
    tc.augment_factor = 4.0;
    tc.seeds = {0};

    GaborConfig aug = g;
    aug.alpha_s = g.alpha_s / tc.augment_factor;
    aug.validate();
    Spectrogram Z = analyze(mix, aug);

    TrainState state = init_train_state(nc, n_har, tc.seeds[0]);
    state.dict = truth;
    TrainResult res = train(std::move(state), Z, aug, pc, tc);

    auto tracks = separate(mix, res.state.net, res.state.dict, g, pc);
    auto scores = bss_eval(tracks, refs);
    double mean_sdr = (scores[0].sdr_db + scores[1].sdr_db) / 2.0;
    double mean_sir = (scores[0].sir_db + scores[1].sir_db) / 2.0;
    double dt = now_s() - t0;
    bool ok = mean_sir >= 10.0 && mean_sdr >= 5.0 && dt <= 3600.0 &&
              !res.numeric_failure;
    report(7, "synthetic separation end to end", ok,
           fmt("mean SIR %.2f dB (>= 10), mean SDR %.2f dB (>= 5) "
               "[per track: sdr %.2f/%.2f sir %.2f/%.2f], %lld iterations, %.0f s (<= 3600 s)",
               mean_sir, mean_sdr, scores[0].sdr_db, scores[1].sdr_db, scores[0].sir_db,
               scores[1].sir_db, res.state.iteration, dt));
}

// ---------------------------------------------------------------- criterion 8

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_cmd(const std::string& cmd) { return std::system(cmd.c_str()); }

void criterion_cli_determinism(const std::string& unmix_bin) {
    fs::path dir = fs::temp_directory_path() / "unmix_acceptance_cli";
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir);

    // Small two-tone mixture on the 8 kHz lattice.
    TimeSignal x;
    x.sample_rate_hz = 8000.0;
    x.samples.resize(1600);
    for (size_t i = 0; i < x.samples.size(); ++i) {
        double t = static_cast<double>(i) / 8000.0;
        x.samples[i] = 0.6 * std::sin(2.0 * M_PI * 250.0 * t) +
                       0.4 * std::sin(2.0 * M_PI * 1130.0 * t + 0.7);
    }
    write_wav((dir / "mix.wav").string(), x);

    {
        std::ofstream f(dir / "cfg.txt");
        f << "gabor.zeta_s = 0.008\n"
          << "gabor.alpha_s = 0.004\n"
          << "gabor.beta_hz = 62.5\n"
          << "gabor.n_spc = 64\n"
          << "unet.n_ins = 2\n"
          << "unet.strides = 4,4\n"
          << "unet.channels = 6,8\n"
          << "unet.kernel = 5\n"
          << "unet.trunk_channels = 6\n"
          << "unet.nu_min = 3\n"
          << "unet.nu_max = 28\n"
          << "n_har = 4\n"
          << "train.batch_size = 2\n"
          << "train.checkpoint_every = 4\n";
    }

    auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
    std::string base = "'" + unmix_bin + "'";
    std::string train_tail = " --config " + q(dir / "cfg.txt") + " --seed 11 --iterations 8 > " +
                             q(dir / "log.txt") + " 2>&1";
    int rc1 = run_cmd(base + " train --input " + q(dir / "mix.wav") + " --output-dir " +
                      q(dir / "runA") + train_tail);
    int rc2 = run_cmd(base + " train --input " + q(dir / "mix.wav") + " --output-dir " +
                      q(dir / "runB") + train_tail);

    std::string histA = slurp(dir / "runA" / "history.seed11.csv");
    std::string histB = slurp(dir / "runB" / "history.seed11.csv");
    bool train_ok = rc1 == 0 && rc2 == 0 && !histA.empty() && histA == histB;

    std::string sep_tail = " --checkpoint " + q(dir / "runA" / "seed11.ckpt") + " --config " +
                           q(dir / "cfg.txt") + " >> " + q(dir / "log.txt") + " 2>&1";
    int rc3 = run_cmd(base + " separate --input " + q(dir / "mix.wav") + " --output-dir " +
                      q(dir / "sepA") + sep_tail);
    int rc4 = run_cmd(base + " separate --input " + q(dir / "mix.wav") + " --output-dir " +
                      q(dir / "sepB") + sep_tail);
    bool sep_ok = rc3 == 0 && rc4 == 0;
    int wavs = 0;
    if (sep_ok) {
        for (int ins = 1; ins <= 2; ++ins) {
            std::string name = "mix.inst" + std::to_string(ins) + ".wav";
            std::string a = slurp(dir / "sepA" / name);
            std::string b = slurp(dir / "sepB" / name);
            if (a.empty() || a != b) sep_ok = false;
            if (!a.empty()) ++wavs;
        }
    }

    bool ok = train_ok && sep_ok && wavs == 2;
    report(8, "command-line determinism", ok,
           fmt("train reruns byte-identical history: %s; separate reruns "
               "byte-identical tracks (%d files): %s",
               train_ok ? "yes" : "NO", wavs, sep_ok ? "yes" : "NO"));
    fs::remove_all(dir, ec);
}

// ---------------------------------------------------------------- criterion 9

void criterion_adamax_trace() {
    // Ten optimizer steps on f(x) = x^2 from x = 1 with lr = 0.1, against a
    // spreadsheet-style trace of the update formulas.
    const double expect[10] = {
        0.9000000049999998, 0.805168335703866,   0.7154994855061743,
        0.6309730907165355, 0.5515538210065717,  0.47719139245596487,
        0.407820705290617,  0.3433621066333877,  0.28372177678900207,
        0.22879223579868585};
    TrainConfig tc;
    double x = 1.0, m1 = 0.0, m2 = 0.0, worst = 0.0;
    for (int t = 1; t <= 10; ++t) {
        double grad = 2.0 * x;
        m2 = std::max(tc.beta2 * m2, std::fabs(grad));
        x = adamax_update(x, grad, m1, m2, 0.1, t, tc);
        worst = std::max(worst, std::fabs(x - expect[t - 1]));
    }
    report(9, "optimizer trace conformance", worst <= 1e-12,
           fmt("max deviation from the 10-step reference trace %.2e (<= 1e-12)", worst));
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path-to-unmix-binary> [criterion...]\n");
        return 2;
    }
    std::string unmix_bin = argv[1];
    std::vector<int> selected;
    for (int i = 2; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    auto wanted = [&](int idx) {
        return selected.empty() ||
               std::find(selected.begin(), selected.end(), idx) != selected.end();
    };

    try {
        if (wanted(1)) criterion_gabor_roundtrip();
        if (wanted(2)) criterion_closed_form_spectrum();
        if (wanted(3)) criterion_gradient_suite();
        if (wanted(4)) criterion_estimator_bias();
        if (wanted(5)) criterion_lift_closure();
        if (wanted(6)) criterion_metrics_oracle();
        if (wanted(7)) criterion_synthetic_separation();
        if (wanted(8)) criterion_cli_determinism(unmix_bin);
        if (wanted(9)) criterion_adamax_trace();
    } catch (const std::exception& e) {
        std::printf("acceptance run aborted: %s\n", e.what());
        return 2;
    }

    std::printf("%s\n", g_failures == 0 ? "all criteria passed"
                                        : "one or more criteria failed");
    return g_failures == 0 ? 0 : 1;
}
