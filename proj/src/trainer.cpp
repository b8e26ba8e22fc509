#include "unmix/trainer.hpp"

#include "unmix/inference.hpp"
#include "unmix/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unmix {

namespace {
constexpr std::uint64_t kShuffleTag = 0x73687566;  // batch-shuffle stream key
constexpr int kMaxConsecutiveSkips = 50;
}  // namespace

void TrainConfig::validate() const {
    if (iterations < 0) throw std::invalid_argument("TrainConfig: iterations < 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size < 1");
    if (!(lr_theta > 0.0) || !(lr_dict > 0.0))
        throw std::invalid_argument("TrainConfig: learning rates must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
        throw std::invalid_argument("TrainConfig: betas must be in (0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("TrainConfig: eps must be positive");
    if (!(augment_factor >= 1.0))
        throw std::invalid_argument("TrainConfig: augment_factor must be >= 1");
    if (checkpoint_every < 1)
        throw std::invalid_argument("TrainConfig: checkpoint_every < 1");
}

Dictionary init_dictionary(int n_har, int n_ins) {
    if (n_har < 1 || n_ins < 1)
        throw std::invalid_argument("init_dictionary: counts must be >= 1");
    Dictionary d;
    d.n_har = n_har;
    d.n_ins = n_ins;
    d.entries.resize(static_cast<size_t>(n_har) * n_ins);
    for (int ins = 0; ins < n_ins; ++ins) {
        double base = 0.5 / static_cast<double>(ins + 1);
        for (int h = 0; h < n_har; ++h)
            d.at(h, ins) = std::pow(base, static_cast<double>(h));
    }
    return d;
}

void adamax_step_theta(net::UNet& net, const std::vector<net::Tensor>& grads,
                       OptimizerState& opt, const TrainConfig& cfg) {
    for (size_t p = 0; p < net.num_params(); ++p) {
        net::Tensor& param = net.param(p);
        const net::Tensor& g = grads[p];
        net::Tensor& m1 = opt.m_theta[p];
        net::Tensor& m2 = opt.u_theta[p];
        for (size_t i = 0; i < param.size(); ++i) {
            m2[i] = std::max(cfg.beta2 * m2[i], std::fabs(g[i]));
            param[i] = adamax_update(param[i], g[i], m1[i], m2[i], cfg.lr_theta,
                                     opt.tau, cfg);
        }
    }
}

void adamax_step_dict(Dictionary& dict, const std::vector<double>& grad,
                      OptimizerState& opt, const TrainConfig& cfg) {
    for (int ins = 0; ins < dict.n_ins; ++ins) {
        double colmax = 0.0;
        for (int h = 0; h < dict.n_har; ++h)
            colmax = std::max(colmax, std::fabs(grad[static_cast<size_t>(h) * dict.n_ins + ins]));
        opt.u_dict[ins] = std::max(cfg.beta2 * opt.u_dict[ins], colmax);
        for (int h = 0; h < dict.n_har; ++h) {
            size_t i = static_cast<size_t>(h) * dict.n_ins + ins;
            dict.entries[i] = adamax_update(dict.entries[i], grad[i], opt.m_dict[i],
                                            opt.u_dict[ins], cfg.lr_dict, opt.tau, cfg);
        }
    }
}

TrainState init_train_state(const net::UNetConfig& ncfg, int n_har,
                            std::uint64_t seed) {
    TrainState s{net::UNet(ncfg), init_dictionary(n_har, ncfg.n_ins), {}, 0, seed, 0};
    RandomStream rng(seed, 0x696e6974, 0, 0);  // weight-init stream
    s.net.init(rng);
    s.opt.m_theta.resize(s.net.num_params());
    s.opt.u_theta.resize(s.net.num_params());
    for (size_t p = 0; p < s.net.num_params(); ++p) {
        s.opt.m_theta[p] = net::Tensor(s.net.param(p).shape);
        s.opt.u_theta[p] = net::Tensor(s.net.param(p).shape);
    }
    s.opt.m_dict.assign(s.dict.entries.size(), 0.0);
    s.opt.u_dict.assign(static_cast<size_t>(ncfg.n_ins), 0.0);
    return s;
}

namespace {

ComplexVec normalized_frame(const Spectrogram& Z, int k) {
    ComplexVec y(Z.n_spc);
    double peak = 0.0;
    for (int l = 0; l < Z.n_spc; ++l) peak = std::max(peak, std::abs(Z.at(k, l)));
    double scale = peak > 0.0 ? peak : 1.0;
    for (int l = 0; l < Z.n_spc; ++l) y[l] = Z.at(k, l) / scale;
    return y;
}

std::vector<int> epoch_permutation(std::uint64_t seed, long long epoch, int n) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    RandomStream rng(seed, kShuffleTag, static_cast<std::uint64_t>(epoch), 0);
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

HistoryRow probe_losses(const TrainState& state, const std::vector<ComplexVec>& frames,
                        const GaborConfig& gcfg, const PolicyConfig& pcfg,
                        long long iteration) {
    HistoryRow row;
    row.iteration = iteration;
    int n = static_cast<int>(frames.size());
    int probes = std::min(n, 4);
    for (int i = 0; i < probes; ++i) {
        int k = probes == 1 ? 0 : static_cast<int>((static_cast<long long>(i) * (n - 1)) / (probes - 1));
        FramePrediction fp = decode_frame(state.net, state.dict, frames[k], gcfg, pcfg);
        row.d_abs += dist_abs(frames[k], fp.y_spr, pcfg.loss);
        row.d_rad += dist_rad(frames[k], fp.y_dir, pcfg.loss);
        double reg = 0.0;
        for (size_t j = 0; j < fp.tones.size(); ++j)
            reg += dist_rad(fp.y_tone_dir[j], fp.y_tone[j], pcfg.loss);
        row.reg += reg / static_cast<double>(fp.tones.size());
    }
    if (probes > 0) {
        row.d_abs /= probes;
        row.d_rad /= probes;
        row.reg /= probes;
    }
    return row;
}

}  // namespace

TrainResult train(TrainState state, const Spectrogram& Z, const GaborConfig& gcfg,
                  const PolicyConfig& pcfg, const TrainConfig& tcfg,
                  const std::function<void(const TrainState&, const HistoryRow&)>&
                      on_checkpoint) {
    tcfg.validate();
    if (Z.n_len < 1) throw std::invalid_argument("train: no frames");

    int n_frames = Z.n_len;
    std::vector<ComplexVec> frames(n_frames);
    for (int k = 0; k < n_frames; ++k) frames[k] = normalized_frame(Z, k);

    int bpe = std::max(1, (n_frames + tcfg.batch_size - 1) / tcfg.batch_size);
    size_t s_per_frame = lift_combinations(pcfg, state.net.config().n_ins).size();

    std::vector<HistoryRow> history;
    bool numeric_failure = false;
    long long cached_epoch = -1;
    std::vector<int> perm;
    int consecutive_skips = 0;

    for (long long it = state.iteration; it < tcfg.iterations; ++it) {
        long long epoch = it / bpe;
        int bidx = static_cast<int>(it % bpe);
        if (epoch != cached_epoch) {
            perm = epoch_permutation(state.seed, epoch, n_frames);
            cached_epoch = epoch;
        }

        std::vector<net::Tensor> theta_sum(state.net.num_params());
        for (size_t p = 0; p < state.net.num_params(); ++p)
            theta_sum[p] = net::Tensor(state.net.param(p).shape);
        std::vector<double> dict_sum(state.dict.entries.size(), 0.0);

        bool ok = true;
        for (int pos = 0; pos < tcfg.batch_size; ++pos) {
            int f = perm[(static_cast<long long>(bidx) * tcfg.batch_size + pos) % n_frames];
            FrameGradients fg = frame_gradients(
                state.net, state.dict, frames[f], gcfg, pcfg, state.seed,
                static_cast<std::uint64_t>(it),
                static_cast<std::uint64_t>(pos) * s_per_frame);
            if (!fg.finite) {
                ok = false;
                break;
            }
            for (size_t p = 0; p < theta_sum.size(); ++p)
                for (size_t i = 0; i < theta_sum[p].size(); ++i)
                    theta_sum[p][i] += fg.theta[p][i];
            for (size_t i = 0; i < dict_sum.size(); ++i) dict_sum[i] += fg.dict[i];
        }

        if (!ok) {
            ++state.skipped_steps;
            if (++consecutive_skips >= kMaxConsecutiveSkips) {
                numeric_failure = true;
                break;
            }
            state.iteration = it + 1;
            continue;
        }
        consecutive_skips = 0;

        std::vector<double> bound = dict_bound_loss_grad(state.dict);
        for (size_t i = 0; i < dict_sum.size(); ++i) dict_sum[i] += bound[i];

        ++state.opt.tau;
        adamax_step_theta(state.net, theta_sum, state.opt, tcfg);
        if (!tcfg.freeze_dictionary)
            adamax_step_dict(state.dict, dict_sum, state.opt, tcfg);
        state.iteration = it + 1;

        if (state.iteration % tcfg.checkpoint_every == 0 ||
            state.iteration == tcfg.iterations) {
            HistoryRow row = probe_losses(state, frames, gcfg, pcfg, state.iteration);
            history.push_back(row);
            if (on_checkpoint) on_checkpoint(state, row);
        }
    }
    return TrainResult{std::move(state), std::move(history), numeric_failure};
}

EnsembleResult run_ensemble(const TimeSignal& x, const GaborConfig& gcfg,
                            const net::UNetConfig& ncfg, const PolicyConfig& pcfg,
                            const TrainConfig& tcfg,
                            const std::vector<TimeSignal>& references) {
    if (tcfg.seeds.empty())
        throw std::invalid_argument("run_ensemble: no seeds");

    GaborConfig augmented = gcfg;
    augmented.alpha_s = gcfg.alpha_s / tcfg.augment_factor;
    augmented.validate();
    Spectrogram Z = analyze(x, augmented);

    EnsembleResult out;
    double best_sdr = -1e300;
    for (size_t si = 0; si < tcfg.seeds.size(); ++si) {
        TrainState state = init_train_state(ncfg, pcfg.n_har, tcfg.seeds[si]);
        EnsembleRun run{train(std::move(state), Z, augmented, pcfg, tcfg), {}, 0.0};
        run.tracks = separate(x, run.result.state.net, run.result.state.dict, gcfg, pcfg);
        if (!references.empty()) {
            auto scores = bss_eval(run.tracks, references);
            double mean = 0.0;
            for (const auto& s : scores) mean += s.sdr_db;
            run.mean_sdr_db = mean / static_cast<double>(scores.size());
            if (run.mean_sdr_db > best_sdr) {
                best_sdr = run.mean_sdr_db;
                out.best = static_cast<int>(si);
            }
        }
        out.runs.push_back(std::move(run));
    }
    return out;
}

}  // namespace unmix
