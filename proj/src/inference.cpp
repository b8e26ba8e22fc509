#include "unmix/inference.hpp"

#include <cmath>
#include <stdexcept>

namespace unmix {

FramePrediction decode_frame(const net::UNet& net, const Dictionary& dict,
                             const ComplexVec& Y, const GaborConfig& gcfg,
                             const PolicyConfig& pcfg) {
    Rollout roll = rollout(net, dict, Y, gcfg, pcfg, {}, DecodeMode::Mode, 0, 0, 0);
    return std::move(roll.frame);
}

std::vector<TimeSignal> separate(const TimeSignal& x, const net::UNet& net,
                                 const Dictionary& dict, const GaborConfig& gcfg,
                                 const PolicyConfig& pcfg) {
    Spectrogram Z = analyze(x, gcfg);
    int m = net.config().n_ins;
    if (net.config().n_spc != gcfg.n_spc)
        throw std::invalid_argument("separate: lattice/network bin count mismatch");

    std::vector<Spectrogram> tracks(m);
    for (int ins = 0; ins < m; ++ins) {
        tracks[ins].data.assign(Z.data.size(), {0.0, 0.0});
        tracks[ins].n_len = Z.n_len;
        tracks[ins].n_spc = Z.n_spc;
        tracks[ins].center0 = Z.center0;
        tracks[ins].signal_len = Z.signal_len;
    }

    ComplexVec Yn(gcfg.n_spc);
    for (int k = 0; k < Z.n_len; ++k) {
        double peak = 0.0;
        for (int l = 0; l < gcfg.n_spc; ++l)
            peak = std::max(peak, std::abs(Z.at(k, l)));
        double scale = peak > 0.0 ? peak : 1.0;
        for (int l = 0; l < gcfg.n_spc; ++l) Yn[l] = Z.at(k, l) / scale;

        FramePrediction frame = decode_frame(net, dict, Yn, gcfg, pcfg);
        for (size_t j = 0; j < frame.tones.size(); ++j) {
            const ToneState& tone = frame.tones[j];
            if (tone.u == 0) continue;
            Spectrogram& track = tracks[tone.instrument];
            for (int l = 0; l < gcfg.n_spc; ++l)
                track.at(k, l) += scale * frame.y_tone_dir[j][l];
        }
    }

    std::vector<TimeSignal> out;
    out.reserve(m);
    for (int ins = 0; ins < m; ++ins) out.push_back(synthesize(tracks[ins], gcfg));
    return out;
}

}  // namespace unmix
