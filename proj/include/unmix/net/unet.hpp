#pragma once

#include "unmix/net/tensor.hpp"
#include "unmix/rng.hpp"

#include <string>
#include <vector>

namespace unmix::net {

// 1-D U-Net over the frequency axis.  Head channels come out head-major:
// [logits | a | sigma | nu_tilde | alpha_gamma | beta_gamma | u | v_re | v_im],
// each block holding n_ins channels of length n_spc.
struct UNetConfig {
    int n_ins = 2;
    int n_spc = 6144;
    std::vector<int> strides = {4, 4, 4, 4, 4, 3, 2};
    std::vector<int> channels = {80, 160, 240, 320, 400, 480, 560};
    int kernel = 5;
    int trunk_channels = 80;
    int nu_min = 10;
    int nu_max = 3000;
    double coord_start = 0.01;  // CoordConv ramp endpoints
    double coord_end = 0.0;
    double noise_std = 1e-6;

    int depth() const { return static_cast<int>(strides.size()); }
    // 2 complex residuals + their magnitudes + 2 complex spectra per
    // already-placed tone slot.
    int input_channels() const { return 6 + 4 * (n_ins - 1); }
    int output_channels() const { return 9 * n_ins; }

    void validate() const;  // throws std::invalid_argument
};

// Offsets of the head blocks inside the [9 m, n_spc] output.
struct HeadLayout {
    int n_ins;
    int logits(int ins) const { return ins; }
    int a(int ins) const { return n_ins + ins; }
    int sigma(int ins) const { return 2 * n_ins + ins; }
    int nu_tilde(int ins) const { return 3 * n_ins + ins; }
    int alpha_gamma(int ins) const { return 4 * n_ins + ins; }
    int beta_gamma(int ins) const { return 5 * n_ins + ins; }
    int u(int ins) const { return 6 * n_ins + ins; }
    int v_re(int ins) const { return 7 * n_ins + ins; }
    int v_im(int ins) const { return 8 * n_ins + ins; }
};

// Weight container plus the forward graph.  Parameters are held in a fixed
// order; register_on() creates one differentiable leaf per parameter on a
// tape so each sample can carry its own graph over shared weights.
class UNet {
public:
    explicit UNet(UNetConfig cfg);

    const UNetConfig& config() const { return cfg_; }
    HeadLayout heads() const { return HeadLayout{cfg_.n_ins}; }

    size_t num_params() const { return params_.size(); }
    const std::string& param_name(size_t i) const { return names_[i]; }
    Tensor& param(size_t i) { return params_[i]; }
    const Tensor& param(size_t i) const { return params_[i]; }
    int param_index(const std::string& name) const;  // -1 if absent

    // Glorot-uniform weights, zero biases, unit scales, zero shifts.
    void init(RandomStream& rng);

    std::vector<int> register_on(Tape& t) const;

    // x: [input_channels, n_spc] node.  Appends the coordinate channel,
    // runs the encoder/decoder and the trunk, and returns the
    // [9 n_ins, n_spc] head tensor after per-channel scale and shift.
    int forward(Tape& t, const std::vector<int>& param_ids, int x) const;

private:
    UNetConfig cfg_;
    std::vector<std::string> names_;
    std::vector<Tensor> params_;

    void add_param(const std::string& name, Tensor t);
};

}  // namespace unmix::net
