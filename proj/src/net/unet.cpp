#include "unmix/net/unet.hpp"

#include "unmix/net/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace unmix::net {

void UNetConfig::validate() const {
    if (n_ins < 1) throw std::invalid_argument("UNetConfig: n_ins must be >= 1");
    if (strides.size() != channels.size() || strides.empty())
        throw std::invalid_argument("UNetConfig: strides/channels mismatch");
    long long prod = 1;
    for (int s : strides) {
        if (s < 2) throw std::invalid_argument("UNetConfig: stride must be >= 2");
        prod *= s;
    }
    if (n_spc <= 0 || n_spc % prod != 0)
        throw std::invalid_argument("UNetConfig: n_spc not divisible by stride product");
    if (kernel < 1 || kernel % 2 == 0)
        throw std::invalid_argument("UNetConfig: kernel must be odd");
    if (nu_min < 1 || nu_max >= n_spc || nu_min > nu_max)
        throw std::invalid_argument("UNetConfig: bad nu range");
}

UNet::UNet(UNetConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    int d = cfg_.depth();
    int cin = cfg_.input_channels() + 1;  // + coordinate channel
    for (int i = 0; i < d; ++i) {
        int ci = i == 0 ? cin : cfg_.channels[i - 1];
        add_param("down" + std::to_string(i) + ".w",
                  Tensor{cfg_.channels[i], ci, cfg_.kernel});
        add_param("down" + std::to_string(i) + ".b", Tensor{cfg_.channels[i]});
    }
    for (int i = d - 1; i >= 0; --i) {
        // Input of up-step i: the concatenated (decoder, skip) channels one
        // level below, except at the bottleneck where it is the encoder top.
        int ci = i == d - 1 ? cfg_.channels[d - 1] : 2 * cfg_.channels[i];
        int co = i == 0 ? cfg_.trunk_channels : cfg_.channels[i - 1];
        add_param("up" + std::to_string(i) + ".w", Tensor{ci, co, cfg_.kernel});
        add_param("up" + std::to_string(i) + ".b", Tensor{co});
    }
    int top = cfg_.trunk_channels + cin;
    add_param("trunk0.w", Tensor{cfg_.trunk_channels, top, 3});
    add_param("trunk0.b", Tensor{cfg_.trunk_channels});
    add_param("trunk1.w", Tensor{cfg_.trunk_channels, cfg_.trunk_channels, 1});
    add_param("trunk1.b", Tensor{cfg_.trunk_channels});
    add_param("head.w", Tensor{cfg_.output_channels(), cfg_.trunk_channels, 1});
    add_param("head.b", Tensor{cfg_.output_channels()});
    Tensor scale{cfg_.output_channels()};
    for (size_t i = 0; i < scale.size(); ++i) scale[i] = 1.0;
    add_param("head.scale", std::move(scale));
    add_param("head.shift", Tensor{cfg_.output_channels()});
}

void UNet::add_param(const std::string& name, Tensor t) {
    names_.push_back(name);
    params_.push_back(std::move(t));
}

int UNet::param_index(const std::string& name) const {
    for (size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    return -1;
}

void UNet::init(RandomStream& rng) {
    for (size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        const std::string& name = names_[i];
        if (name.size() > 2 && name.compare(name.size() - 2, 2, ".w") == 0) {
            int k = p.shape[2];
            int fan_in = p.shape[1] * k;
            int fan_out = p.shape[0] * k;
            double lim = std::sqrt(6.0 / (fan_in + fan_out));
            for (size_t j = 0; j < p.size(); ++j)
                p[j] = lim * (2.0 * rng.uniform() - 1.0);
        } else if (name == "head.scale") {
            for (size_t j = 0; j < p.size(); ++j) p[j] = 1.0;
        } else {
            for (size_t j = 0; j < p.size(); ++j) p[j] = 0.0;
        }
    }
}

std::vector<int> UNet::register_on(Tape& t) const {
    std::vector<int> ids(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) ids[i] = t.leaf(params_[i]);
    return ids;
}

int UNet::forward(Tape& t, const std::vector<int>& param_ids, int x) const {
    if (param_ids.size() != params_.size())
        throw std::invalid_argument("UNet::forward: parameter id count mismatch");
    const Tensor& vx = t.val(x);
    if (vx.shape.size() != 2 || vx.shape[0] != cfg_.input_channels() ||
        vx.shape[1] != cfg_.n_spc)
        throw std::invalid_argument("UNet::forward: bad input shape");

    Tensor coord{1, cfg_.n_spc};
    for (int l = 0; l < cfg_.n_spc; ++l)
        coord[l] = cfg_.coord_start +
                   (cfg_.coord_end - cfg_.coord_start) * l / (cfg_.n_spc - 1);
    int cur = ops::concat_rows(t, {x, t.constant(std::move(coord))});

    auto pid = [&](const std::string& name) {
        int i = param_index(name);
        return param_ids[static_cast<size_t>(i)];
    };

    int d = cfg_.depth();
    std::vector<int> skips;  // activations entering each down step
    skips.reserve(d);
    for (int i = 0; i < d; ++i) {
        skips.push_back(cur);
        cur = ops::relu(t, ops::conv1d(t, cur,
                                       pid("down" + std::to_string(i) + ".w"),
                                       pid("down" + std::to_string(i) + ".b"),
                                       cfg_.strides[i]));
    }
    for (int i = d - 1; i >= 0; --i) {
        cur = ops::relu(t, ops::conv1d_transpose(
                               t, cur, pid("up" + std::to_string(i) + ".w"),
                               pid("up" + std::to_string(i) + ".b"),
                               cfg_.strides[i]));
        cur = ops::concat_rows(t, {cur, skips[i]});
    }
    cur = ops::relu(t, ops::conv1d(t, cur, pid("trunk0.w"), pid("trunk0.b"), 1));
    cur = ops::relu(t, ops::conv1d(t, cur, pid("trunk1.w"), pid("trunk1.b"), 1));
    cur = ops::conv1d(t, cur, pid("head.w"), pid("head.b"), 1);

    // Per-channel trainable scale and shift.
    int n_out = cfg_.output_channels();
    std::vector<int> rows;
    rows.reserve(n_out);
    for (int c = 0; c < n_out; ++c) {
        int row = ops::slice_row(t, cur, c);
        row = ops::smul(t, ops::pick(t, pid("head.scale"), c), row);
        row = ops::sadd(t, ops::pick(t, pid("head.shift"), c), row);
        rows.push_back(row);
    }
    return ops::concat_rows(t, rows);
}

}  // namespace unmix::net
