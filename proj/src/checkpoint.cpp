#include "unmix/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

namespace unmix {

namespace {

constexpr char kMagic[8] = {'U', 'N', 'M', 'X', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

struct Array {
    std::vector<int> shape;
    std::vector<double> data;
};

using ArrayMap = std::map<std::string, Array>;

void put_u32(std::ofstream& f, std::uint32_t x) {
    unsigned char b[4] = {static_cast<unsigned char>(x & 0xff),
                          static_cast<unsigned char>(x >> 8 & 0xff),
                          static_cast<unsigned char>(x >> 16 & 0xff),
                          static_cast<unsigned char>(x >> 24 & 0xff)};
    f.write(reinterpret_cast<char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_f64(std::ofstream& f, double d) {
    std::uint64_t u;
    std::memcpy(&u, &d, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i) & 0xff);
    f.write(reinterpret_cast<char*>(b), 8);
}

double get_f64(std::ifstream& f) {
    unsigned char b[8];
    f.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double d;
    std::memcpy(&d, &u, 8);
    return d;
}

void write_arrays(const std::string& path, const ArrayMap& arrays) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
    f.write(kMagic, 8);
    put_u32(f, kVersion);
    put_u32(f, static_cast<std::uint32_t>(arrays.size()));
    for (const auto& [name, arr] : arrays) {
        put_u32(f, static_cast<std::uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(f, static_cast<std::uint32_t>(arr.shape.size()));
        for (int d : arr.shape) put_u32(f, static_cast<std::uint32_t>(d));
        for (double v : arr.data) put_f64(f, v);
    }
    if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

ArrayMap read_arrays(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    std::uint32_t version = get_u32(f);
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version in " + path);
    std::uint32_t count = get_u32(f);
    ArrayMap arrays;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t nl = get_u32(f);
        std::string name(nl, '\0');
        f.read(name.data(), nl);
        std::uint32_t nd = get_u32(f);
        Array arr;
        size_t total = 1;
        for (std::uint32_t d = 0; d < nd; ++d) {
            arr.shape.push_back(static_cast<int>(get_u32(f)));
            total *= static_cast<size_t>(arr.shape.back());
        }
        arr.data.resize(total);
        for (size_t k = 0; k < total; ++k) arr.data[k] = get_f64(f);
        if (!f) throw std::runtime_error("checkpoint: truncated file " + path);
        arrays.emplace(std::move(name), std::move(arr));
    }
    return arrays;
}

Array scalar(double v) { return Array{{1}, {v}}; }

Array vec(const std::vector<double>& v) {
    return Array{{static_cast<int>(v.size())}, v};
}

Array vec_int(const std::vector<int>& v) {
    Array a{{static_cast<int>(v.size())}, {}};
    a.data.assign(v.begin(), v.end());
    return a;
}

const Array& need(const ArrayMap& m, const std::string& name) {
    auto it = m.find(name);
    if (it == m.end())
        throw std::runtime_error("checkpoint: missing array " + name);
    return it->second;
}

std::vector<int> as_int(const Array& a) {
    std::vector<int> v(a.data.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = static_cast<int>(a.data[i]);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainState& state) {
    ArrayMap arrays;
    const net::UNetConfig& c = state.net.config();
    arrays["cfg.n_ins"] = scalar(c.n_ins);
    arrays["cfg.n_spc"] = scalar(c.n_spc);
    arrays["cfg.strides"] = vec_int(c.strides);
    arrays["cfg.channels"] = vec_int(c.channels);
    arrays["cfg.kernel"] = scalar(c.kernel);
    arrays["cfg.trunk_channels"] = scalar(c.trunk_channels);
    arrays["cfg.nu_min"] = scalar(c.nu_min);
    arrays["cfg.nu_max"] = scalar(c.nu_max);
    arrays["cfg.coord_start"] = scalar(c.coord_start);
    arrays["cfg.coord_end"] = scalar(c.coord_end);
    arrays["cfg.noise_std"] = scalar(c.noise_std);
    arrays["cfg.n_har"] = scalar(state.dict.n_har);
    arrays["meta.iteration"] = scalar(static_cast<double>(state.iteration));
    arrays["meta.tau"] = scalar(static_cast<double>(state.opt.tau));
    arrays["meta.seed"] = scalar(static_cast<double>(state.seed));
    arrays["meta.skipped_steps"] = scalar(state.skipped_steps);
    arrays["dict"] = Array{{state.dict.n_har, state.dict.n_ins}, state.dict.entries};
    arrays["opt.m_dict"] = vec(state.opt.m_dict);
    arrays["opt.u_dict"] = vec(state.opt.u_dict);
    for (size_t p = 0; p < state.net.num_params(); ++p) {
        const std::string& name = state.net.param_name(p);
        arrays["param." + name] = Array{state.net.param(p).shape, state.net.param(p).v};
        arrays["opt.m." + name] = Array{state.opt.m_theta[p].shape, state.opt.m_theta[p].v};
        arrays["opt.u." + name] = Array{state.opt.u_theta[p].shape, state.opt.u_theta[p].v};
    }
    write_arrays(path, arrays);
}

TrainState load_checkpoint(const std::string& path) {
    ArrayMap arrays = read_arrays(path);
    net::UNetConfig c;
    c.n_ins = static_cast<int>(need(arrays, "cfg.n_ins").data[0]);
    c.n_spc = static_cast<int>(need(arrays, "cfg.n_spc").data[0]);
    c.strides = as_int(need(arrays, "cfg.strides"));
    c.channels = as_int(need(arrays, "cfg.channels"));
    c.kernel = static_cast<int>(need(arrays, "cfg.kernel").data[0]);
    c.trunk_channels = static_cast<int>(need(arrays, "cfg.trunk_channels").data[0]);
    c.nu_min = static_cast<int>(need(arrays, "cfg.nu_min").data[0]);
    c.nu_max = static_cast<int>(need(arrays, "cfg.nu_max").data[0]);
    c.coord_start = need(arrays, "cfg.coord_start").data[0];
    c.coord_end = need(arrays, "cfg.coord_end").data[0];
    c.noise_std = need(arrays, "cfg.noise_std").data[0];
    int n_har = static_cast<int>(need(arrays, "cfg.n_har").data[0]);

    TrainState state = init_train_state(c, n_har,
        static_cast<std::uint64_t>(need(arrays, "meta.seed").data[0]));
    state.iteration = static_cast<long long>(need(arrays, "meta.iteration").data[0]);
    state.opt.tau = static_cast<long long>(need(arrays, "meta.tau").data[0]);
    state.skipped_steps = static_cast<int>(need(arrays, "meta.skipped_steps").data[0]);
    state.dict.entries = need(arrays, "dict").data;
    state.opt.m_dict = need(arrays, "opt.m_dict").data;
    state.opt.u_dict = need(arrays, "opt.u_dict").data;
    for (size_t p = 0; p < state.net.num_params(); ++p) {
        const std::string& name = state.net.param_name(p);
        const Array& w = need(arrays, "param." + name);
        if (w.data.size() != state.net.param(p).size())
            throw std::runtime_error("checkpoint: size mismatch for " + name);
        state.net.param(p).v = w.data;
        state.opt.m_theta[p].v = need(arrays, "opt.m." + name).data;
        state.opt.u_theta[p].v = need(arrays, "opt.u." + name).data;
    }
    return state;
}

}  // namespace unmix
