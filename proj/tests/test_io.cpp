#include "doctest.h"

#include "unmix/checkpoint.hpp"
#include "unmix/config.hpp"
#include "unmix/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

using namespace unmix;

namespace {

std::string tmp_path(const std::string& name) {
    return "io_test_" + name;
}

struct FileGuard {
    std::string path;
    explicit FileGuard(std::string p) : path(std::move(p)) {}
    ~FileGuard() { std::remove(path.c_str()); }
};

void wr_u32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(x & 0xff);
    v.push_back(x >> 8 & 0xff);
    v.push_back(x >> 16 & 0xff);
    v.push_back(x >> 24 & 0xff);
}

void wr_u16(std::vector<unsigned char>& v, std::uint16_t x) {
    v.push_back(x & 0xff);
    v.push_back(x >> 8 & 0xff);
}

// Minimal 16-bit PCM writer for read-path tests.
void write_pcm16(const std::string& path, const std::vector<std::vector<std::int16_t>>& channels,
                 std::uint32_t rate) {
    std::uint16_t nch = static_cast<std::uint16_t>(channels.size());
    std::uint32_t n = static_cast<std::uint32_t>(channels[0].size());
    std::vector<unsigned char> buf;
    buf.insert(buf.end(), {'R', 'I', 'F', 'F'});
    wr_u32(buf, 4 + 24 + 8 + 2 * nch * n);
    buf.insert(buf.end(), {'W', 'A', 'V', 'E'});
    buf.insert(buf.end(), {'f', 'm', 't', ' '});
    wr_u32(buf, 16);
    wr_u16(buf, 1);
    wr_u16(buf, nch);
    wr_u32(buf, rate);
    wr_u32(buf, rate * 2 * nch);
    wr_u16(buf, static_cast<std::uint16_t>(2 * nch));
    wr_u16(buf, 16);
    buf.insert(buf.end(), {'d', 'a', 't', 'a'});
    wr_u32(buf, 2 * nch * n);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint16_t c = 0; c < nch; ++c)
            wr_u16(buf, static_cast<std::uint16_t>(channels[c][i]));
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
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

}  // namespace

TEST_CASE("float wav round trip preserves samples to float precision") {
    FileGuard fg(tmp_path("roundtrip.wav"));
    TimeSignal x;
    x.sample_rate_hz = 8000.0;
    x.samples.resize(500);
    for (int i = 0; i < 500; ++i) x.samples[i] = 0.7 * std::sin(0.01 * i * i);
    write_wav(fg.path, x);
    TimeSignal y = read_wav(fg.path);
    CHECK(y.sample_rate_hz == 8000.0);
    REQUIRE(y.samples.size() == x.samples.size());
    for (size_t i = 0; i < x.samples.size(); ++i)
        CHECK(y.samples[i] == doctest::Approx(x.samples[i]).epsilon(1e-7));

    // Round trip of already float32-quantized data is bit exact.
    TimeSignal z = y;
    write_wav(fg.path, z);
    TimeSignal z2 = read_wav(fg.path);
    CHECK(z2.samples == z.samples);
}

TEST_CASE("16-bit pcm input is scaled to [-1, 1)") {
    FileGuard fg(tmp_path("pcm16.wav"));
    write_pcm16(fg.path, {{0, 16384, -32768, 32767}}, 44100);
    TimeSignal s = read_wav(fg.path);
    CHECK(s.sample_rate_hz == 44100.0);
    REQUIRE(s.samples.size() == 4);
    CHECK(s.samples[0] == 0.0);
    CHECK(s.samples[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.samples[2] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(s.samples[3] == doctest::Approx(32767.0 / 32768.0).epsilon(1e-12));
}

TEST_CASE("multichannel input downmixes by averaging with a warning") {
    FileGuard fg(tmp_path("stereo.wav"));
    write_pcm16(fg.path, {{16384, 0}, {-16384, 8192}}, 8000);
    std::string warning;
    TimeSignal s = read_wav(fg.path, &warning);
    REQUIRE(s.samples.size() == 2);
    CHECK(s.samples[0] == 0.0);  // (16384 - 16384) / 2
    CHECK(s.samples[1] == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(warning.find("2 channels") != std::string::npos);

    // Mono reads leave the warning untouched.
    FileGuard fg2(tmp_path("mono.wav"));
    write_pcm16(fg2.path, {{100}}, 8000);
    std::string warn2;
    read_wav(fg2.path, &warn2);
    CHECK(warn2.empty());
}

TEST_CASE("wav errors carry the file path") {
    CHECK_THROWS_WITH_AS(read_wav("definitely_missing_file.wav"),
                         doctest::Contains("definitely_missing_file.wav"),
                         std::runtime_error);
    FileGuard fg(tmp_path("garbage.wav"));
    {
        std::ofstream f(fg.path, std::ios::binary);
        f << "this is not a wave file at all, not even close";
    }
    CHECK_THROWS_AS(read_wav(fg.path), std::runtime_error);
}

TEST_CASE("checkpoint round trip restores the exact training state") {
    FileGuard fg(tmp_path("state.ckpt"));
    TrainState s = init_train_state(tiny_unet(), 4, 123);
    // Perturb everything so defaults cannot mask a broken field.
    s.iteration = 41;
    s.opt.tau = 40;
    s.skipped_steps = 1;
    for (size_t p = 0; p < s.net.num_params(); ++p)
        for (size_t i = 0; i < s.net.param(p).size(); ++i) {
            s.opt.m_theta[p][i] = 0.001 * static_cast<double>(i % 7) + 1e-4 * p;
            s.opt.u_theta[p][i] = 0.002 * static_cast<double>(i % 5);
        }
    for (size_t i = 0; i < s.dict.entries.size(); ++i) {
        s.dict.entries[i] += 0.01 * static_cast<double>(i);
        s.opt.m_dict[i] = -0.03 * static_cast<double>(i);
    }
    s.opt.u_dict = {0.5, 0.75};

    save_checkpoint(fg.path, s);
    TrainState r = load_checkpoint(fg.path);

    CHECK(r.iteration == 41);
    CHECK(r.opt.tau == 40);
    CHECK(r.seed == 123);
    CHECK(r.skipped_steps == 1);
    CHECK(r.dict.entries == s.dict.entries);
    CHECK(r.opt.m_dict == s.opt.m_dict);
    CHECK(r.opt.u_dict == s.opt.u_dict);
    REQUIRE(r.net.num_params() == s.net.num_params());
    for (size_t p = 0; p < s.net.num_params(); ++p) {
        CHECK(r.net.param_name(p) == s.net.param_name(p));
        CHECK(r.net.param(p).v == s.net.param(p).v);
        CHECK(r.opt.m_theta[p].v == s.opt.m_theta[p].v);
        CHECK(r.opt.u_theta[p].v == s.opt.u_theta[p].v);
    }
    // The architecture itself is restored from the file.
    CHECK(r.net.config().n_spc == 64);
    CHECK(r.net.config().strides == std::vector<int>{4, 4});
    CHECK(r.net.config().nu_max == 28);
}

TEST_CASE("corrupt checkpoints are rejected") {
    FileGuard fg(tmp_path("corrupt.ckpt"));
    {
        std::ofstream f(fg.path, std::ios::binary);
        f << "UNMXJUNKxxxxxxxxxxxxxxxxxxxx";
    }
    CHECK_THROWS_AS(load_checkpoint(fg.path), std::runtime_error);
    CHECK_THROWS_AS(load_checkpoint("missing_checkpoint_file.ckpt"), std::runtime_error);
}

TEST_CASE("config serialization round trips and reparses idempotently") {
    AppConfig c;
    c.gabor.sample_rate_hz = 8000.0;
    c.gabor.zeta_s = 64.0 / 8000.0;
    c.gabor.alpha_s = 32.0 / 8000.0;
    c.gabor.beta_hz = 62.5;
    c.gabor.n_spc = 64;
    c.unet = tiny_unet();
    c.n_har = 4;
    c.train.iterations = 500;
    c.train.seeds = {3, 9};
    c.train.freeze_dictionary = true;
    c.loss.lambda = 0.85;

    std::string text = serialize_config(c);
    AppConfig d = parse_config(text);
    CHECK(serialize_config(d) == text);
    CHECK(d.gabor.n_spc == 64);
    CHECK(d.unet.n_spc == 64);  // n_spc is shared between lattice and net
    CHECK(d.unet.strides == std::vector<int>{4, 4});
    CHECK(d.train.seeds == std::vector<std::uint64_t>{3, 9});
    CHECK(d.train.freeze_dictionary);
    CHECK(d.loss.lambda == 0.85);
    CHECK(d.n_har == 4);
    CHECK_NOTHROW(d.validate());
}

TEST_CASE("config parser diagnostics name line and field") {
    CHECK_THROWS_WITH_AS(parse_config("loss.q = 0.5\nbogus.key = 1\n"),
                         doctest::Contains("line 2"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_config("loss.q = notanumber\n"),
                         doctest::Contains("loss.q"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_config("just some words\n"),
                         doctest::Contains("key = value"), std::runtime_error);
    // Comments and blank lines are fine.
    CHECK_NOTHROW(parse_config("# comment only\n\n  \nloss.q = 0.5 # trailing\n"));

    PolicyConfig p = parse_config("sigma_min_factor = 0.5\n").policy();
    AppConfig defaults;
    CHECK(p.sigma_min_hz ==
          doctest::Approx(0.5 / (2.0 * M_PI * defaults.gabor.zeta_s)).epsilon(1e-12));
}
