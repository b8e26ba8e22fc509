#include "unmix/wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace unmix {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("wav: " + path + ": " + what);
}

std::uint32_t rd_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t rd_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

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

}  // namespace

TimeSignal read_wav(const std::string& path, std::string* warning) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open file");
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        fail(path, "not a RIFF/WAVE file");

    int fmt = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    size_t data_off = 0, data_len = 0;
    size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        std::uint32_t len = rd_u32(buf.data() + pos + 4);
        if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0 && len >= 16) {
            const unsigned char* p = buf.data() + pos + 8;
            fmt = rd_u16(p);
            channels = rd_u16(p + 2);
            rate = rd_u32(p + 4);
            bits = rd_u16(p + 14);
        } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
            data_off = pos + 8;
            data_len = std::min<size_t>(len, buf.size() - data_off);
        }
        pos += 8 + len + (len & 1);
    }
    if (fmt == 0) fail(path, "missing fmt chunk");
    if (data_off == 0) fail(path, "missing data chunk");
    if (channels < 1) fail(path, "no channels");

    bool pcm16 = fmt == 1 && bits == 16;
    bool pcm24 = fmt == 1 && bits == 24;
    bool f32 = fmt == 3 && bits == 32;
    if (!pcm16 && !pcm24 && !f32)
        fail(path, "unsupported format (need 16/24-bit PCM or 32-bit float)");

    size_t bytes = static_cast<size_t>(bits) / 8;
    size_t stride = bytes * channels;
    size_t n = data_len / stride;
    TimeSignal sig;
    sig.sample_rate_hz = static_cast<double>(rate);
    sig.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
            const unsigned char* p = buf.data() + data_off + i * stride + c * bytes;
            double v;
            if (pcm16) {
                std::int16_t s = static_cast<std::int16_t>(rd_u16(p));
                v = s / 32768.0;
            } else if (pcm24) {
                std::int32_t s = p[0] | p[1] << 8 | p[2] << 16;
                if (s & 0x800000) s |= ~0xffffff;
                v = s / 8388608.0;
            } else {
                std::uint32_t u = rd_u32(p);
                float fv;
                std::memcpy(&fv, &u, 4);
                v = fv;
            }
            acc += v;
        }
        sig.samples[i] = acc / channels;
    }
    if (channels > 1 && warning)
        *warning = "downmixed " + std::to_string(channels) + " channels to mono by averaging";
    return sig;
}

void write_wav(const std::string& path, const TimeSignal& signal) {
    std::uint32_t n = static_cast<std::uint32_t>(signal.samples.size());
    std::uint32_t rate = static_cast<std::uint32_t>(signal.sample_rate_hz);
    std::vector<unsigned char> buf;
    buf.reserve(58 + 4 * n);
    buf.insert(buf.end(), {'R', 'I', 'F', 'F'});
    wr_u32(buf, 4 + 26 + 12 + 8 + 4 * n);
    buf.insert(buf.end(), {'W', 'A', 'V', 'E'});
    buf.insert(buf.end(), {'f', 'm', 't', ' '});
    wr_u32(buf, 18);
    wr_u16(buf, 3);  // IEEE float
    wr_u16(buf, 1);
    wr_u32(buf, rate);
    wr_u32(buf, rate * 4);
    wr_u16(buf, 4);
    wr_u16(buf, 32);
    wr_u16(buf, 0);  // no extension
    buf.insert(buf.end(), {'f', 'a', 'c', 't'});
    wr_u32(buf, 4);
    wr_u32(buf, n);
    buf.insert(buf.end(), {'d', 'a', 't', 'a'});
    wr_u32(buf, 4 * n);
    for (double d : signal.samples) {
        float fv = static_cast<float>(d);
        std::uint32_t u;
        std::memcpy(&u, &fv, 4);
        wr_u32(buf, u);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(path, "cannot open file for writing");
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) fail(path, "write failed");
}

}  // namespace unmix
