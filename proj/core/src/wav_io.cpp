#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "csmaq/waveform.hpp"

namespace csmaq {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ofstream& out, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

Waveform load_waveform(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw io_error(path + ": not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t size = read_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) throw io_error(path + ": truncated chunk");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (size < 16) throw io_error(path + ": fmt chunk too small");
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            if (format == kFormatExtensible) {
                if (size < 40) throw io_error(path + ": extensible fmt chunk too small");
                format = read_u16(bytes.data() + body + 24);  // subformat GUID leading word
            }
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data = bytes.data() + body;
            data_len = size;
        }
        pos = body + size + (size & 1);  // chunks are word-aligned
    }

    if (format == 0 || rate == 0) throw io_error(path + ": missing fmt chunk");
    if (channels < 1 || channels > 2)
        throw io_error(path + ": unsupported channel count " + std::to_string(channels));
    if (data == nullptr) throw io_error(path + ": missing data chunk");

    const std::size_t bytes_per = bits / 8u;
    if (bytes_per == 0) throw io_error(path + ": bad bit depth");
    const std::size_t frames = data_len / (bytes_per * channels);
    if (frames == 0) throw io_error(path + ": zero-length audio");

    Waveform w;
    w.sample_rate = static_cast<int>(rate);
    w.channels.assign(channels, std::vector<double>(frames));

    auto decode = [&](std::size_t frame, std::size_t ch) -> double {
        const unsigned char* p = data + (frame * channels + ch) * bytes_per;
        if (format == kFormatFloat && bits == 32) {
            float f;
            std::memcpy(&f, p, 4);
            return static_cast<double>(f);
        }
        if (format == kFormatPcm && bits == 16) {
            const auto v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
            return v / 32768.0;
        }
        if (format == kFormatPcm && bits == 24) {
            std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
            if (v & 0x800000) v |= ~0xFFFFFF;
            return v / 8388608.0;
        }
        if (format == kFormatPcm && bits == 32) {
            std::int32_t v;
            std::memcpy(&v, p, 4);
            return v / 2147483648.0;
        }
        throw io_error(path + ": unsupported sample format (" + std::to_string(format) + "/" +
                       std::to_string(bits) + " bit)");
    };

    for (std::size_t f = 0; f < frames; ++f)
        for (std::size_t c = 0; c < channels; ++c) w.channels[c][f] = decode(f, c);

    if (w.sample_rate != 48000) w = resample(w, 48000);
    return w;
}

void save_waveform(const Waveform& w, const std::string& path) {
    if (w.channels.empty() || w.length() == 0) throw io_error("save_waveform: empty waveform");
    const auto channels = static_cast<std::uint16_t>(w.channel_count());
    const auto frames = static_cast<std::uint32_t>(w.length());
    const std::uint32_t data_size = frames * channels * 4u;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + path);
    out.write("RIFF", 4);
    write_u32(out, 36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 16);
    write_u16(out, kFormatFloat);
    write_u16(out, channels);
    write_u32(out, static_cast<std::uint32_t>(w.sample_rate));
    write_u32(out, static_cast<std::uint32_t>(w.sample_rate) * channels * 4u);
    write_u16(out, static_cast<std::uint16_t>(channels * 4u));
    write_u16(out, 32);
    out.write("data", 4);
    write_u32(out, data_size);
    for (std::uint32_t f = 0; f < frames; ++f)
        for (std::uint16_t c = 0; c < channels; ++c) {
            const auto v = static_cast<float>(w.channels[c][f]);
            out.write(reinterpret_cast<const char*>(&v), 4);
        }
    if (!out) throw io_error("short write: " + path);
}

}  // namespace csmaq
