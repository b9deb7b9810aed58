#include "flowdd/usds/weights.hpp"

#include "flowdd/error.hpp"
#include "flowdd/field_io.hpp"

#include <fmt/format.h>
#include <zlib.h>

#include <bit>
#include <cstring>

namespace flowdd::usds {

namespace {

constexpr char kMagic[4] = {'U', 'S', 'D', 'S'};

[[noreturn]] void wfail(WeightFileErrorCode code, const std::string& msg) {
    throw WeightFileError(code, fmt::format("weight file: {}", msg));
}

class Writer {
public:
    void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) {
        u8(static_cast<std::uint8_t>(v & 0xff));
        u8(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        for (int k = 0; k < 4; ++k) u8(static_cast<std::uint8_t>((v >> (8 * k)) & 0xff));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    std::string& str() { return out_; }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}

    bool has(std::size_t n) const { return in_.size() - pos_ >= n; }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return in_.size() - pos_; }

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(in_[pos_++]);
    }
    std::uint16_t u16() {
        const std::uint16_t lo = u8();
        return static_cast<std::uint16_t>(lo | (static_cast<std::uint16_t>(u8()) << 8));
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(u8()) << (8 * k);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }

private:
    void need(std::size_t n) const {
        if (!has(n)) {
            wfail(WeightFileErrorCode::MalformedHeader, "header truncated");
        }
    }
    std::string_view in_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view bytes) {
    return static_cast<std::uint32_t>(
        crc32_z(0L, reinterpret_cast<const Bytef*>(bytes.data()), bytes.size()));
}

}  // namespace

const char* to_string(WeightFileErrorCode code) {
    switch (code) {
        case WeightFileErrorCode::Io: return "io";
        case WeightFileErrorCode::BadMagic: return "bad-magic";
        case WeightFileErrorCode::VersionMismatch: return "version-mismatch";
        case WeightFileErrorCode::MalformedHeader: return "malformed-header";
        case WeightFileErrorCode::ChecksumMismatch: return "checksum-mismatch";
        case WeightFileErrorCode::DimensionChain: return "dimension-chain";
    }
    return "unknown";
}

std::string serialize_weights(const CnnModel& model) {
    const auto& layers = model.layers();
    if (layers.size() > 0xffff) {
        fail(ErrorKind::Model, "too many layers for the weight file format");
    }
    Writer w;
    w.bytes(kMagic, 4);
    w.u16(kWeightFormatVersion);
    w.u16(static_cast<std::uint16_t>(layers.size()));
    w.u32(model.input_shape().channels);
    w.u32(model.input_shape().height);
    w.u32(model.input_shape().width);
    for (const auto& l : layers) {
        const auto& s = l.spec;
        w.u8(static_cast<std::uint8_t>(s.kind));
        w.u8(static_cast<std::uint8_t>(s.branch));
        w.u8(s.relu ? 1 : 0);
        if (s.kind == LayerKind::FullyConnected) {
            for (auto v : {s.in_dim, s.out_shape.channels, s.out_shape.height, s.out_shape.width}) w.u32(v);
        } else {
            for (auto v : {s.in_channels, s.out_channels, s.kernel_h, s.kernel_w, s.stride_h, s.stride_w, s.pad_h,
                           s.pad_w}) {
                w.u32(v);
            }
        }
    }
    const std::size_t payload_start = w.str().size();
    for (const auto& l : layers) {
        for (float v : l.weights) w.f32(v);
        for (float v : l.bias) w.f32(v);
    }
    const auto crc = crc32_of(std::string_view(w.str()).substr(payload_start));
    w.u32(crc);
    return std::move(w.str());
}

CnnModel deserialize_weights(std::string_view bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        wfail(WeightFileErrorCode::BadMagic, "missing USDS magic");
    }
    Reader r(bytes.substr(4));
    const auto version = r.u16();
    if (version != kWeightFormatVersion) {
        wfail(WeightFileErrorCode::VersionMismatch,
              fmt::format("format version {}, expected {}", version, kWeightFormatVersion));
    }
    const auto count = r.u16();
    TensorShape input;
    input.channels = r.u32();
    input.height = r.u32();
    input.width = r.u32();

    std::vector<LayerSpec> specs;
    specs.reserve(count);
    for (std::uint16_t k = 0; k < count; ++k) {
        LayerSpec s;
        const auto kind = r.u8();
        const auto branch = r.u8();
        const auto act = r.u8();
        if (kind < 1 || kind > 3) {
            wfail(WeightFileErrorCode::MalformedHeader, fmt::format("layer {}: unknown kind {}", k, kind));
        }
        if (branch > 2) {
            wfail(WeightFileErrorCode::MalformedHeader, fmt::format("layer {}: unknown branch {}", k, branch));
        }
        if (act > 1) {
            wfail(WeightFileErrorCode::MalformedHeader, fmt::format("layer {}: unknown activation {}", k, act));
        }
        s.kind = static_cast<LayerKind>(kind);
        s.branch = static_cast<Branch>(branch);
        s.relu = act == 1;
        if (s.kind == LayerKind::FullyConnected) {
            s.in_dim = r.u32();
            s.out_shape.channels = r.u32();
            s.out_shape.height = r.u32();
            s.out_shape.width = r.u32();
        } else {
            s.in_channels = r.u32();
            s.out_channels = r.u32();
            s.kernel_h = r.u32();
            s.kernel_w = r.u32();
            s.stride_h = r.u32();
            s.stride_w = r.u32();
            s.pad_h = r.u32();
            s.pad_w = r.u32();
        }
        specs.push_back(s);
    }
    try {
        validate_topology(input, specs);
    } catch (const Error& e) {
        wfail(WeightFileErrorCode::DimensionChain, e.what());
    }

    std::size_t floats = 0;
    for (const auto& s : specs) floats += s.weight_count() + s.bias_count();
    const std::size_t payload_bytes = floats * 4;
    if (r.remaining() != payload_bytes + 4) {
        wfail(WeightFileErrorCode::ChecksumMismatch,
              fmt::format("payload is {} bytes, header declares {} plus checksum", r.remaining(),
                          payload_bytes));
    }
    const std::string_view payload = bytes.substr(4 + r.pos(), payload_bytes);
    Reader tail(bytes.substr(4 + r.pos() + payload_bytes));
    const auto stored = tail.u32();
    if (stored != crc32_of(payload)) {
        wfail(WeightFileErrorCode::ChecksumMismatch, "payload CRC32 does not match");
    }

    std::vector<Layer> layers;
    layers.reserve(specs.size());
    for (const auto& s : specs) {
        Layer l{s, std::vector<float>(s.weight_count()), std::vector<float>(s.bias_count())};
        for (float& v : l.weights) v = r.f32();
        for (float& v : l.bias) v = r.f32();
        layers.push_back(std::move(l));
    }
    return CnnModel(input, std::move(layers));
}

void save_weights(const CnnModel& model, const std::filesystem::path& path) {
    const std::string bytes = serialize_weights(model);
    try {
        write_file_atomic(path, bytes);
    } catch (const Error& e) {
        wfail(WeightFileErrorCode::Io, e.what());
    }
}

CnnModel load_weights(const std::filesystem::path& path) {
    std::string bytes;
    try {
        bytes = read_file(path);
    } catch (const Error& e) {
        wfail(WeightFileErrorCode::Io, e.what());
    }
    return deserialize_weights(bytes);
}

}  // namespace flowdd::usds
