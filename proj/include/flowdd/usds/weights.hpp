#pragma once

// Binary weight file shared with the offline trainer. All integers and
// floats are little-endian.
//
//   "USDS"                      4 bytes magic
//   version                     u16 (kWeightFormatVersion)
//   layer count                 u16
//   input shape                 u32 channels, u32 height, u32 width
//   per layer:
//     kind                      u8  (1 conv, 2 fully connected, 3 transposed conv)
//     branch                    u8  (0 shared, 1 vx, 2 vy)
//     activation                u8  (1 rectifier, 0 linear)
//     conv / transposed conv    u32 in, out, kh, kw, stride_h, stride_w, pad_h, pad_w
//     fully connected           u32 in_dim, out_channels, out_height, out_width
//   payload: per layer weights then bias, f32
//     conv, transposed conv     [out][in][kh][kw]
//     fully connected           [out][in]
//   CRC32 of the payload        u32
//
// The transposed convolution layout is [out][in], not PyTorch's [in][out].

#include "flowdd/usds/cnn.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace flowdd::usds {

inline constexpr std::uint16_t kWeightFormatVersion = 1;

enum class WeightFileErrorCode {
    Io,
    BadMagic,
    VersionMismatch,
    MalformedHeader,
    ChecksumMismatch,
    DimensionChain,
};

const char* to_string(WeightFileErrorCode code);

class WeightFileError : public std::runtime_error {
public:
    WeightFileError(WeightFileErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}
    WeightFileErrorCode code() const noexcept { return code_; }

private:
    WeightFileErrorCode code_;
};

std::string serialize_weights(const CnnModel& model);
CnnModel deserialize_weights(std::string_view bytes);

void save_weights(const CnnModel& model, const std::filesystem::path& path);
CnnModel load_weights(const std::filesystem::path& path);

}  // namespace flowdd::usds
