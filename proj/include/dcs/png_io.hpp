#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcs/tensor.hpp"

namespace dcs {

// 8-bit PNG I/O. Loading accepts gray, gray+alpha, palette, RGB and RGBA at
// bit depths 1/2/4/8 (non-interlaced) and normalizes everything to an RGB
// tensor [3,H,W] scaled to [0,1]; alpha is dropped. Saving quantizes with
// round-to-nearest and emits RGB8 with stored (uncompressed) deflate blocks.
Tensor load_png(const std::string& path);
void save_png(const Tensor& image, const std::string& path);

std::vector<uint8_t> encode_png_rgb8(const Tensor& image);
Tensor decode_png(const std::vector<uint8_t>& bytes);

// RFC 1951 decompressor, used by the PNG reader; exposed for tests.
std::vector<uint8_t> inflate(const std::vector<uint8_t>& data, size_t expected_size_hint = 0);

uint32_t crc32(const uint8_t* data, size_t n, uint32_t seed = 0);

}  // namespace dcs
