#include "dcs/png_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dcs {
namespace {

constexpr uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

uint32_t be32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

uint32_t adler32(const uint8_t* data, size_t n) {
  uint32_t a = 1, b = 0;
  for (size_t i = 0; i < n; ++i) {
    a = (a + data[i]) % 65521;
    b = (b + a) % 65521;
  }
  return (b << 16) | a;
}

// ---- inflate -------------------------------------------------------------

struct BitReader {
  const uint8_t* data;
  size_t size;
  size_t pos = 0;
  uint32_t bitbuf = 0;
  int bitcount = 0;

  uint32_t bits(int n) {
    while (bitcount < n) {
      if (pos >= size) throw std::runtime_error("inflate: truncated stream");
      bitbuf |= uint32_t(data[pos++]) << bitcount;
      bitcount += 8;
    }
    const uint32_t v = bitbuf & ((1u << n) - 1);
    bitbuf >>= n;
    bitcount -= n;
    return v;
  }
  void align_byte() {
    bitbuf = 0;
    bitcount = 0;
  }
};

// Canonical Huffman decoder from code lengths.
struct Huffman {
  std::vector<uint16_t> counts;   // per bit length
  std::vector<uint16_t> symbols;  // sorted by (length, symbol)

  void build(const std::vector<uint8_t>& lengths) {
    counts.assign(16, 0);
    for (uint8_t l : lengths)
      if (l) counts[l]++;
    std::vector<uint16_t> offsets(16, 0);
    for (int i = 1; i < 15; ++i) offsets[i + 1] = offsets[i] + counts[i];
    symbols.assign(offsets[15] + counts[15], 0);
    for (size_t s = 0; s < lengths.size(); ++s)
      if (lengths[s]) symbols[offsets[lengths[s]]++] = uint16_t(s);
  }

  int decode(BitReader& br) const {
    int code = 0, first = 0, index = 0;
    for (int len = 1; len <= 15; ++len) {
      code |= int(br.bits(1));
      const int count = counts[len];
      if (code - first < count) return symbols[index + code - first];
      index += count;
      first = (first + count) << 1;
      code <<= 1;
    }
    throw std::runtime_error("inflate: invalid Huffman code");
  }
};

constexpr int kLenBase[29] = {3,  4,  5,  6,  7,  8,  9,  10, 11,  13,  15,  17,  19,  23, 27,
                              31, 35, 43, 51, 59, 67, 83, 99, 115, 131, 163, 195, 227, 258};
constexpr int kLenExtra[29] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2,
                               2, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 0};
constexpr int kDistBase[30] = {1,    2,    3,    4,    5,    7,     9,     13,    17,   25,
                               33,   49,   65,   97,   129,  193,   257,   385,   513,  769,
                               1025, 1537, 2049, 3073, 4097, 6145,  8193,  12289, 16385, 24577};
constexpr int kDistExtra[30] = {0, 0, 0, 0, 1, 1, 2, 2,  3,  3,  4,  4,  5,  5,  6,
                                6, 7, 7, 8, 8, 9, 9, 10, 10, 11, 11, 12, 12, 13, 13};

void inflate_block(BitReader& br, const Huffman& lit, const Huffman& dist, std::vector<uint8_t>& out) {
  for (;;) {
    const int sym = lit.decode(br);
    if (sym < 256) {
      out.push_back(uint8_t(sym));
    } else if (sym == 256) {
      return;
    } else {
      const int li = sym - 257;
      if (li >= 29) throw std::runtime_error("inflate: bad length symbol");
      const int len = kLenBase[li] + int(br.bits(kLenExtra[li]));
      const int di = dist.decode(br);
      if (di >= 30) throw std::runtime_error("inflate: bad distance symbol");
      const size_t d = size_t(kDistBase[di]) + br.bits(kDistExtra[di]);
      if (d > out.size()) throw std::runtime_error("inflate: distance past start");
      for (int i = 0; i < len; ++i) out.push_back(out[out.size() - d]);
    }
  }
}

}  // namespace

uint32_t crc32(const uint8_t* data, size_t n, uint32_t seed) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int j = 0; j < 8; ++j) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = seed ^ 0xffffffffu;
  for (size_t i = 0; i < n; ++i) c = table[(c ^ data[i]) & 0xff] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

std::vector<uint8_t> inflate(const std::vector<uint8_t>& data, size_t expected_size_hint) {
  BitReader br{data.data(), data.size()};
  std::vector<uint8_t> out;
  out.reserve(expected_size_hint);
  for (;;) {
    const uint32_t final = br.bits(1);
    const uint32_t type = br.bits(2);
    if (type == 0) {  // stored
      br.align_byte();
      if (br.pos + 4 > br.size) throw std::runtime_error("inflate: truncated stored header");
      const uint32_t len = data[br.pos] | (uint32_t(data[br.pos + 1]) << 8);
      const uint32_t nlen = data[br.pos + 2] | (uint32_t(data[br.pos + 3]) << 8);
      if ((len ^ 0xffff) != nlen) throw std::runtime_error("inflate: stored length check failed");
      br.pos += 4;
      if (br.pos + len > br.size) throw std::runtime_error("inflate: truncated stored block");
      out.insert(out.end(), data.begin() + br.pos, data.begin() + br.pos + len);
      br.pos += len;
    } else if (type == 1) {  // fixed codes
      std::vector<uint8_t> ll(288);
      for (int i = 0; i < 144; ++i) ll[i] = 8;
      for (int i = 144; i < 256; ++i) ll[i] = 9;
      for (int i = 256; i < 280; ++i) ll[i] = 7;
      for (int i = 280; i < 288; ++i) ll[i] = 8;
      Huffman lit, dist;
      lit.build(ll);
      dist.build(std::vector<uint8_t>(30, 5));
      inflate_block(br, lit, dist, out);
    } else if (type == 2) {  // dynamic codes
      const int hlit = int(br.bits(5)) + 257;
      const int hdist = int(br.bits(5)) + 1;
      const int hclen = int(br.bits(4)) + 4;
      static constexpr int kOrder[19] = {16, 17, 18, 0, 8,  7, 9,  6, 10, 5,
                                         11, 4,  12, 3, 13, 2, 14, 1, 15};
      std::vector<uint8_t> clen(19, 0);
      for (int i = 0; i < hclen; ++i) clen[kOrder[i]] = uint8_t(br.bits(3));
      Huffman cl;
      cl.build(clen);
      std::vector<uint8_t> lengths;
      lengths.reserve(hlit + hdist);
      while (static_cast<int>(lengths.size()) < hlit + hdist) {
        const int sym = cl.decode(br);
        if (sym < 16) {
          lengths.push_back(uint8_t(sym));
        } else if (sym == 16) {
          if (lengths.empty()) throw std::runtime_error("inflate: repeat with no previous length");
          const int n = 3 + int(br.bits(2));
          lengths.insert(lengths.end(), n, lengths.back());
        } else if (sym == 17) {
          lengths.insert(lengths.end(), 3 + br.bits(3), 0);
        } else {
          lengths.insert(lengths.end(), 11 + br.bits(7), 0);
        }
      }
      if (static_cast<int>(lengths.size()) != hlit + hdist)
        throw std::runtime_error("inflate: code length overflow");
      Huffman lit, dist;
      lit.build(std::vector<uint8_t>(lengths.begin(), lengths.begin() + hlit));
      dist.build(std::vector<uint8_t>(lengths.begin() + hlit, lengths.end()));
      inflate_block(br, lit, dist, out);
    } else {
      throw std::runtime_error("inflate: reserved block type");
    }
    if (final) break;
  }
  return out;
}

namespace {

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

void unfilter(std::vector<uint8_t>& raw, int64_t h, int64_t stride, int bpp) {
  for (int64_t y = 0; y < h; ++y) {
    uint8_t* row = raw.data() + y * (stride + 1);
    const uint8_t filter = row[0];
    uint8_t* cur = row + 1;
    const uint8_t* prev = y > 0 ? raw.data() + (y - 1) * (stride + 1) + 1 : nullptr;
    for (int64_t i = 0; i < stride; ++i) {
      const int a = i >= bpp ? cur[i - bpp] : 0;
      const int b = prev ? prev[i] : 0;
      const int c = (prev && i >= bpp) ? prev[i - bpp] : 0;
      int v = cur[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw std::runtime_error("png: unknown filter " + std::to_string(filter));
      }
      cur[i] = uint8_t(v);
    }
  }
}

}  // namespace

Tensor decode_png(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
    throw std::runtime_error("png: bad signature");

  int64_t width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  std::vector<uint8_t> idat;
  std::vector<std::array<uint8_t, 3>> palette;

  size_t pos = 8;
  bool saw_end = false;
  while (pos + 8 <= bytes.size() && !saw_end) {
    const uint32_t len = be32(&bytes[pos]);
    if (pos + 12 + len > bytes.size()) throw std::runtime_error("png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
    const uint8_t* data = &bytes[pos + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw std::runtime_error("png: bad IHDR");
      width = be32(data);
      height = be32(data + 4);
      bit_depth = data[8];
      color_type = data[9];
      if (data[10] != 0 || data[11] != 0) throw std::runtime_error("png: unsupported compression/filter");
      if (data[12] != 0) throw std::runtime_error("png: interlaced images not supported");
    } else if (std::memcmp(type, "PLTE", 4) == 0) {
      if (len % 3 != 0) throw std::runtime_error("png: bad PLTE");
      palette.resize(len / 3);
      for (size_t i = 0; i < palette.size(); ++i)
        palette[i] = {data[3 * i], data[3 * i + 1], data[3 * i + 2]};
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_end = true;
    }
    pos += 12 + len;
  }
  if (width <= 0 || height <= 0) throw std::runtime_error("png: missing IHDR");
  if (bit_depth == 16) throw std::runtime_error("png: 16-bit depth not supported");

  int channels = 0;
  switch (color_type) {
    case 0: channels = 1; break;  // gray
    case 2: channels = 3; break;  // rgb
    case 3: channels = 1; break;  // palette
    case 4: channels = 2; break;  // gray+alpha
    case 6: channels = 4; break;  // rgba
    default: throw std::runtime_error("png: unknown color type " + std::to_string(color_type));
  }
  if ((color_type == 2 || color_type >= 4) && bit_depth != 8)
    throw std::runtime_error("png: sub-byte depth only valid for gray/palette");
  if (color_type == 3 && palette.empty()) throw std::runtime_error("png: palette image without PLTE");

  if (idat.size() < 2) throw std::runtime_error("png: missing image data");
  // Strip the 2-byte zlib header and 4-byte adler trailer.
  std::vector<uint8_t> deflate_stream(idat.begin() + 2, idat.end() - 4);
  const int64_t bits_per_pixel = channels * bit_depth;
  const int64_t stride = (width * bits_per_pixel + 7) / 8;
  auto raw = inflate(deflate_stream, size_t((stride + 1) * height));
  if (raw.size() != size_t((stride + 1) * height)) throw std::runtime_error("png: wrong data size");
  unfilter(raw, height, stride, std::max<int>(1, bits_per_pixel / 8));

  Tensor img({3, height, width}, 0.0, false);
  const double inv255 = 1.0 / 255.0;
  const int max_sample = (1 << bit_depth) - 1;
  auto sample_at = [&](const uint8_t* row, int64_t x, int ch) -> int {
    if (bit_depth == 8) return row[x * channels + ch];
    const int64_t bit = x * bits_per_pixel + ch * bit_depth;
    const int shift = 8 - bit_depth - int(bit % 8);
    return (row[bit / 8] >> shift) & max_sample;
  };
  for (int64_t y = 0; y < height; ++y) {
    const uint8_t* row = raw.data() + y * (stride + 1) + 1;
    for (int64_t x = 0; x < width; ++x) {
      double r, g, b;
      if (color_type == 3) {
        const int idx = sample_at(row, x, 0);
        if (idx >= static_cast<int>(palette.size())) throw std::runtime_error("png: palette index range");
        r = palette[idx][0] * inv255;
        g = palette[idx][1] * inv255;
        b = palette[idx][2] * inv255;
      } else if (color_type == 0 || color_type == 4) {
        const double v = sample_at(row, x, 0) / double(max_sample);
        r = g = b = v;
      } else {
        r = sample_at(row, x, 0) * inv255;
        g = sample_at(row, x, 1) * inv255;
        b = sample_at(row, x, 2) * inv255;
      }
      img.data()[(0 * height + y) * width + x] = r;
      img.data()[(1 * height + y) * width + x] = g;
      img.data()[(2 * height + y) * width + x] = b;
    }
  }
  return img;
}

std::vector<uint8_t> encode_png_rgb8(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3)
    throw std::invalid_argument("save_png: expected [3,H,W] tensor, got " + shape_str(image.shape()));
  const int64_t h = image.dim(1), w = image.dim(2);

  // Filter byte 0 per row, then RGB8 with round-to-nearest quantization.
  std::vector<uint8_t> raw;
  raw.reserve(size_t(h) * (size_t(w) * 3 + 1));
  auto q = [](double v) {
    return uint8_t(std::clamp<long>(std::lround(v * 255.0), 0, 255));
  };
  for (int64_t y = 0; y < h; ++y) {
    raw.push_back(0);
    for (int64_t x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) raw.push_back(q(image.data()[(c * h + y) * w + x]));
  }

  // zlib wrapper with stored deflate blocks.
  std::vector<uint8_t> z;
  z.push_back(0x78);
  z.push_back(0x01);
  size_t off = 0;
  while (off < raw.size() || raw.empty()) {
    const size_t n = std::min<size_t>(65535, raw.size() - off);
    const bool last = off + n == raw.size();
    z.push_back(last ? 1 : 0);
    z.push_back(uint8_t(n & 0xff));
    z.push_back(uint8_t(n >> 8));
    z.push_back(uint8_t(~n & 0xff));
    z.push_back(uint8_t((~n >> 8) & 0xff));
    z.insert(z.end(), raw.begin() + off, raw.begin() + off + n);
    off += n;
    if (last) break;
  }
  put_be32(z, adler32(raw.data(), raw.size()));

  std::vector<uint8_t> out(kSignature, kSignature + 8);
  auto chunk = [&out](const char* type, const std::vector<uint8_t>& body) {
    put_be32(out, uint32_t(body.size()));
    const size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), body.begin(), body.end());
    put_be32(out, crc32(out.data() + start, out.size() - start));
  };
  std::vector<uint8_t> ihdr;
  put_be32(ihdr, uint32_t(w));
  put_be32(ihdr, uint32_t(h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // RGB
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  chunk("IHDR", ihdr);
  chunk("IDAT", z);
  chunk("IEND", {});
  return out;
}

Tensor load_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_png: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

void save_png(const Tensor& image, const std::string& path) {
  const auto bytes = encode_png_rgb8(image);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("save_png: cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw std::runtime_error("save_png: write failed for " + path);
}

}  // namespace dcs
