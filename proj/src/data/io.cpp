#include "pjx/data/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

#include "pjx/errors.hpp"

namespace pjx {

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf, 8);
}

std::uint64_t get_u64(const std::vector<char>& bytes, std::size_t& pos) {
  if (bytes.size() - pos < 8) throw IoError("truncated feature file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// Next whitespace-delimited PGM header token, skipping '#' comments.
std::string header_token(const std::vector<char>& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) tok.push_back(bytes[pos++]);
  if (tok.empty()) throw IoError("truncated PGM header");
  return tok;
}

std::size_t parse_size(const std::string& tok) {
  try {
    std::size_t idx = 0;
    auto v = std::stoull(tok, &idx);
    if (idx != tok.size()) throw IoError("bad PGM number " + tok);
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw IoError("bad PGM number " + tok);
  }
}

}  // namespace

void write_features(const std::filesystem::path& path, const SpatialFeatures& f) {
  validate_features(f);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.write("PJXF", 4);
  put_u64(os, f.channels);
  put_u64(os, f.rows);
  put_u64(os, f.cols);
  for (double v : f.values) put_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw IoError("write failed for " + path.string());
}

SpatialFeatures read_features(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() < 28 || std::string(bytes.data(), 4) != "PJXF") throw IoError(path.string() + ": not a PJXF file");
  std::size_t pos = 4;
  SpatialFeatures f;
  f.channels = get_u64(bytes, pos);
  f.rows = get_u64(bytes, pos);
  f.cols = get_u64(bytes, pos);
  const auto n = f.channels * f.rows * f.cols;
  if ((bytes.size() - pos) != n * 8) throw IoError(path.string() + ": value count does not match C x N x M");
  f.values.resize(n);
  for (auto& v : f.values) v = std::bit_cast<double>(get_u64(bytes, pos));
  f.source = FeatureSource::kIngested;
  try {
    validate_features(f);
  } catch (const InputError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return f;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  std::size_t pos = 0;
  const auto magic = header_token(bytes, pos);
  if (magic != "P2" && magic != "P5") throw IoError(path.string() + ": not a PGM (P2/P5) file");
  GrayImage img;
  img.width = parse_size(header_token(bytes, pos));
  img.height = parse_size(header_token(bytes, pos));
  img.maxval = static_cast<int>(parse_size(header_token(bytes, pos)));
  if (img.width == 0 || img.height == 0 || img.maxval <= 0 || img.maxval > 65535) {
    throw IoError(path.string() + ": invalid PGM header");
  }
  const auto n = img.width * img.height;
  img.pixels.resize(n);
  if (magic == "P2") {
    for (auto& p : img.pixels) p = static_cast<int>(parse_size(header_token(bytes, pos)));
  } else {
    ++pos;  // single whitespace after maxval
    const std::size_t bpp = img.maxval > 255 ? 2 : 1;
    if (bytes.size() < pos + n * bpp) throw IoError(path.string() + ": truncated PGM raster");
    for (std::size_t i = 0; i < n; ++i) {
      const auto hi = static_cast<unsigned char>(bytes[pos + i * bpp]);
      img.pixels[i] = bpp == 1 ? hi : (hi << 8) | static_cast<unsigned char>(bytes[pos + i * bpp + 1]);
    }
  }
  for (int p : img.pixels) {
    if (p < 0 || p > img.maxval) throw IoError(path.string() + ": pixel exceeds maxval");
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << "P2\n" << img.width << ' ' << img.height << '\n' << img.maxval << '\n';
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) os << (c ? " " : "") << img.at(r, c);
    os << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<double> area_resample(const std::vector<double>& grid, std::size_t rows, std::size_t cols,
                                  std::size_t out_rows, std::size_t out_cols) {
  if (rows == 0 || cols == 0 || out_rows == 0 || out_cols == 0 || grid.size() != rows * cols) {
    throw DimensionError("area_resample: bad grid dimensions");
  }
  // Overlap of output interval i with input cells along one axis, in input units.
  auto weights = [](std::size_t in, std::size_t out) {
    std::vector<std::vector<std::pair<std::size_t, double>>> w(out);
    const double step = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t i = 0; i < out; ++i) {
      const double lo = static_cast<double>(i) * step, hi = static_cast<double>(i + 1) * step;
      for (auto k = static_cast<std::size_t>(std::floor(lo)); k < in && static_cast<double>(k) < hi; ++k) {
        const double overlap = std::min(hi, static_cast<double>(k + 1)) - std::max(lo, static_cast<double>(k));
        if (overlap > 0.0) w[i].emplace_back(k, overlap / step);
      }
    }
    return w;
  };
  const auto wr = weights(rows, out_rows);
  const auto wc = weights(cols, out_cols);
  std::vector<double> out(out_rows * out_cols, 0.0);
  for (std::size_t i = 0; i < out_rows; ++i)
    for (std::size_t j = 0; j < out_cols; ++j) {
      double acc = 0.0;
      for (const auto& [r, a] : wr[i])
        for (const auto& [c, b] : wc[j]) acc += a * b * grid[r * cols + c];
      out[i * out_cols + j] = acc;
    }
  return out;
}

AttentionMap attention_from_mask(const GrayImage& mask, std::size_t rows, std::size_t cols) {
  std::vector<double> grid(mask.pixels.size());
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(mask.pixels[i]) / mask.maxval;
  const auto small = area_resample(grid, mask.height, mask.width, rows, cols);
  const double peak = *std::max_element(small.begin(), small.end());
  if (peak <= 0.0) return uniform_attention(rows, cols);
  AttentionMap map{rows, cols, std::vector<double>(rows * cols, 0.0)};
  std::size_t positive = 0;
  for (double v : small) positive += v >= 0.5 * peak ? 1 : 0;
  for (std::size_t i = 0; i < small.size(); ++i) {
    if (small[i] >= 0.5 * peak) map.cells[i] = 1.0 / static_cast<double>(positive);
  }
  return map;
}

AttentionMap load_attention_gt(const std::filesystem::path& mask_path, std::size_t rows, std::size_t cols) {
  return attention_from_mask(read_pgm(mask_path), rows, cols);
}

GrayImage attention_heatmap(const AttentionMap& map, std::size_t upscale) {
  if (upscale == 0) throw ParameterError("heatmap upscale must be >= 1");
  const double peak = *std::max_element(map.cells.begin(), map.cells.end());
  GrayImage img{map.cols * upscale, map.rows * upscale, 255, {}};
  img.pixels.resize(img.width * img.height);
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t c = 0; c < img.width; ++c) {
      const double v = map.at(r / upscale, c / upscale);
      img.pixels[r * img.width + c] = peak > 0.0 ? static_cast<int>(std::lround(255.0 * v / peak)) : 0;
    }
  return img;
}

GrayImage cell_mask(std::size_t rows, std::size_t cols, const std::vector<bool>& positive, std::size_t scale) {
  if (positive.size() != rows * cols) throw DimensionError("cell_mask: flag count does not match grid");
  GrayImage img{cols * scale, rows * scale, 255, {}};
  img.pixels.resize(img.width * img.height);
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t c = 0; c < img.width; ++c) img.pixels[r * img.width + c] = positive[(r / scale) * cols + c / scale] ? 255 : 0;
  return img;
}

}  // namespace pjx
