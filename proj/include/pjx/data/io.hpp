#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "pjx/types.hpp"

namespace pjx {

// PJXF feature file: "PJXF" | C:u64 | N:u64 | M:u64 | C*N*M f64, channel-major,
// all little-endian.
void write_features(const std::filesystem::path& path, const SpatialFeatures& features);
SpatialFeatures read_features(const std::filesystem::path& path);

// Portable graymap, row-major, 0 <= pixel <= maxval.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int maxval = 255;
  std::vector<int> pixels;

  int at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

// Reads P2 (ASCII) or P5 (binary, maxval <= 255 or 16-bit big-endian).
GrayImage read_pgm(const std::filesystem::path& path);
// Writes P2.
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

// Area-weighted resampling of a row-major grid: every output cell is the
// overlap-weighted mean of the input cells it covers.
std::vector<double> area_resample(const std::vector<double>& grid, std::size_t rows, std::size_t cols,
                                  std::size_t out_rows, std::size_t out_cols);

// Human attention ground truth from a segmentation mask: area-average to
// N x M, keep cells >= half the maximum, spread mass uniformly over them.
// An all-zero mask gives the uniform map.
AttentionMap attention_from_mask(const GrayImage& mask, std::size_t rows, std::size_t cols);
AttentionMap load_attention_gt(const std::filesystem::path& mask_path, std::size_t rows, std::size_t cols);

// Heatmap with the hottest cell at 255, optionally enlarged by nearest-neighbour.
GrayImage attention_heatmap(const AttentionMap& map, std::size_t upscale = 1);

// Binary mask image with `scale` x `scale` pixels per cell; cells flagged in
// `positive` are 255.
GrayImage cell_mask(std::size_t rows, std::size_t cols, const std::vector<bool>& positive, std::size_t scale);

}  // namespace pjx
