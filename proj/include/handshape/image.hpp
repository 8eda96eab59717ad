#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace handshape {

/// Dense row-major 2D grid. Indexed as (row, col).
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool in_bounds(int r, int c) const noexcept {
    return r >= 0 && c >= 0 && r < rows_ && c < cols_;
  }

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  /// Value at (r, c), or `outside` when out of bounds.
  T at_or(int r, int c, T outside) const { return in_bounds(r, c) ? (*this)(r, c) : outside; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using RgbImage = Grid<Rgb>;
/// Scalar intensities, nominally in [0, 1].
using GrayImage = Grid<double>;
/// Values are exactly 0 or 1.
using BinaryMask = Grid<std::uint8_t>;

struct BoundingBox {
  int top = 0;
  int left = 0;
  int bottom = 0;  // inclusive
  int right = 0;   // inclusive
  int height() const noexcept { return bottom - top + 1; }
  int width() const noexcept { return right - left + 1; }
};

struct Point2 {
  double row = 0.0;
  double col = 0.0;
};

std::size_t count_foreground(const BinaryMask& mask);
std::optional<BoundingBox> bounding_box(const BinaryMask& mask);
/// Mean (row, col) of foreground pixels; nullopt for an empty mask.
std::optional<Point2> centroid(const BinaryMask& mask);
/// Intersection over union of two equally sized masks; 1 when both are empty.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

/// Bilinear sample at fractional (row, col); zero outside the grid.
double sample_bilinear(const GrayImage& image, double row, double col);

/// pixels * mask, elementwise.
GrayImage apply_mask(const GrayImage& pixels, const BinaryMask& mask);
/// Keeps the RGB value where mask is set, black elsewhere.
RgbImage apply_mask(const RgbImage& rgb, const BinaryMask& mask);

/// Replicates intensities into all three channels, rounding to 8 bits.
RgbImage to_rgb(const GrayImage& gray);

// PNG and other lossless formats, decoded bit-exactly.
RgbImage read_rgb(const std::filesystem::path& path);
GrayImage read_gray(const std::filesystem::path& path);
BinaryMask read_mask(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const GrayImage& image);
void write_png(const std::filesystem::path& path, const BinaryMask& mask);
void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace handshape
