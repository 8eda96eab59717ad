#include "handshape/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "handshape/errors.hpp"
#include "handshape/geometry.hpp"

namespace handshape {

BinaryMask largest_component(const BinaryMask& mask) {
  Grid<int> labels(mask.rows(), mask.cols(), 0);
  std::vector<std::size_t> sizes{0};
  std::deque<std::pair<int, int>> queue;

  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c) {
      if (!mask(r, c) || labels(r, c)) continue;
      const int label = static_cast<int>(sizes.size());
      std::size_t size = 0;
      labels(r, c) = label;
      queue.emplace_back(r, c);
      while (!queue.empty()) {
        auto [qr, qc] = queue.front();
        queue.pop_front();
        ++size;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = qr + dr, nc = qc + dc;
            if (mask.at_or(nr, nc, 0) && !labels(nr, nc)) {
              labels(nr, nc) = label;
              queue.emplace_back(nr, nc);
            }
          }
      }
      sizes.push_back(size);
    }

  if (sizes.size() == 1) throw EmptyMask("largest_component: mask has no foreground");
  // max_element returns the first maximum, i.e. the lowest label.
  const int best = static_cast<int>(std::max_element(sizes.begin() + 1, sizes.end()) - sizes.begin());

  BinaryMask out(mask.rows(), mask.cols());
  auto l = labels.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = l[i] == best ? 1 : 0;
  return out;
}

Inclination principal_inclination(const BinaryMask& mask) {
  const auto center = centroid(mask);
  if (!center) throw EmptyMask("principal_inclination: mask has no foreground");

  double mxx = 0.0, myy = 0.0, mxy = 0.0;
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c)
      if (mask(r, c)) {
        const double x = c - center->col;
        const double y = r - center->row;
        mxx += x * x;
        myy += y * y;
        mxy += x * y;
      }

  const double scale = mxx + myy;
  constexpr double kIsotropy = 1e-9;
  if (scale == 0.0 ||
      (std::abs(mxy) <= kIsotropy * scale && std::abs(mxx - myy) <= kIsotropy * scale))
    return Inclination{0.0, true};

  // Rows grow downwards, so with x = col and y = row the angle of the major
  // axis from the vertical, counterclockwise as seen on screen, is
  // 1/2 atan2(2 mu_xy, mu_yy - mu_xx).
  double phi = 0.5 * degrees(std::atan2(2.0 * mxy, myy - mxx));
  if (phi <= -90.0) phi += 180.0;
  return Inclination{phi, false};
}

namespace {

struct RotationFrame {
  int rows = 0;
  int cols = 0;
  double src_cr = 0.0, src_cc = 0.0;
  double dst_cr = 0.0, dst_cc = 0.0;
  SinCos sc;
};

int grown_extent(int original, double needed) {
  int n = std::max(1, static_cast<int>(std::ceil(needed - 1e-9)));
  if ((n - original) % 2 != 0) ++n;
  return n;
}

RotationFrame rotation_frame(int rows, int cols, double degrees) {
  RotationFrame f;
  f.sc = sincos_degrees(degrees);
  const double as = std::abs(f.sc.sin), ac = std::abs(f.sc.cos);
  f.cols = grown_extent(cols, cols * ac + rows * as);
  f.rows = grown_extent(rows, cols * as + rows * ac);
  f.src_cr = (rows - 1) / 2.0;
  f.src_cc = (cols - 1) / 2.0;
  f.dst_cr = (f.rows - 1) / 2.0;
  f.dst_cc = (f.cols - 1) / 2.0;
  return f;
}

// Source (row, col) of destination pixel (r, c) under a counterclockwise
// rotation, computed in a y-up frame.
Point2 source_of(const RotationFrame& f, int r, int c) {
  const double u = c - f.dst_cc;
  const double v = f.dst_cr - r;
  const double su = f.sc.cos * u + f.sc.sin * v;
  const double sv = -f.sc.sin * u + f.sc.cos * v;
  return Point2{f.src_cr - sv, f.src_cc + su};
}

}  // namespace

GrayImage rotate_image(const GrayImage& image, double degrees) {
  const auto f = rotation_frame(image.rows(), image.cols(), degrees);
  GrayImage out(f.rows, f.cols);
  for (int r = 0; r < f.rows; ++r)
    for (int c = 0; c < f.cols; ++c) {
      const Point2 s = source_of(f, r, c);
      out(r, c) = sample_bilinear(image, s.row, s.col);
    }
  return out;
}

BinaryMask rotate_mask(const BinaryMask& mask, double degrees) {
  const auto f = rotation_frame(mask.rows(), mask.cols(), degrees);
  BinaryMask out(f.rows, f.cols);
  for (int r = 0; r < f.rows; ++r)
    for (int c = 0; c < f.cols; ++c) {
      const Point2 s = source_of(f, r, c);
      out(r, c) = mask.at_or(static_cast<int>(std::floor(s.row + 0.5)),
                             static_cast<int>(std::floor(s.col + 0.5)), 0);
    }
  return out;
}

namespace {

template <typename T>
Grid<T> rotate_180_impl(const Grid<T>& g) {
  Grid<T> out(g.rows(), g.cols());
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) out(g.rows() - 1 - r, g.cols() - 1 - c) = g(r, c);
  return out;
}

// Most frequent value; ties resolve to the smaller value.
int mode_of(std::span<const int> values) {
  std::map<int, int> freq;
  for (int v : values) ++freq[v];
  int best = 0, best_count = -1;
  for (auto [v, n] : freq)
    if (n > best_count) {
      best = v;
      best_count = n;
    }
  return best;
}

}  // namespace

GrayImage rotate_180(const GrayImage& image) { return rotate_180_impl(image); }
BinaryMask rotate_180(const BinaryMask& mask) { return rotate_180_impl(mask); }

std::vector<int> scanline_runs(const BinaryMask& mask) {
  std::vector<int> runs(mask.rows(), 0);
  for (int r = 0; r < mask.rows(); ++r) {
    std::uint8_t prev = 0;
    for (int c = 0; c < mask.cols(); ++c) {
      if (mask(r, c) && !prev) ++runs[r];
      prev = mask(r, c);
    }
  }
  return runs;
}

UprightResult upright_correction(const GrayImage& image, const BinaryMask& mask) {
  const auto box = bounding_box(mask);
  if (!box) throw EmptyMask("upright_correction: mask has no foreground");
  if (image.rows() != mask.rows() || image.cols() != mask.cols())
    throw DimensionError("upright_correction: image and mask differ in size");

  const auto runs = scanline_runs(mask);
  const int half = box->height() / 2;
  UprightResult result{image, mask, false};
  if (half == 0) return result;

  const std::span<const int> all(runs);
  const int top_mode = mode_of(all.subspan(box->top, half));
  const int bottom_mode = mode_of(all.subspan(box->bottom - half + 1, half));
  if (bottom_mode > top_mode) {
    result.pixels = rotate_180(image);
    result.mask = rotate_180(mask);
    result.flipped = true;
  }
  return result;
}

namespace {

// Counterclockwise rotation, uniform scaling and centring in a single
// resampling step, so the mask is quantised once. The scale fits the
// rotated pixel set (each pixel reaching half a pixel past its centre).
Resampled resample_rotated(const GrayImage& image, const BinaryMask& mask, double degrees) {
  if (image.rows() != mask.rows() || image.cols() != mask.cols())
    throw DimensionError("resample: image and mask differ in size");
  const auto center = centroid(mask);
  if (!center) throw EmptyMask("resample: mask has no foreground");
  const SinCos rot = sincos_degrees(degrees);

  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c)
      if (mask(r, c)) {
        const double dx = c - center->col, dy = center->row - r;
        const double x = rot.cos * dx - rot.sin * dy;
        const double y = rot.sin * dx + rot.cos * dy;
        x_lo = std::min(x_lo, x);
        x_hi = std::max(x_hi, x);
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      }

  // The larger side maps to kCanonicalExtent unless the centroid sits so far
  // off the box center that the far edge would leave the canvas margin.
  const double side = std::max(x_hi - x_lo, y_hi - y_lo) + 1.0;
  const double reach = std::max({-x_lo, x_hi, -y_lo, y_hi}) + 0.5;
  const double scale = std::min(kCanonicalExtent / side, kCanonicalExtent / 2.0 / reach);

  constexpr double mid = kCanonicalSide / 2;
  Resampled out{GrayImage(kCanonicalSide, kCanonicalSide),
                BinaryMask(kCanonicalSide, kCanonicalSide)};
  for (int r = 0; r < kCanonicalSide; ++r)
    for (int c = 0; c < kCanonicalSide; ++c) {
      const double x = (c - mid) / scale, y = (mid - r) / scale;
      const double sr = center->row - (-rot.sin * x + rot.cos * y);
      const double sc = center->col + (rot.cos * x + rot.sin * y);
      const auto m = mask.at_or(static_cast<int>(std::floor(sr + 0.5)),
                                static_cast<int>(std::floor(sc + 0.5)), 0);
      out.mask(r, c) = m;
      if (m) out.pixels(r, c) = sample_bilinear(image, sr, sc);
    }
  return out;
}

}  // namespace

Resampled resample_center(const GrayImage& image, const BinaryMask& mask) {
  return resample_rotated(image, mask, 0.0);
}

BinaryMask extract_contour(const BinaryMask& mask) {
  BinaryMask out(mask.rows(), mask.cols());
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c)
      if (mask(r, c) && (!mask.at_or(r - 1, c, 0) || !mask.at_or(r + 1, c, 0) ||
                         !mask.at_or(r, c - 1, 0) || !mask.at_or(r, c + 1, 0)))
        out(r, c) = 1;
  return out;
}

CanonicalHandImage canonicalize(const SegmentedImage& seg, CanonicalizationStages& stages) {
  if (seg.pixels.rows() != seg.mask.rows() || seg.pixels.cols() != seg.mask.cols())
    throw DimensionError("canonicalize: pixels and mask differ in size");
  const BinaryMask hand = largest_component(seg.mask);
  const GrayImage pixels = apply_mask(seg.pixels, hand);
  const Inclination tilt = principal_inclination(hand);

  const BinaryMask oriented_mask = largest_component(rotate_mask(hand, -tilt.degrees));
  const GrayImage oriented = apply_mask(rotate_image(pixels, -tilt.degrees), oriented_mask);

  // The derotated copy only decides the flip; the canonical image is
  // resampled straight from the segmented input.
  UprightResult upright = upright_correction(oriented, oriented_mask);
  Resampled canon =
      resample_rotated(pixels, hand, upright.flipped ? 180.0 - tilt.degrees : -tilt.degrees);

  CanonicalHandImage out{std::move(canon.pixels), std::move(canon.mask), {}};
  out.contour = extract_contour(out.mask);

  stages.segmented = seg.pixels;
  stages.oriented = oriented;
  stages.upright = std::move(upright.pixels);
  stages.mask = out.mask;
  stages.contour = out.contour;
  return out;
}

CanonicalHandImage canonicalize(const SegmentedImage& seg) {
  CanonicalizationStages stages;
  return canonicalize(seg, stages);
}

void write_stages(const std::filesystem::path& dir, const std::string& stem,
                  const CanonicalizationStages& stages) {
  write_png(dir / (stem + "_1_segmented.png"), stages.segmented);
  write_png(dir / (stem + "_2_oriented.png"), stages.oriented);
  write_png(dir / (stem + "_3_upright.png"), stages.upright);
  write_png(dir / (stem + "_4_mask.png"), stages.mask);
  write_png(dir / (stem + "_5_contour.png"), stages.contour);
}

}  // namespace handshape
