#include "handshape/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "handshape/errors.hpp"

namespace handshape {

std::size_t count_foreground(const BinaryMask& mask) {
  return static_cast<std::size_t>(std::count(mask.values().begin(), mask.values().end(), 1));
}

std::optional<BoundingBox> bounding_box(const BinaryMask& mask) {
  BoundingBox box{mask.rows(), mask.cols(), -1, -1};
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c)
      if (mask(r, c)) {
        box.top = std::min(box.top, r);
        box.bottom = std::max(box.bottom, r);
        box.left = std::min(box.left, c);
        box.right = std::max(box.right, c);
      }
  if (box.bottom < 0) return std::nullopt;
  return box;
}

std::optional<Point2> centroid(const BinaryMask& mask) {
  double sr = 0.0, sc = 0.0;
  std::size_t n = 0;
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c)
      if (mask(r, c)) {
        sr += r;
        sc += c;
        ++n;
      }
  if (n == 0) return std::nullopt;
  return Point2{sr / static_cast<double>(n), sc / static_cast<double>(n)};
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("mask_iou: masks differ in size");
  std::size_t inter = 0, uni = 0;
  auto va = a.values();
  auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    inter += (va[i] && vb[i]);
    uni += (va[i] || vb[i]);
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double sample_bilinear(const GrayImage& image, double row, double col) {
  const double r0f = std::floor(row);
  const double c0f = std::floor(col);
  const int r0 = static_cast<int>(r0f);
  const int c0 = static_cast<int>(c0f);
  const double fr = row - r0f;
  const double fc = col - c0f;
  double v = 0.0;
  v += (1 - fr) * (1 - fc) * image.at_or(r0, c0, 0.0);
  if (fc != 0.0) v += (1 - fr) * fc * image.at_or(r0, c0 + 1, 0.0);
  if (fr != 0.0) v += fr * (1 - fc) * image.at_or(r0 + 1, c0, 0.0);
  if (fr != 0.0 && fc != 0.0) v += fr * fc * image.at_or(r0 + 1, c0 + 1, 0.0);
  return v;
}

GrayImage apply_mask(const GrayImage& pixels, const BinaryMask& mask) {
  if (pixels.rows() != mask.rows() || pixels.cols() != mask.cols())
    throw DimensionError("apply_mask: image and mask differ in size");
  GrayImage out = pixels;
  auto o = out.values();
  auto m = mask.values();
  for (std::size_t i = 0; i < o.size(); ++i)
    if (!m[i]) o[i] = 0.0;
  return out;
}

RgbImage apply_mask(const RgbImage& rgb, const BinaryMask& mask) {
  if (rgb.rows() != mask.rows() || rgb.cols() != mask.cols())
    throw DimensionError("apply_mask: image and mask differ in size");
  RgbImage out = rgb;
  auto o = out.values();
  auto m = mask.values();
  for (std::size_t i = 0; i < o.size(); ++i)
    if (!m[i]) o[i] = Rgb{};
  return out;
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

cv::Mat decode(const std::filesystem::path& path, int flags) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  cv::Mat m = cv::imread(path.string(), flags);
  if (m.empty()) throw IoError("cannot decode image: " + path.string());
  return m;
}

void encode(const std::filesystem::path& path, const cv::Mat& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), m);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write image " + path.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write image: " + path.string());
}

}  // namespace

RgbImage to_rgb(const GrayImage& gray) {
  RgbImage out(gray.rows(), gray.cols());
  for (int r = 0; r < gray.rows(); ++r)
    for (int c = 0; c < gray.cols(); ++c) {
      const auto v = to_byte(gray(r, c));
      out(r, c) = Rgb{v, v, v};
    }
  return out;
}

RgbImage read_rgb(const std::filesystem::path& path) {
  cv::Mat m = decode(path, cv::IMREAD_COLOR);
  RgbImage out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r) {
    const auto* row = m.ptr<cv::Vec3b>(r);
    for (int c = 0; c < m.cols; ++c) out(r, c) = Rgb{row[c][2], row[c][1], row[c][0]};
  }
  return out;
}

GrayImage read_gray(const std::filesystem::path& path) {
  cv::Mat m = decode(path, cv::IMREAD_GRAYSCALE | cv::IMREAD_ANYDEPTH);
  const double scale = m.depth() == CV_16U ? 65535.0 : 255.0;
  cv::Mat f;
  m.convertTo(f, CV_64F, 1.0 / scale);
  GrayImage out(f.rows, f.cols);
  for (int r = 0; r < f.rows; ++r) {
    const auto* row = f.ptr<double>(r);
    for (int c = 0; c < f.cols; ++c) out(r, c) = row[c];
  }
  return out;
}

BinaryMask read_mask(const std::filesystem::path& path) {
  cv::Mat m = decode(path, cv::IMREAD_GRAYSCALE);
  BinaryMask out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r) {
    const auto* row = m.ptr<std::uint8_t>(r);
    for (int c = 0; c < m.cols; ++c) out(r, c) = row[c] ? 1 : 0;
  }
  return out;
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  cv::Mat m(image.rows(), image.cols(), CV_8UC1);
  for (int r = 0; r < image.rows(); ++r)
    for (int c = 0; c < image.cols(); ++c) m.at<std::uint8_t>(r, c) = to_byte(image(r, c));
  encode(path, m);
}

void write_png(const std::filesystem::path& path, const BinaryMask& mask) {
  cv::Mat m(mask.rows(), mask.cols(), CV_8UC1);
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c) m.at<std::uint8_t>(r, c) = mask(r, c) ? 255 : 0;
  encode(path, m);
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  cv::Mat m(image.rows(), image.cols(), CV_8UC3);
  for (int r = 0; r < image.rows(); ++r)
    for (int c = 0; c < image.cols(); ++c) {
      const Rgb p = image(r, c);
      m.at<cv::Vec3b>(r, c) = cv::Vec3b(p.b, p.g, p.r);
    }
  encode(path, m);
}

}  // namespace handshape
