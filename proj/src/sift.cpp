#include "handshape/sift.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "handshape/errors.hpp"
#include "handshape/geometry.hpp"

namespace handshape {

void SiftConfig::validate() const {
  if (octaves < 1 || scales_per_octave < 1 || base_sigma <= 0.0 || assumed_blur < 0.0 ||
      assumed_blur >= base_sigma || contrast_threshold < 0.0 || edge_ratio <= 1.0 ||
      window < 4 || fallback_scale <= 0.0 || orientation_peak_ratio <= 0.0 ||
      orientation_peak_ratio > 1.0)
    throw ValidationError("invalid SIFT configuration");
}

GrayImage gaussian_blur(const GrayImage& image, double sigma) {
  if (sigma <= 0.0) return image;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  const int rows = image.rows(), cols = image.cols();
  GrayImage tmp(rows, cols), out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * image(r, std::clamp(c + i, 0, cols - 1));
      tmp(r, c) = acc;
    }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * tmp(std::clamp(r + i, 0, rows - 1), c);
      out(r, c) = acc;
    }
  return out;
}

namespace {

GrayImage downsample(const GrayImage& image) {
  GrayImage out((image.rows() + 1) / 2, (image.cols() + 1) / 2);
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c) out(r, c) = image(2 * r, 2 * c);
  return out;
}

GrayImage subtract(const GrayImage& a, const GrayImage& b) {
  GrayImage out(a.rows(), a.cols());
  auto o = out.values();
  auto va = a.values();
  auto vb = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = va[i] - vb[i];
  return out;
}

struct Gradient {
  double magnitude;
  double angle;  // degrees, [0, 360)
};

Gradient gradient_at(const GrayImage& img, int r, int c) {
  const double gx = img.at_or(r, c + 1, img.at_or(r, c, 0.0)) - img.at_or(r, c - 1, img.at_or(r, c, 0.0));
  const double gy = img.at_or(r + 1, c, img.at_or(r, c, 0.0)) - img.at_or(r - 1, c, img.at_or(r, c, 0.0));
  double angle = degrees(std::atan2(gy, gx));
  if (angle < 0.0) angle += 360.0;
  if (angle >= 360.0) angle -= 360.0;
  return {std::hypot(gx, gy), angle};
}

bool is_extremum(const std::vector<GrayImage>& dog, int layer, int r, int c) {
  const double v = dog[layer](r, c);
  const bool is_max = v > 0.0;
  for (int l = layer - 1; l <= layer + 1; ++l)
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (l == layer && dr == 0 && dc == 0) continue;
        const double n = dog[l](r + dr, c + dc);
        if (is_max ? n >= v : n <= v) return false;
      }
  return true;
}

bool passes_edge_test(const GrayImage& d, int r, int c, double ratio) {
  const double dxx = d(r, c + 1) + d(r, c - 1) - 2.0 * d(r, c);
  const double dyy = d(r + 1, c) + d(r - 1, c) - 2.0 * d(r, c);
  const double dxy = (d(r + 1, c + 1) - d(r + 1, c - 1) - d(r - 1, c + 1) + d(r - 1, c - 1)) / 4.0;
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  if (det <= 0.0) return false;
  return tr * tr * ratio < (ratio + 1.0) * (ratio + 1.0) * det;
}

}  // namespace

std::vector<double> dominant_orientations(const GrayImage& smoothed, double x, double y,
                                          double scale, const SiftConfig& config) {
  constexpr int kBins = 36;
  std::array<double, kBins> hist{};
  const double sigma = 1.5 * scale;
  const int radius = static_cast<int>(std::lround(3.0 * sigma));
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  for (int r = cy - radius; r <= cy + radius; ++r)
    for (int c = cx - radius; c <= cx + radius; ++c) {
      if (!smoothed.in_bounds(r, c)) continue;
      const double dx = c - x, dy = r - y;
      const double d2 = dx * dx + dy * dy;
      if (d2 > radius * radius) continue;
      const Gradient g = gradient_at(smoothed, r, c);
      const int bin = static_cast<int>(g.angle / (360.0 / kBins)) % kBins;
      hist[bin] += g.magnitude * std::exp(-d2 / (2.0 * sigma * sigma));
    }

  // Two passes of [1 1 1]/3 circular smoothing.
  for (int pass = 0; pass < 2; ++pass) {
    std::array<double, kBins> s{};
    for (int i = 0; i < kBins; ++i)
      s[i] = (hist[(i + kBins - 1) % kBins] + hist[i] + hist[(i + 1) % kBins]) / 3.0;
    hist = s;
  }

  const double peak = *std::max_element(hist.begin(), hist.end());
  if (peak <= 0.0) return {0.0};
  std::vector<double> result;
  for (int i = 0; i < kBins; ++i) {
    const double left = hist[(i + kBins - 1) % kBins];
    const double right = hist[(i + 1) % kBins];
    if (hist[i] <= left || hist[i] <= right || hist[i] < config.orientation_peak_ratio * peak)
      continue;
    const double offset = 0.5 * (left - right) / (left - 2.0 * hist[i] + right);
    double angle = (i + 0.5 + offset) * (360.0 / kBins);
    angle = std::fmod(angle + 360.0, 360.0);
    result.push_back(angle);
  }
  if (result.empty()) result.push_back(0.0);
  return result;
}

std::vector<Keypoint> detect_keypoints(const GrayImage& image, const SiftConfig& config) {
  config.validate();
  if (image.empty() ||
      std::all_of(image.values().begin(), image.values().end(), [](double v) { return v == 0.0; }))
    throw EmptyMask("detect_keypoints: blank image");

  const int s = config.scales_per_octave;
  const double k = std::pow(2.0, 1.0 / s);
  const GrayImage base_smoothed = gaussian_blur(
      image, std::sqrt(config.base_sigma * config.base_sigma -
                       config.assumed_blur * config.assumed_blur));

  std::vector<Keypoint> keypoints;
  GrayImage octave_base = base_smoothed;
  for (int o = 0; o < config.octaves; ++o) {
    if (octave_base.rows() < 8 || octave_base.cols() < 8) break;
    std::vector<GrayImage> gauss{octave_base};
    for (int i = 1; i < s + 3; ++i) {
      const double prev = config.base_sigma * std::pow(k, i - 1);
      const double next = prev * k;
      gauss.push_back(gaussian_blur(gauss.back(), std::sqrt(next * next - prev * prev)));
    }
    std::vector<GrayImage> dog;
    for (int i = 0; i + 1 < static_cast<int>(gauss.size()); ++i)
      dog.push_back(subtract(gauss[i + 1], gauss[i]));

    const double step = std::pow(2.0, o);
    for (int layer = 1; layer <= s; ++layer) {
      const GrayImage& d = dog[layer];
      for (int r = 1; r + 1 < d.rows(); ++r)
        for (int c = 1; c + 1 < d.cols(); ++c) {
          if (std::abs(d(r, c)) < config.contrast_threshold) continue;
          if (!is_extremum(dog, layer, r, c)) continue;
          if (!passes_edge_test(d, r, c, config.edge_ratio)) continue;

          // One Newton step on the 2D quadratic fit for sub-pixel position.
          const double gx = (d(r, c + 1) - d(r, c - 1)) / 2.0;
          const double gy = (d(r + 1, c) - d(r - 1, c)) / 2.0;
          const double dxx = d(r, c + 1) + d(r, c - 1) - 2.0 * d(r, c);
          const double dyy = d(r + 1, c) + d(r - 1, c) - 2.0 * d(r, c);
          const double dxy =
              (d(r + 1, c + 1) - d(r + 1, c - 1) - d(r - 1, c + 1) + d(r - 1, c - 1)) / 4.0;
          const double det = dxx * dyy - dxy * dxy;
          double ox = 0.0, oy = 0.0;
          if (det != 0.0) {
            ox = -(dyy * gx - dxy * gy) / det;
            oy = -(dxx * gy - dxy * gx) / det;
            if (std::abs(ox) > 0.5 || std::abs(oy) > 0.5) ox = oy = 0.0;
          }

          const double x = (c + ox) * step;
          const double y = (r + oy) * step;
          if (x < 0.0 || y < 0.0 || x > image.cols() - 1 || y > image.rows() - 1) continue;
          const double scale = config.base_sigma * std::pow(k, layer) * step;
          for (double angle : dominant_orientations(base_smoothed, x, y, scale, config))
            keypoints.push_back(Keypoint{x, y, scale, angle});
        }
    }
    octave_base = downsample(gauss[s]);
  }

  if (keypoints.empty()) {
    double sr = 0.0, sc = 0.0;
    std::size_t n = 0;
    for (int r = 0; r < image.rows(); ++r)
      for (int c = 0; c < image.cols(); ++c)
        if (image(r, c) != 0.0) {
          sr += r;
          sc += c;
          ++n;
        }
    const double x = sc / n, y = sr / n;
    for (double angle : dominant_orientations(base_smoothed, x, y, config.fallback_scale, config))
      keypoints.push_back(Keypoint{x, y, config.fallback_scale, angle});
  }
  return keypoints;
}

DescriptorSet compute_descriptors(const GrayImage& image, std::span<const Keypoint> keypoints,
                                  const SiftConfig& config) {
  config.validate();
  const GrayImage smoothed = gaussian_blur(
      image, std::sqrt(config.base_sigma * config.base_sigma -
                       config.assumed_blur * config.assumed_blur));
  constexpr int nb = kSiftSpatialBins;
  constexpr int no = kSiftOrientationBins;

  DescriptorSet set;
  set.kind = DescriptorKind::sift;
  for (const Keypoint& kp : keypoints) {
    if (kp.scale <= 0.0) throw ValidationError("keypoint scale must be positive");
    const double half = 0.5 * config.window * kp.scale / config.base_sigma;
    const double cell = 2.0 * half / nb;
    const double weight_sigma = half;
    const SinCos rot = sincos_degrees(kp.orientation);
    const int reach = static_cast<int>(std::ceil(half * std::sqrt(2.0) + cell));

    std::vector<double> hist(kSiftDimension, 0.0);
    const int cx = static_cast<int>(std::floor(kp.x));
    const int cy = static_cast<int>(std::floor(kp.y));
    for (int r = cy - reach; r <= cy + reach + 1; ++r)
      for (int c = cx - reach; c <= cx + reach + 1; ++c) {
        if (!smoothed.in_bounds(r, c)) continue;
        const double dx = c - kp.x, dy = r - kp.y;
        // Into the keypoint frame, in cell units, bin centres at 0..nb-1.
        const double u = (rot.cos * dx + rot.sin * dy) / cell + nb / 2.0 - 0.5;
        const double v = (-rot.sin * dx + rot.cos * dy) / cell + nb / 2.0 - 0.5;
        if (u <= -1.0 || u >= nb || v <= -1.0 || v >= nb) continue;
        const Gradient g = gradient_at(smoothed, r, c);
        if (g.magnitude == 0.0) continue;
        double rel = g.angle - kp.orientation;
        rel = std::fmod(rel + 720.0, 360.0);
        const double o = rel / (360.0 / no);
        const double w = g.magnitude * std::exp(-(dx * dx + dy * dy) /
                                                (2.0 * weight_sigma * weight_sigma));

        const int u0 = static_cast<int>(std::floor(u));
        const int v0 = static_cast<int>(std::floor(v));
        const int o0 = static_cast<int>(std::floor(o));
        const double fu = u - u0, fv = v - v0, fo = o - o0;
        for (int iv = 0; iv < 2; ++iv) {
          const int vb = v0 + iv;
          if (vb < 0 || vb >= nb) continue;
          const double wv = iv ? fv : 1.0 - fv;
          for (int iu = 0; iu < 2; ++iu) {
            const int ub = u0 + iu;
            if (ub < 0 || ub >= nb) continue;
            const double wu = iu ? fu : 1.0 - fu;
            for (int io = 0; io < 2; ++io) {
              const double wo = io ? fo : 1.0 - fo;
              if (wo == 0.0) continue;
              const int ob = (o0 + io) % no;
              hist[(vb * nb + ub) * no + ob] += w * wv * wu * wo;
            }
          }
        }
      }

    auto normalise = [&hist] {
      double n2 = 0.0;
      for (double h : hist) n2 += h * h;
      if (n2 == 0.0) return;
      const double inv = 1.0 / std::sqrt(n2);
      for (double& h : hist) h *= inv;
    };
    normalise();
    for (double& h : hist) h = std::min(h, 0.2);
    normalise();
    set.vectors.push_back(std::move(hist));
  }
  return set;
}

}  // namespace handshape
