#include <doctest.h>

#include "handshape/errors.hpp"
#include "handshape/geometry.hpp"
#include "handshape/preprocess.hpp"
#include "handshape/radon.hpp"
#include "handshape/rng.hpp"
#include "synthetic.hpp"

using namespace handshape;

namespace {

double total(const GrayImage& img) {
  double s = 0;
  for (double v : img.values()) s += v;
  return s;
}

// Line integral of the bilinear interpolant along x cos(t) + y sin(t) = b,
// trapezoid rule with a fine step. Coordinates as in radon_transform.
double oracle_line_integral(const GrayImage& img, double theta_deg, double b) {
  const SinCos sc = sincos_degrees(theta_deg);
  const double step = 0.01;
  double sum = 0;
  for (double t = -100.0; t <= 100.0; t += step) {
    const double x = b * sc.cos - t * sc.sin;
    const double y = b * sc.sin + t * sc.cos;
    sum += sample_bilinear(img, 64.0 - y, 64.0 + x);
  }
  return sum * step;
}

GrayImage random_image(Rng& rng) {
  GrayImage img(128, 128);
  const int blobs = 1 + static_cast<int>(rng.uniform_index(4));
  for (int k = 0; k < blobs; ++k) {
    const double cr = rng.uniform(30, 98), cc = rng.uniform(30, 98), s = rng.uniform(3, 12);
    const double a = rng.uniform(0.2, 1.0);
    for (int r = 0; r < 128; ++r)
      for (int c = 0; c < 128; ++c) {
        const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
        img(r, c) += a * std::exp(-d2 / (2 * s * s));
      }
  }
  return img;
}

// Rotation about the Radon origin (64, 64) on a fixed canvas, y up.
GrayImage rotate_about_origin(const GrayImage& img, double degrees) {
  const SinCos sc = sincos_degrees(degrees);
  GrayImage out(img.rows(), img.cols());
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c) {
      const double x = c - 64.0, y = 64.0 - r;
      const double sx = sc.cos * x + sc.sin * y, sy = -sc.sin * x + sc.cos * y;
      out(r, c) = sample_bilinear(img, 64.0 - sy, 64.0 + sx);
    }
  return out;
}

// Angle shift maximising the correlation of two sinograms. Shifting past
// 180 degrees mirrors the offset axis, since R(b, t + 180) = R(-b, t).
int best_angle_shift(const Sinogram& a, const Sinogram& rotated) {
  int best = 0;
  double best_score = -1;
  for (int s = 0; s < kRadonAngles; ++s) {
    double score = 0;
    for (int t = 0; t < kRadonAngles; ++t) {
      int src = t - s;
      const bool flip = src < 0;
      if (flip) src += kRadonAngles;
      for (int k = 0; k < kRadonOffsets; ++k)
        score += rotated.values(t, k) * a.values(src, flip ? kRadonOffsets - 1 - k : k);
    }
    if (score > best_score) best_score = score, best = s;
  }
  return best;
}

}  // namespace

TEST_SUITE("radon") {
  TEST_CASE("blank image has a blank sinogram") {
    const Sinogram s = radon_transform(GrayImage(128, 128));
    for (double v : s.values.values()) REQUIRE(v == 0.0);
    CHECK_THROWS_AS(radon_transform(GrayImage(64, 128)), DimensionError);
  }

  TEST_CASE("single centred pixel projects onto the central bin") {
    GrayImage img(128, 128);
    img(64, 64) = 1.0;
    const Sinogram s = radon_transform(img);
    for (int t = 0; t < kRadonAngles; ++t) {
      double row = 0;
      for (int k = 0; k < kRadonOffsets; ++k) row += s.values(t, k);
      REQUIRE(row == doctest::Approx(1.0).epsilon(1e-12));
      REQUIRE(s.values(t, kRadonOffsetOrigin) >= 1.0 - 1e-9);
    }
  }

  TEST_CASE("every projection conserves mass") {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      const GrayImage img = random_image(rng);
      const double mass = total(img);
      const Sinogram s = radon_transform(img);
      for (int t = 0; t < kRadonAngles; ++t) {
        double row = 0;
        for (int k = 0; k < kRadonOffsets; ++k) row += s.values(t, k);
        REQUIRE(std::abs(row - mass) <= 1e-9 * mass);
      }
    }
  }

  TEST_CASE("transform is linear") {
    Rng rng(9);
    const GrayImage f = random_image(rng), g = random_image(rng);
    const double a = 0.7, b = -1.3;
    GrayImage h(128, 128);
    for (std::size_t i = 0; i < h.size(); ++i) h.values()[i] = a * f.values()[i] + b * g.values()[i];
    const Sinogram sf = radon_transform(f), sg = radon_transform(g), sh = radon_transform(h);
    for (std::size_t i = 0; i < sh.values.size(); ++i)
      REQUIRE(std::abs(sh.values.values()[i] - (a * sf.values.values()[i] + b * sg.values.values()[i])) <= 1e-9);
  }

  TEST_CASE("axis-aligned projections match line integrals") {
    // 4x4 block near the centre: theta = 90 sums rows, theta = 180 sums columns.
    GrayImage img(128, 128);
    Rng rng(6);
    for (int r = 60; r < 64; ++r)
      for (int c = 62; c < 66; ++c) img(r, c) = rng.uniform(0.1, 1.0);
    const double mass = total(img);
    const Sinogram s = radon_transform(img);
    for (int angle : {90, 180}) {
      for (int k = 0; k < kRadonOffsets; ++k) {
        const double oracle = oracle_line_integral(img, angle, Sinogram::offset_of(k));
        REQUIRE(std::abs(s.values(angle - 1, k) - oracle) <= 1e-3 * mass);
      }
    }
    // theta = 90: b is the height above the origin row.
    for (int r = 60; r < 64; ++r) {
      double row_sum = 0;
      for (int c = 62; c < 66; ++c) row_sum += img(r, c);
      CHECK(s.values(89, kRadonOffsetOrigin + 64 - r) == doctest::Approx(row_sum));
    }
  }

  TEST_CASE("half-turn symmetry") {
    Rng rng(12);
    const GrayImage img = random_image(rng);
    const Sinogram s = radon_transform(img);
    // R(b, 180) against R(-b, 0), with 0 degrees approximated by 1 degree.
    double diff = 0, mass = total(img);
    for (int k = 0; k < kRadonOffsets; ++k)
      diff += std::abs(s.values(179, k) - s.values(0, kRadonOffsets - 1 - k));
    CHECK(diff <= 0.05 * mass);
  }

  TEST_CASE("rotating the image shifts the sinogram along theta") {
    Rng rng(17);
    const GrayImage img = random_image(rng);
    const Sinogram base = radon_transform(img);
    for (int delta : {30, 45, 90}) {
      CAPTURE(delta);
      const int shift = best_angle_shift(base, radon_transform(rotate_about_origin(img, delta)));
      CHECK(std::abs(shift - delta) <= 1);
    }
  }

  TEST_CASE("descriptor resampling") {
    Sinogram zero;
    for (double v : resample_sinogram(zero).r.values()) REQUIRE(v == 0.0);

    Sinogram flat;
    for (auto& v : flat.values.values()) v = 2.5;
    for (double v : resample_sinogram(flat).r.values()) REQUIRE(v == doctest::Approx(2.5).epsilon(1e-12));

    Rng rng(1);
    Sinogram s = radon_transform(random_image(rng));
    double mass = 0;
    for (double v : s.values.values()) mass += v;
    double desc = 0;
    for (double v : resample_sinogram(s).r.values()) desc += v;
    CHECK(desc * (kRadonAngles * kRadonOffsets / 1024.0) == doctest::Approx(mass).epsilon(1e-9));
  }

  TEST_CASE("45 degree rotation moves descriptor energy by 8 rows") {
    Rng rng(23);
    const GrayImage img = random_image(rng);
    const RadonDescriptor a = resample_sinogram(radon_transform(img));
    const RadonDescriptor b = resample_sinogram(radon_transform(rotate_about_origin(img, 45)));
    std::array<double, 32> ea{}, eb{};
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) {
        ea[i] += a.r(i, j) * a.r(i, j);
        eb[i] += b.r(i, j) * b.r(i, j);
      }
    int best = 0;
    double best_score = -1;
    for (int s = 0; s < 32; ++s) {
      double score = 0;
      for (int i = 0; i < 32; ++i) score += eb[i] * ea[(i - s + 32) % 32];
      if (score > best_score) best_score = score, best = s;
    }
    CHECK(std::abs(best - 8) <= 1);
  }

  TEST_CASE("global and local views") {
    RadonDescriptor d;
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) d.r(i, j) = i * 100 + j;
    const FeatureVector g = to_global(d);
    REQUIRE(g.size() == 1024);
    CHECK(g[0] == d.r(0, 0));
    CHECK(g[32] == d.r(1, 0));
    CHECK(from_global(g).r == d.r);
    CHECK_THROWS_AS(from_global(FeatureVector(1000)), DimensionError);

    const DescriptorSet local = to_local_rows(d);
    CHECK(local.kind == DescriptorKind::radon_local);
    REQUIRE(local.vectors.size() == 32);
    FeatureVector concat;
    for (const auto& row : local.vectors) {
      REQUIRE(row.size() == 32);
      concat.insert(concat.end(), row.begin(), row.end());
    }
    CHECK(concat == g);
  }
}
