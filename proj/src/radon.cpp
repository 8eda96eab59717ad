#include "handshape/radon.hpp"

#include <algorithm>
#include <cmath>

#include "handshape/errors.hpp"
#include "handshape/geometry.hpp"
#include "handshape/preprocess.hpp"

namespace handshape {

Sinogram radon_transform(const GrayImage& image) {
  if (image.rows() != kCanonicalSide || image.cols() != kCanonicalSide)
    throw DimensionError("radon_transform: expected a 128x128 image, got " +
                         std::to_string(image.rows()) + "x" + std::to_string(image.cols()));

  struct Mass {
    double x, y, value;
  };
  std::vector<Mass> masses;
  constexpr int mid = kCanonicalSide / 2;
  for (int r = 0; r < image.rows(); ++r)
    for (int c = 0; c < image.cols(); ++c)
      if (image(r, c) != 0.0)
        masses.push_back({static_cast<double>(c - mid), static_cast<double>(mid - r), image(r, c)});

  Sinogram s;
  for (int t = 0; t < kRadonAngles; ++t) {
    const SinCos sc = sincos_degrees(Sinogram::angle_of(t));
    double* row = &s.values(t, 0);
    for (const Mass& m : masses) {
      const double pos = m.x * sc.cos + m.y * sc.sin + kRadonOffsetOrigin;
      const double k = std::floor(pos);
      const double w = pos - k;
      const int ki = static_cast<int>(k);
      row[ki] += (1.0 - w) * m.value;
      if (w != 0.0) row[ki + 1] += w * m.value;
    }
  }
  return s;
}

namespace {

// weights[i][t]: length of input cell t inside output band i.
std::vector<std::vector<double>> band_weights(int outputs, int inputs) {
  const double width = static_cast<double>(inputs) / outputs;
  std::vector<std::vector<double>> w(outputs, std::vector<double>(inputs, 0.0));
  for (int i = 0; i < outputs; ++i) {
    const double lo = i * width, hi = (i + 1) * width;
    for (int t = static_cast<int>(std::floor(lo)); t < inputs && t < hi; ++t)
      w[i][t] = std::max(0.0, std::min(hi, t + 1.0) - std::max(lo, static_cast<double>(t)));
  }
  return w;
}

}  // namespace

RadonDescriptor resample_sinogram(const Sinogram& sinogram) {
  static const auto row_w = band_weights(kDescriptorSide, kRadonAngles);
  static const auto col_w = band_weights(kDescriptorSide, kRadonOffsets);
  const double area = (static_cast<double>(kRadonAngles) / kDescriptorSide) *
                      (static_cast<double>(kRadonOffsets) / kDescriptorSide);

  // Columns first, then rows.
  Grid<double> narrowed(kRadonAngles, kDescriptorSide);
  for (int t = 0; t < kRadonAngles; ++t)
    for (int j = 0; j < kDescriptorSide; ++j) {
      double acc = 0.0;
      for (int k = 0; k < kRadonOffsets; ++k)
        if (col_w[j][k] != 0.0) acc += col_w[j][k] * sinogram.values(t, k);
      narrowed(t, j) = acc;
    }

  RadonDescriptor d;
  for (int i = 0; i < kDescriptorSide; ++i)
    for (int j = 0; j < kDescriptorSide; ++j) {
      double acc = 0.0;
      for (int t = 0; t < kRadonAngles; ++t)
        if (row_w[i][t] != 0.0) acc += row_w[i][t] * narrowed(t, j);
      d.r(i, j) = acc / area;
    }
  return d;
}

FeatureVector to_global(const RadonDescriptor& descriptor) {
  auto v = descriptor.r.values();
  return FeatureVector(v.begin(), v.end());
}

RadonDescriptor from_global(const FeatureVector& vector) {
  if (vector.size() != static_cast<std::size_t>(kDescriptorSide * kDescriptorSide))
    throw DimensionError("from_global: expected 1024 values");
  RadonDescriptor d;
  std::copy(vector.begin(), vector.end(), d.r.values().begin());
  return d;
}

DescriptorSet to_local_rows(const RadonDescriptor& descriptor) {
  DescriptorSet set;
  set.kind = DescriptorKind::radon_local;
  for (int i = 0; i < kDescriptorSide; ++i) {
    const double* row = &descriptor.r(i, 0);
    set.vectors.emplace_back(row, row + kDescriptorSide);
  }
  return set;
}

}  // namespace handshape
