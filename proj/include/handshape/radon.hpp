#pragma once

#include "handshape/descriptor.hpp"
#include "handshape/image.hpp"

namespace handshape {

inline constexpr int kRadonAngles = 180;
/// Offset bins b = -91..91 at unit spacing; covers the 128x128 diagonal.
inline constexpr int kRadonOffsets = 183;
inline constexpr int kRadonOffsetOrigin = 91;
inline constexpr int kDescriptorSide = 32;

/// Line integrals R(b, theta). Row t holds theta = t + 1 degrees; column k
/// holds offset b = k - 91 pixels. Lines are x cos(theta) + y sin(theta) = b
/// with x to the right and y upwards, both measured from pixel (64, 64).
struct Sinogram {
  Grid<double> values{kRadonAngles, kRadonOffsets};

  static constexpr double offset_of(int column) { return column - kRadonOffsetOrigin; }
  static constexpr int angle_of(int row) { return row + 1; }
};

/// 32x32 block average of a sinogram. Row i is an angle band, column j an
/// offset band.
struct RadonDescriptor {
  Grid<double> r{kDescriptorSide, kDescriptorSide};
};

/// Splats every pixel onto its two nearest offset bins with linear weights,
/// so each angle row sums to the total image intensity. Throws DimensionError
/// unless the input is 128x128.
Sinogram radon_transform(const GrayImage& image);

/// Area-weighted averaging of the 180x183 sinogram down to 32x32.
RadonDescriptor resample_sinogram(const Sinogram& sinogram);

/// Row-major flattening to 1024 values.
FeatureVector to_global(const RadonDescriptor& descriptor);
RadonDescriptor from_global(const FeatureVector& vector);
/// The 32 rows as a radon-local DescriptorSet.
DescriptorSet to_local_rows(const RadonDescriptor& descriptor);

}  // namespace handshape
