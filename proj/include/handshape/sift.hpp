#pragma once

#include <span>
#include <vector>

#include "handshape/descriptor.hpp"
#include "handshape/image.hpp"

namespace handshape {

/// Point of interest in base-image pixel coordinates. Orientation is the
/// dominant gradient direction in degrees, [0, 360), measured from the +x
/// (column) axis towards +y (row, downwards).
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.6;
  double orientation = 0.0;
};

/// Fixed defaults for the SIFT-style detector and descriptor. None of them
/// comes from the handshape literature; they follow Lowe's usual choices
/// scaled to a 128x128 canvas.
struct SiftConfig {
  int octaves = 3;
  int scales_per_octave = 3;
  double base_sigma = 1.6;
  /// Blur already present in the input image.
  double assumed_blur = 0.5;
  /// Minimum |DoG| response for intensities in [0, 1].
  double contrast_threshold = 0.01;
  /// Principal curvature ratio above which edge-like extrema are dropped.
  double edge_ratio = 10.0;
  /// Descriptor window side in pixels at base scale; the Gaussian weight
  /// uses sigma = window / 2.
  int window = 16;
  /// Secondary orientation peaks at or above this fraction of the highest
  /// one spawn extra keypoints.
  double orientation_peak_ratio = 0.8;
  /// Scale of the centroid keypoint used when no extremum survives.
  double fallback_scale = 6.4;

  void validate() const;
};

inline constexpr int kSiftSpatialBins = 4;
inline constexpr int kSiftOrientationBins = 8;
inline constexpr int kSiftDimension = kSiftSpatialBins * kSiftSpatialBins * kSiftOrientationBins;

/// Difference-of-Gaussians extrema with orientation assignment. Always
/// returns at least one keypoint for a non-blank image. Throws EmptyMask
/// when every pixel is zero.
std::vector<Keypoint> detect_keypoints(const GrayImage& image, const SiftConfig& config = {});

/// Dominant gradient orientation(s) around (x, y) at the given scale.
std::vector<double> dominant_orientations(const GrayImage& smoothed, double x, double y,
                                          double scale, const SiftConfig& config = {});

/// One 128-value gradient histogram per keypoint, L2-normalised (zero vectors
/// stay zero).
DescriptorSet compute_descriptors(const GrayImage& image, std::span<const Keypoint> keypoints,
                                  const SiftConfig& config = {});

/// Separable Gaussian blur with clamped borders.
GrayImage gaussian_blur(const GrayImage& image, double sigma);

}  // namespace handshape
