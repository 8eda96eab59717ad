#pragma once

#include <filesystem>

#include "handshape/dataset.hpp"
#include "handshape/image.hpp"

namespace handshape {

inline constexpr int kCanonicalSide = 128;
/// Larger side of the hand's bounding box after resampling.
inline constexpr int kCanonicalExtent = 120;

/// Angle of the major principal axis from the vertical image axis, degrees,
/// counterclockwise positive, in (-90, 90].
struct Inclination {
  double degrees = 0.0;
  /// Set when the second moments are isotropic and no axis exists.
  bool degenerate = false;
};

struct CanonicalHandImage {
  GrayImage pixels;    // 128x128
  BinaryMask mask;     // 128x128
  BinaryMask contour;  // 128x128
};

/// Intermediate images of canonicalize, in pipeline order.
struct CanonicalizationStages {
  GrayImage segmented;
  GrayImage oriented;
  GrayImage upright;
  BinaryMask mask;
  BinaryMask contour;
};

/// Keeps the largest 8-connected component. Ties go to the component whose
/// first pixel comes first in row-major order. Throws EmptyMask.
BinaryMask largest_component(const BinaryMask& mask);

/// A single pixel or an isotropic mask is flagged degenerate. Throws EmptyMask.
Inclination principal_inclination(const BinaryMask& mask);

/// Rotates counterclockwise by `degrees` about the image center. The canvas
/// grows to hold the whole rotated input; new pixels are 0.
GrayImage rotate_image(const GrayImage& image, double degrees);
/// Same geometry as rotate_image, nearest-neighbour sampling.
BinaryMask rotate_mask(const BinaryMask& mask, double degrees);

/// Exact 180 degree rotation.
GrayImage rotate_180(const GrayImage& image);
BinaryMask rotate_180(const BinaryMask& mask);

/// Number of foreground runs on each row; 0 for empty rows.
std::vector<int> scanline_runs(const BinaryMask& mask);

struct UprightResult {
  GrayImage pixels;
  BinaryMask mask;
  bool flipped = false;
};

/// Flips the hand so the half of its bounding box with the larger modal
/// scanline run count (the fingers) is on top. Throws EmptyMask.
UprightResult upright_correction(const GrayImage& image, const BinaryMask& mask);

struct Resampled {
  GrayImage pixels;
  BinaryMask mask;
};

/// Uniform scaling onto a 128x128 canvas with the mask centroid at (64, 64).
/// Throws EmptyMask.
Resampled resample_center(const GrayImage& image, const BinaryMask& mask);

/// Inner boundary: mask pixels with at least one 4-neighbour outside the mask
/// (pixels beyond the border count as outside).
BinaryMask extract_contour(const BinaryMask& mask);

CanonicalHandImage canonicalize(const SegmentedImage& seg);
CanonicalHandImage canonicalize(const SegmentedImage& seg, CanonicalizationStages& stages);

/// Writes the five stage images as <stem>_1_segmented.png ... <stem>_5_contour.png.
void write_stages(const std::filesystem::path& dir, const std::string& stem,
                  const CanonicalizationStages& stages);

}  // namespace handshape
