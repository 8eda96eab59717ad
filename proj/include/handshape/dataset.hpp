#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "handshape/image.hpp"

namespace handshape {

inline constexpr int kNumClasses = 16;
inline constexpr int kNumSubjects = 10;
inline constexpr int kNumRepetitions = 5;

struct SampleRecord {
  std::filesystem::path image_path;
  int class_id = 0;
  int subject_id = 0;
  int repetition = 0;

  /// Stable identifier derived from the (class, subject, repetition) triple.
  std::string id() const;
  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct Dataset {
  std::vector<SampleRecord> records;
  std::vector<std::string> class_names = default_class_names();

  static std::vector<std::string> default_class_names();
};

/// Reads a `path,class,subject,repetition` CSV. Relative image paths are
/// resolved against the manifest's directory and must name existing files;
/// decoding is left to the consumer. Throws IoError, ParseError
/// (with the 1-based file line number, header included) or ValidationError.
Dataset load_manifest(const std::filesystem::path& manifest_path);

/// Writes a manifest readable by load_manifest; paths are written as given.
void write_manifest(const std::filesystem::path& manifest_path, const Dataset& dataset);

/// Builds a dataset from files named `<class>_<subject>_<repetition>.<ext>`
/// (the LSA16 convention, 1-based ids). Files not matching the pattern are
/// ignored. Records are sorted by (class, subject, repetition).
Dataset dataset_from_directory(const std::filesystem::path& dir, bool one_based = true);

/// HSV window describing the glove color. Hue in degrees; wrap-around
/// windows (hue_lo > hue_hi) are allowed.
struct GloveFilterConfig {
  double hue_lo = 35.0;
  double hue_hi = 95.0;
  double min_saturation = 0.35;
  double min_value = 0.25;

  void validate() const;
};

struct Hsv {
  double hue = 0.0;         // [0, 360)
  double saturation = 0.0;  // [0, 1]
  double value = 0.0;       // [0, 1]
};

Hsv to_hsv(Rgb p);
bool glove_color(Rgb p, const GloveFilterConfig& config);
/// ITU-R BT.601 luma in [0, 1].
double luminance(Rgb p);

/// Grayscale intensities with a binary hand mask; pixels outside the mask are 0.
struct SegmentedImage {
  GrayImage pixels;
  BinaryMask mask;
};

/// Keeps pixels whose color falls in the glove window. Throws
/// SegmentationEmpty if none does, ValidationError for an empty image.
SegmentedImage segment_glove(const RgbImage& rgb, const GloveFilterConfig& config);

/// For inputs that are already segmented (black background): every pixel
/// whose brightest channel exceeds `black_level` (0..255) is hand.
SegmentedImage segment_black_background(const RgbImage& rgb, int black_level = 8);

/// True when every border pixel is at or below `black_level`, i.e. the
/// image looks pre-segmented.
bool has_black_background(const RgbImage& rgb, int black_level = 8);

}  // namespace handshape
