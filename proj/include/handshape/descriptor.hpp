#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace handshape {

enum class DescriptorKind { radon_local, radon_global, sift };

std::string_view to_string(DescriptorKind kind);
/// Accepts "radon-local", "radon-global", "sift". Throws ValidationError.
DescriptorKind parse_descriptor_kind(std::string_view name);

using FeatureVector = std::vector<double>;

/// A sample represented by a set of equally sized feature vectors.
struct DescriptorSet {
  std::vector<FeatureVector> vectors;
  DescriptorKind kind = DescriptorKind::radon_local;

  std::size_t dimension() const { return vectors.empty() ? 0 : vectors.front().size(); }
  /// Throws EmptySample or DimensionError.
  void validate() const;
};

/// One exported descriptor record, keyed by sample id.
struct DescriptorRecord {
  std::string id;
  int class_id = 0;
  int subject_id = 0;
  int repetition = 0;
  DescriptorSet descriptors;
};

struct DescriptorFile {
  DescriptorKind kind = DescriptorKind::radon_local;
  std::size_t dimension = 0;
  std::vector<DescriptorRecord> records;
};

/// JSON Lines: a header object followed by one record per line.
void write_descriptor_file(const std::filesystem::path& path, const DescriptorFile& file);
DescriptorFile read_descriptor_file(const std::filesystem::path& path);

/// CSV export: id,class,subject,repetition,vector,v0..v{d-1}; one row per vector.
void write_descriptor_csv(const std::filesystem::path& path, const DescriptorFile& file);

}  // namespace handshape
