#pragma once

#include <filesystem>
#include <vector>

#include "handshape/dataset.hpp"
#include "handshape/descriptor.hpp"
#include "handshape/eval.hpp"
#include "handshape/preprocess.hpp"
#include "handshape/probsom.hpp"
#include "handshape/sift.hpp"

namespace handshape {

/// How RGB inputs become SegmentedImages. `automatic` treats images with an
/// all-black border as already segmented and glove-filters the rest.
enum class SegmentationMode { automatic, glove, black_background };
/// What the Radon transform integrates: grey levels or the binary mask.
enum class RadonInput { intensity, mask };
enum class ClassifierKind { probsom, knn };

std::string_view to_string(SegmentationMode mode);
std::string_view to_string(RadonInput input);
std::string_view to_string(ClassifierKind kind);
SegmentationMode parse_segmentation_mode(std::string_view name);
RadonInput parse_radon_input(std::string_view name);
ClassifierKind parse_classifier_kind(std::string_view name);

struct PipelineConfig {
  DescriptorKind descriptor = DescriptorKind::radon_local;
  RadonInput radon_input = RadonInput::intensity;
  SegmentationMode segmentation = SegmentationMode::automatic;
  int black_level = 8;
  GloveFilterConfig glove;
  SiftConfig sift;
  SomConfig som;
  ClassifierKind classifier = ClassifierKind::probsom;
  int knn_neighbors = 1;
};

SegmentedImage segment(const RgbImage& rgb, const PipelineConfig& config);

/// Descriptor set of a canonical image for the configured descriptor kind.
DescriptorSet describe(const CanonicalHandImage& hand, const PipelineConfig& config);

/// read -> segment -> canonicalize -> describe.
DescriptorSet describe_image(const std::filesystem::path& path, const PipelineConfig& config);

ClassifierFactory classifier_factory(const PipelineConfig& config);

/// Describes every record (in parallel, order preserved) and pairs the
/// descriptors with their labels. Failures name the offending sample.
std::vector<EvalSample> extract_samples(const Dataset& dataset, const PipelineConfig& config,
                                        int jobs = 1);

/// Full protocol run from raw images to an evaluation report.
EvaluationReport run_protocol(const Dataset& dataset, const PipelineConfig& pipeline,
                              const ProtocolConfig& protocol);

}  // namespace handshape
