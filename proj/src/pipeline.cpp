#include "handshape/pipeline.hpp"

#include "handshape/errors.hpp"
#include "handshape/parallel.hpp"
#include "handshape/radon.hpp"

namespace handshape {

std::string_view to_string(SegmentationMode mode) {
  switch (mode) {
    case SegmentationMode::automatic:
      return "auto";
    case SegmentationMode::glove:
      return "glove";
    case SegmentationMode::black_background:
      return "black-background";
  }
  return "unknown";
}

std::string_view to_string(RadonInput input) {
  return input == RadonInput::intensity ? "intensity" : "mask";
}

std::string_view to_string(ClassifierKind kind) {
  return kind == ClassifierKind::probsom ? "probsom" : "knn";
}

SegmentationMode parse_segmentation_mode(std::string_view name) {
  if (name == "auto") return SegmentationMode::automatic;
  if (name == "glove") return SegmentationMode::glove;
  if (name == "black-background") return SegmentationMode::black_background;
  throw ValidationError("unknown segmentation mode '" + std::string(name) +
                        "' (expected auto, glove or black-background)");
}

RadonInput parse_radon_input(std::string_view name) {
  if (name == "intensity") return RadonInput::intensity;
  if (name == "mask") return RadonInput::mask;
  throw ValidationError("unknown radon input '" + std::string(name) + "' (expected intensity or mask)");
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  if (name == "probsom") return ClassifierKind::probsom;
  if (name == "knn") return ClassifierKind::knn;
  throw ValidationError("unknown classifier '" + std::string(name) + "' (expected probsom or knn)");
}

SegmentedImage segment(const RgbImage& rgb, const PipelineConfig& config) {
  switch (config.segmentation) {
    case SegmentationMode::glove:
      return segment_glove(rgb, config.glove);
    case SegmentationMode::black_background:
      return segment_black_background(rgb, config.black_level);
    case SegmentationMode::automatic:
      break;
  }
  return has_black_background(rgb, config.black_level)
             ? segment_black_background(rgb, config.black_level)
             : segment_glove(rgb, config.glove);
}

DescriptorSet describe(const CanonicalHandImage& hand, const PipelineConfig& config) {
  if (config.descriptor == DescriptorKind::sift) {
    const auto keypoints = detect_keypoints(hand.pixels, config.sift);
    return compute_descriptors(hand.pixels, keypoints, config.sift);
  }

  GrayImage input = hand.pixels;
  if (config.radon_input == RadonInput::mask)
    for (int r = 0; r < input.rows(); ++r)
      for (int c = 0; c < input.cols(); ++c) input(r, c) = hand.mask(r, c);

  const RadonDescriptor d = resample_sinogram(radon_transform(input));
  if (config.descriptor == DescriptorKind::radon_local) return to_local_rows(d);
  DescriptorSet set;
  set.kind = DescriptorKind::radon_global;
  set.vectors.push_back(to_global(d));
  return set;
}

DescriptorSet describe_image(const std::filesystem::path& path, const PipelineConfig& config) {
  return describe(canonicalize(segment(read_rgb(path), config)), config);
}

ClassifierFactory classifier_factory(const PipelineConfig& config) {
  if (config.classifier == ClassifierKind::knn) {
    const int k = config.knn_neighbors;
    return [k] { return std::make_unique<KnnClassifier>(k); };
  }
  const SomConfig som = config.som;
  return [som] { return std::make_unique<ProbSomClassifier>(som); };
}

std::vector<EvalSample> extract_samples(const Dataset& dataset, const PipelineConfig& config,
                                        int jobs) {
  std::vector<EvalSample> samples(dataset.records.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    const auto& rec = dataset.records[i];
    try {
      samples[i] = {rec.id(), rec.class_id, rec.subject_id, describe_image(rec.image_path, config)};
    } catch (const std::exception& e) {
      throw Error(rec.id() + " (" + rec.image_path.string() + "): " + e.what());
    }
  });
  return samples;
}

EvaluationReport run_protocol(const Dataset& dataset, const PipelineConfig& pipeline,
                              const ProtocolConfig& protocol) {
  const auto samples = extract_samples(dataset, pipeline, protocol.jobs);
  return evaluate(samples, protocol, classifier_factory(pipeline));
}

}  // namespace handshape
