#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "handshape/eval.hpp"
#include "handshape/pipeline.hpp"

namespace handshape {

/// Everything a CLI run needs. Loaded from a JSON file and then overridden
/// by command-line flags.
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path output_dir = "out";
  std::filesystem::path model;
  PipelineConfig pipeline;
  ProtocolConfig protocol;
  bool debug_stages = false;
};

/// Applies the keys present in `j` on top of `config`. Unknown keys and
/// out-of-range values throw ValidationError.
void apply_json(RunConfig& config, const nlohmann::json& j);
/// Throws IoError or ParseError.
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

nlohmann::json to_json(const SomConfig& som);
nlohmann::json to_json(const GloveFilterConfig& glove);
nlohmann::json to_json(const SiftConfig& sift);

}  // namespace handshape
