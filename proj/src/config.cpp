#include "handshape/config.hpp"

#include <fstream>
#include <set>

#include "handshape/errors.hpp"

namespace handshape {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ValidationError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

void apply_glove(GloveFilterConfig& g, const json& j) {
  check_keys(j, {"hue_lo", "hue_hi", "min_saturation", "min_value"}, "glove");
  read(j, "hue_lo", g.hue_lo);
  read(j, "hue_hi", g.hue_hi);
  read(j, "min_saturation", g.min_saturation);
  read(j, "min_value", g.min_value);
  g.validate();
}

void apply_sift(SiftConfig& s, const json& j) {
  check_keys(j,
             {"octaves", "scales_per_octave", "base_sigma", "assumed_blur", "contrast_threshold",
              "edge_ratio", "window", "orientation_peak_ratio", "fallback_scale"},
             "sift");
  read(j, "octaves", s.octaves);
  read(j, "scales_per_octave", s.scales_per_octave);
  read(j, "base_sigma", s.base_sigma);
  read(j, "assumed_blur", s.assumed_blur);
  read(j, "contrast_threshold", s.contrast_threshold);
  read(j, "edge_ratio", s.edge_ratio);
  read(j, "window", s.window);
  read(j, "orientation_peak_ratio", s.orientation_peak_ratio);
  read(j, "fallback_scale", s.fallback_scale);
  s.validate();
}

void apply_som(SomConfig& s, const json& j) {
  check_keys(j,
             {"grid_rows", "grid_cols", "epochs", "initial_learning_rate", "final_learning_rate",
              "initial_radius", "final_radius"},
             "som");
  read(j, "grid_rows", s.grid_rows);
  read(j, "grid_cols", s.grid_cols);
  read(j, "epochs", s.epochs);
  read(j, "initial_learning_rate", s.initial_learning_rate);
  read(j, "final_learning_rate", s.final_learning_rate);
  if (j.contains("initial_radius")) {
    if (j.at("initial_radius").is_null())
      s.initial_radius.reset();
    else
      s.initial_radius = j.at("initial_radius").get<double>();
  }
  read(j, "final_radius", s.final_radius);
  s.validate();
}

}  // namespace

void apply_json(RunConfig& config, const json& j) {
  check_keys(j,
             {"manifest", "output_dir", "model", "descriptor", "radon_input", "segmentation",
              "black_level", "glove", "sift", "som", "classifier", "knn_neighbors", "protocol",
              "repetitions", "test_fraction", "seed", "jobs", "debug_stages"},
             "configuration");
  try {
    if (j.contains("manifest")) config.manifest = j.at("manifest").get<std::string>();
    if (j.contains("output_dir")) config.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("model")) config.model = j.at("model").get<std::string>();
    auto& p = config.pipeline;
    if (j.contains("descriptor"))
      p.descriptor = parse_descriptor_kind(j.at("descriptor").get<std::string>());
    if (j.contains("radon_input"))
      p.radon_input = parse_radon_input(j.at("radon_input").get<std::string>());
    if (j.contains("segmentation"))
      p.segmentation = parse_segmentation_mode(j.at("segmentation").get<std::string>());
    read(j, "black_level", p.black_level);
    if (j.contains("glove")) apply_glove(p.glove, j.at("glove"));
    if (j.contains("sift")) apply_sift(p.sift, j.at("sift"));
    if (j.contains("som")) apply_som(p.som, j.at("som"));
    if (j.contains("classifier"))
      p.classifier = parse_classifier_kind(j.at("classifier").get<std::string>());
    read(j, "knn_neighbors", p.knn_neighbors);
    auto& pr = config.protocol;
    if (j.contains("protocol")) pr.protocol = parse_protocol(j.at("protocol").get<std::string>());
    read(j, "repetitions", pr.repetitions);
    read(j, "test_fraction", pr.test_fraction);
    read(j, "seed", pr.base_seed);
    read(j, "jobs", pr.jobs);
    read(j, "debug_stages", config.debug_stages);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("configuration value of the wrong type: ") + e.what());
  }
  if (config.pipeline.black_level < 0 || config.pipeline.black_level > 254)
    throw ValidationError("black_level must lie in [0, 254]");
  if (config.pipeline.knn_neighbors < 1) throw ValidationError("knn_neighbors must be positive");
  if (config.protocol.repetitions < 1) throw ValidationError("repetitions must be positive");
  if (config.protocol.jobs < 1) throw ValidationError("jobs must be positive");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  RunConfig config;
  apply_json(config, j);
  return config;
}

json to_json(const GloveFilterConfig& g) {
  return {{"hue_lo", g.hue_lo},
          {"hue_hi", g.hue_hi},
          {"min_saturation", g.min_saturation},
          {"min_value", g.min_value}};
}

json to_json(const SiftConfig& s) {
  return {{"octaves", s.octaves},
          {"scales_per_octave", s.scales_per_octave},
          {"base_sigma", s.base_sigma},
          {"assumed_blur", s.assumed_blur},
          {"contrast_threshold", s.contrast_threshold},
          {"edge_ratio", s.edge_ratio},
          {"window", s.window},
          {"orientation_peak_ratio", s.orientation_peak_ratio},
          {"fallback_scale", s.fallback_scale}};
}

json to_json(const SomConfig& s) {
  return {{"grid_rows", s.grid_rows},
          {"grid_cols", s.grid_cols},
          {"epochs", s.epochs},
          {"initial_learning_rate", s.initial_learning_rate},
          {"final_learning_rate", s.final_learning_rate},
          {"initial_radius", s.start_radius()},
          {"final_radius", s.final_radius}};
}

json to_json(const RunConfig& c) {
  const auto& p = c.pipeline;
  return {{"descriptor", to_string(p.descriptor)},
          {"radon_input", to_string(p.radon_input)},
          {"segmentation", to_string(p.segmentation)},
          {"black_level", p.black_level},
          {"glove", to_json(p.glove)},
          {"sift", to_json(p.sift)},
          {"som", to_json(p.som)},
          {"classifier", to_string(p.classifier)},
          {"knn_neighbors", p.knn_neighbors},
          {"protocol", to_string(c.protocol.protocol)},
          {"repetitions", c.protocol.repetitions},
          {"test_fraction", c.protocol.test_fraction},
          {"seed", c.protocol.base_seed}};
}

}  // namespace handshape
