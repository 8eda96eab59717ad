#include "handshape/probsom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "handshape/errors.hpp"
#include "handshape/exact_sum.hpp"
#include "handshape/rng.hpp"

namespace handshape {

using nlohmann::json;

double SomConfig::start_radius() const {
  return initial_radius.value_or(std::max(grid_rows, grid_cols) / 2.0);
}

void SomConfig::validate() const {
  if (grid_rows <= 0 || grid_cols <= 0) throw ValidationError("SOM grid dimensions must be positive");
  if (vector_dim == 0) throw ValidationError("SOM vector_dim must be positive");
  if (epochs <= 0) throw ValidationError("SOM epochs must be positive");
  if (!(initial_learning_rate > 0.0 && initial_learning_rate <= 1.0) ||
      !(final_learning_rate > 0.0 && final_learning_rate <= 1.0))
    throw ValidationError("SOM learning rates must lie in (0, 1]");
  if (!(start_radius() > 0.0) || !(final_radius > 0.0))
    throw ValidationError("SOM radii must be positive");
}

SomGrid::SomGrid(int rows, int cols, std::size_t dim)
    : rows_(rows), cols_(cols), dim_(dim), weights_(static_cast<std::size_t>(rows) * cols * dim, 0.0) {}

void NeuronClassProfile::recompute_ratios() {
  ratios.fill(0.0);
  if (hit_count == 0) return;
  for (int c = 0; c < kNumClasses; ++c)
    ratios[c] = static_cast<double>(counts[c]) / static_cast<double>(hit_count);
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

void require_dimension(const SomGrid& grid, std::size_t dim) {
  if (dim != grid.dimension())
    throw DimensionError("vector dimension " + std::to_string(dim) +
                         " does not match the map's " + std::to_string(grid.dimension()));
}

}  // namespace

std::size_t best_matching_unit(const SomGrid& grid, std::span<const double> v) {
  require_dimension(grid, v.size());
  std::size_t best = 0;
  double best_d = squared_distance(grid.weight(0), v);
  for (std::size_t n = 1; n < grid.neuron_count(); ++n) {
    const double d = squared_distance(grid.weight(n), v);
    if (d < best_d) {
      best_d = d;
      best = n;
    }
  }
  return best;
}

SomGrid train_som(std::span<const FeatureVector> vectors, const SomConfig& config) {
  config.validate();
  if (vectors.empty()) throw EmptyTrainingSet("train_som: no training vectors");
  for (const auto& v : vectors)
    if (v.size() != config.vector_dim)
      throw DimensionError("train_som: vector of dimension " + std::to_string(v.size()) +
                           ", expected " + std::to_string(config.vector_dim));

  Rng rng(config.seed);
  SomGrid grid(config.grid_rows, config.grid_cols, config.vector_dim);
  const std::size_t neurons = grid.neuron_count();
  for (std::size_t n = 0; n < neurons; ++n) {
    const auto& src = vectors[rng.uniform_index(vectors.size())];
    std::copy(src.begin(), src.end(), grid.weight(n).begin());
  }

  std::vector<double> grid_r(neurons), grid_c(neurons);
  for (std::size_t n = 0; n < neurons; ++n) {
    grid_r[n] = static_cast<double>(n / config.grid_cols);
    grid_c[n] = static_cast<double>(n % config.grid_cols);
  }

  std::vector<std::size_t> order(vectors.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double total = static_cast<double>(config.epochs) * static_cast<double>(vectors.size());
  const double lr_ratio = config.final_learning_rate / config.initial_learning_rate;
  const double r0 = config.start_radius();
  const double radius_ratio = config.final_radius / r0;
  const std::size_t dim = config.vector_dim;

  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t idx : order) {
      const double progress = static_cast<double>(step++) / total;
      const double lr = config.initial_learning_rate * std::pow(lr_ratio, progress);
      const double radius = r0 * std::pow(radius_ratio, progress);
      const double r2 = radius * radius;
      const auto& x = vectors[idx];
      const std::size_t bmu = best_matching_unit(grid, x);

      // Gaussian neighbourhood truncated at the current radius; once the
      // radius drops below one grid step only the winner moves.
      for (std::size_t n = 0; n < neurons; ++n) {
        const double dr = grid_r[n] - grid_r[bmu];
        const double dc = grid_c[n] - grid_c[bmu];
        const double d2 = dr * dr + dc * dc;
        if (d2 > r2) continue;
        const double rate = lr * std::exp(-d2 / (2.0 * r2));
        auto w = grid.weight(n);
        for (std::size_t i = 0; i < dim; ++i) w[i] += rate * (x[i] - w[i]);
      }
    }
  }
  return grid;
}

ProbSomModel weight_neurons(SomGrid grid, std::span<const LabeledSet> samples, DescriptorKind kind,
                            std::vector<std::string> class_names) {
  if (samples.empty()) throw EmptyTrainingSet("weight_neurons: no samples");
  ProbSomModel model;
  model.profiles.resize(grid.neuron_count());
  for (const auto& s : samples) {
    if (s.class_id < 0 || s.class_id >= kNumClasses)
      throw ValidationError("weight_neurons: class id out of range");
    for (const auto& v : s.descriptors.get().vectors) {
      auto& p = model.profiles[best_matching_unit(grid, v)];
      ++p.counts[s.class_id];
      ++p.hit_count;
    }
  }
  for (auto& p : model.profiles) p.recompute_ratios();
  model.grid = std::move(grid);
  model.class_names = std::move(class_names);
  model.descriptor_kind = kind;
  model.validate();
  return model;
}

ClassScores ClassScores::from_scores(const std::array<double, kNumClasses>& scores) {
  ClassScores out;
  out.scores = scores;
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return out;
}

ClassScores classify(const ProbSomModel& model, const DescriptorSet& sample) {
  sample.validate();
  if (sample.kind != model.descriptor_kind)
    throw ValidationError("descriptor kind " + std::string(to_string(sample.kind)) +
                          " does not match the model's " +
                          std::string(to_string(model.descriptor_kind)));
  require_dimension(model.grid, sample.dimension());

  std::array<ExactSum, kNumClasses> sums;
  for (const auto& v : sample.vectors) {
    const auto& p = model.profiles[best_matching_unit(model.grid, v)];
    if (p.hit_count == 0) continue;
    for (int c = 0; c < kNumClasses; ++c)
      if (p.ratios[c] != 0.0) sums[c].add(p.ratios[c]);
  }
  std::array<double, kNumClasses> scores{};
  for (int c = 0; c < kNumClasses; ++c) scores[c] = sums[c].value();
  return ClassScores::from_scores(scores);
}

std::vector<int> predict_top_k(const ProbSomModel& model, const DescriptorSet& sample, int k) {
  if (k < 1 || k > kNumClasses)
    throw ValidationError("k must lie in [1, " + std::to_string(kNumClasses) + "]");
  const ClassScores s = classify(model, sample);
  return {s.ranking.begin(), s.ranking.begin() + k};
}

ProbSomModel train_probsom(std::span<const LabeledSet> samples, const SomConfig& config,
                           DescriptorKind kind) {
  if (samples.empty()) throw EmptyTrainingSet("train_probsom: no samples");
  std::vector<FeatureVector> vectors;
  for (const auto& s : samples)
    vectors.insert(vectors.end(), s.descriptors.get().vectors.begin(),
                   s.descriptors.get().vectors.end());
  return weight_neurons(train_som(vectors, config), samples, kind);
}

void ProbSomModel::validate() const {
  if (grid.neuron_count() == 0 || grid.dimension() == 0)
    throw ModelFormatError("model has an empty map");
  if (profiles.size() != grid.neuron_count())
    throw ModelFormatError("model has " + std::to_string(profiles.size()) + " profiles for " +
                           std::to_string(grid.neuron_count()) + " neurons");
  if (class_names.size() != static_cast<std::size_t>(kNumClasses))
    throw ModelFormatError("model must name exactly " + std::to_string(kNumClasses) + " classes");
  bool any_hit = false;
  for (const auto& p : profiles) {
    const auto total = std::accumulate(p.counts.begin(), p.counts.end(), std::uint64_t{0});
    if (total != p.hit_count) throw ModelFormatError("neuron hit count disagrees with class counts");
    any_hit = any_hit || p.hit_count > 0;
  }
  if (!any_hit) throw ModelFormatError("no neuron was hit during weighting");
  for (std::size_t n = 0; n < grid.neuron_count(); ++n)
    for (double w : grid.weight(n))
      if (!std::isfinite(w)) throw ModelFormatError("non-finite weight");
}

namespace {
constexpr const char* kModelFormat = "probsom-model";
constexpr int kModelVersion = 1;
}  // namespace

void save_model(const ProbSomModel& model, const std::filesystem::path& path) {
  model.validate();
  json weights = json::array();
  json neurons = json::array();
  for (std::size_t n = 0; n < model.grid.neuron_count(); ++n) {
    auto w = model.grid.weight(n);
    weights.push_back(std::vector<double>(w.begin(), w.end()));
    const auto& p = model.profiles[n];
    neurons.push_back({{"hits", p.hit_count}, {"counts", p.counts}});
  }
  const json doc{{"format", kModelFormat},
                 {"version", kModelVersion},
                 {"descriptor_kind", to_string(model.descriptor_kind)},
                 {"grid_rows", model.grid.rows()},
                 {"grid_cols", model.grid.cols()},
                 {"vector_dim", model.grid.dimension()},
                 {"class_names", model.class_names},
                 {"weights", std::move(weights)},
                 {"neurons", std::move(neurons)}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model: " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("error while writing model: " + path.string());
}

ProbSomModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model: " + path.string());
  ProbSomModel model;
  try {
    const json doc = json::parse(in);
    if (doc.at("format") != kModelFormat) throw ModelFormatError("not a ProbSom model file");
    if (doc.at("version") != kModelVersion)
      throw ModelFormatError("unsupported model version " + doc.at("version").dump());
    model.descriptor_kind = parse_descriptor_kind(doc.at("descriptor_kind").get<std::string>());
    const int rows = doc.at("grid_rows").get<int>();
    const int cols = doc.at("grid_cols").get<int>();
    const auto dim = doc.at("vector_dim").get<std::size_t>();
    if (rows <= 0 || cols <= 0 || dim == 0) throw ModelFormatError("invalid map dimensions");
    model.class_names = doc.at("class_names").get<std::vector<std::string>>();
    model.grid = SomGrid(rows, cols, dim);

    const auto& weights = doc.at("weights");
    if (weights.size() != model.grid.neuron_count())
      throw ModelFormatError("weight count does not match the grid");
    for (std::size_t n = 0; n < weights.size(); ++n) {
      const auto w = weights[n].get<std::vector<double>>();
      if (w.size() != dim) throw ModelFormatError("weight vector of wrong dimension");
      std::copy(w.begin(), w.end(), model.grid.weight(n).begin());
    }

    const auto& neurons = doc.at("neurons");
    for (const auto& j : neurons) {
      NeuronClassProfile p;
      const auto counts = j.at("counts").get<std::vector<std::uint64_t>>();
      if (counts.size() != static_cast<std::size_t>(kNumClasses))
        throw ModelFormatError("class count vector of wrong length");
      std::copy(counts.begin(), counts.end(), p.counts.begin());
      p.hit_count = j.at("hits").get<std::uint64_t>();
      p.recompute_ratios();
      model.profiles.push_back(p);
    }
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("corrupt model file: ") + e.what());
  } catch (const ValidationError& e) {
    throw ModelFormatError(e.what());
  }
  model.validate();
  return model;
}

}  // namespace handshape
