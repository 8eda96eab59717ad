#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "handshape/dataset.hpp"
#include "handshape/descriptor.hpp"

namespace handshape {

/// Kohonen map hyperparameters. Learning rate and neighbourhood radius decay
/// exponentially from their initial to their final values over all updates.
struct SomConfig {
  int grid_rows = 10;
  int grid_cols = 10;
  std::size_t vector_dim = 32;
  int epochs = 100;
  double initial_learning_rate = 0.5;
  double final_learning_rate = 0.01;
  /// Defaults to max(grid_rows, grid_cols) / 2.
  std::optional<double> initial_radius;
  double final_radius = 0.5;
  std::uint64_t seed = 0;

  double start_radius() const;
  void validate() const;
};

/// Neuron weights, row-major over the grid.
class SomGrid {
 public:
  SomGrid() = default;
  SomGrid(int rows, int cols, std::size_t dim);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t dimension() const noexcept { return dim_; }
  std::size_t neuron_count() const noexcept { return static_cast<std::size_t>(rows_) * cols_; }

  std::span<double> weight(std::size_t neuron) {
    return {weights_.data() + neuron * dim_, dim_};
  }
  std::span<const double> weight(std::size_t neuron) const {
    return {weights_.data() + neuron * dim_, dim_};
  }

  friend bool operator==(const SomGrid&, const SomGrid&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> weights_;
};

struct NeuronClassProfile {
  std::array<std::uint64_t, kNumClasses> counts{};
  std::uint64_t hit_count = 0;
  /// counts / hit_count, or all zero for a neuron never hit.
  std::array<double, kNumClasses> ratios{};

  void recompute_ratios();
};

struct ProbSomModel {
  SomGrid grid;
  std::vector<NeuronClassProfile> profiles;
  std::vector<std::string> class_names = Dataset::default_class_names();
  DescriptorKind descriptor_kind = DescriptorKind::radon_local;

  /// Throws ModelFormatError when an invariant is broken.
  void validate() const;
};

struct ClassScores {
  std::array<double, kNumClasses> scores{};
  /// Classes by descending score, ties by ascending class index.
  std::array<int, kNumClasses> ranking{};

  static ClassScores from_scores(const std::array<double, kNumClasses>& scores);
  int best() const { return ranking[0]; }
};

struct LabeledSet {
  std::reference_wrapper<const DescriptorSet> descriptors;
  int class_id = 0;
};

/// Online Kohonen training, deterministic for a given seed. Throws
/// EmptyTrainingSet or DimensionError.
SomGrid train_som(std::span<const FeatureVector> vectors, const SomConfig& config);

/// Nearest neuron by Euclidean distance; ties go to the lowest index.
std::size_t best_matching_unit(const SomGrid& grid, std::span<const double> v);

/// Replays every training vector through the map and tallies, per winning
/// neuron, how often each class hit it.
ProbSomModel weight_neurons(SomGrid grid, std::span<const LabeledSet> samples,
                            DescriptorKind kind,
                            std::vector<std::string> class_names = Dataset::default_class_names());

/// Sums the winning neurons' class ratios over the set. Throws EmptySample,
/// DimensionError, or ValidationError on a descriptor kind mismatch.
ClassScores classify(const ProbSomModel& model, const DescriptorSet& sample);

/// First k classes of the ranking, 1 <= k <= 16.
std::vector<int> predict_top_k(const ProbSomModel& model, const DescriptorSet& sample, int k);

/// train_som followed by weight_neurons on all vectors of all samples.
ProbSomModel train_probsom(std::span<const LabeledSet> samples, const SomConfig& config,
                           DescriptorKind kind);

void save_model(const ProbSomModel& model, const std::filesystem::path& path);
/// Throws ModelFormatError for a bad version, a corrupt or inconsistent file.
ProbSomModel load_model(const std::filesystem::path& path);

}  // namespace handshape
