#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "handshape/dataset.hpp"
#include "handshape/descriptor.hpp"
#include "handshape/errors.hpp"
#include "handshape/probsom.hpp"

namespace handshape {

enum class Protocol { random_cv, inter_subject };

std::string_view to_string(Protocol protocol);
/// Accepts "random-cv" and "inter-subject".
Protocol parse_protocol(std::string_view name);

/// Disjoint, ascending index lists into a dataset.
struct SplitSpec {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  /// Subject left out by leave_one_subject_out, -1 otherwise.
  int held_out_subject = -1;
};

/// Per class, round(test_fraction * n_class) randomly chosen samples go to
/// the test side. Throws ValidationError when a class is too small for the
/// fraction or the fraction is outside (0, 1).
SplitSpec stratified_random_split(std::span<const int> class_ids, double test_fraction,
                                  std::uint64_t seed);
SplitSpec stratified_random_split(const Dataset& dataset, double test_fraction, std::uint64_t seed);

/// One split per subject, in ascending subject order. Throws ValidationError
/// with fewer than two subjects.
std::vector<SplitSpec> leave_one_subject_out(std::span<const int> subject_ids);
std::vector<SplitSpec> leave_one_subject_out(const Dataset& dataset);

using Ranking = std::array<int, kNumClasses>;

struct Prediction {
  Ranking ranking{};
  int true_class = 0;
};

/// Fraction of predictions whose true class is among the first k ranked.
/// Throws ValidationError if k is outside [1, 16] or a ranking is not a
/// permutation of the classes.
double top_k_accuracy(std::span<const Prediction> predictions, int k);

/// Majority vote among the k nearest training vectors (Euclidean). Ties in
/// the vote go to the tied class whose member is nearest.
std::vector<int> knn_baseline(std::span<const FeatureVector> train, std::span<const int> labels,
                              std::span<const FeatureVector> test, int k_neighbors);

/// A trainable ranker over descriptor sets, used by the evaluation loop.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(std::span<const LabeledSet> train, std::uint64_t seed) = 0;
  virtual Ranking rank(const DescriptorSet& sample) const = 0;
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

class ProbSomClassifier : public Classifier {
 public:
  explicit ProbSomClassifier(SomConfig config) : config_(config) {}
  void fit(std::span<const LabeledSet> train, std::uint64_t seed) override;
  Ranking rank(const DescriptorSet& sample) const override;
  const ProbSomModel& model() const { return model_; }

 private:
  SomConfig config_;
  ProbSomModel model_;
};

/// k-nearest-neighbour baseline on the concatenation of a sample's vectors
/// (a single 1024-vector for radon-global).
class KnnClassifier : public Classifier {
 public:
  explicit KnnClassifier(int k_neighbors) : k_(k_neighbors) {}
  void fit(std::span<const LabeledSet> train, std::uint64_t seed) override;
  Ranking rank(const DescriptorSet& sample) const override;

 private:
  int k_;
  std::vector<FeatureVector> train_;
  std::vector<int> labels_;
};

struct EvalSample {
  std::string id;
  int class_id = 0;
  int subject_id = 0;
  DescriptorSet descriptors;
};

struct ProtocolConfig {
  Protocol protocol = Protocol::random_cv;
  int repetitions = 30;
  double test_fraction = 0.1;
  std::uint64_t base_seed = 0;
  int jobs = 1;
};

struct FoldResult {
  int repetition = 0;
  int fold = 0;
  int held_out_subject = -1;
  std::size_t test_count = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct SubjectAccuracy {
  int subject = 0;
  std::size_t test_count = 0;
  double accuracy = 0.0;
};

struct EvaluationReport {
  Protocol protocol = Protocol::random_cv;
  std::vector<FoldResult> folds;
  std::vector<double> per_fold_accuracy;
  double mean = 0.0;
  /// Sample standard deviation of per_fold_accuracy (0 for a single fold).
  double std_dev = 0.0;
  std::array<double, kNumClasses> per_class_accuracy{};
  std::array<std::size_t, kNumClasses> per_class_count{};
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
  /// top_k_accuracy[k - 1] for k = 1..16.
  std::array<double, kNumClasses> top_k_accuracy{};
  std::vector<SubjectAccuracy> per_subject;
  nlohmann::json config = nlohmann::json::object();
};

/// An error raised inside one fold, tagged with its position.
class FoldError : public Error {
 public:
  FoldError(int repetition, int fold, const std::string& what);
  int repetition() const noexcept { return repetition_; }
  int fold() const noexcept { return fold_; }

 private:
  int repetition_;
  int fold_;
};

/// Builds the folds of the protocol, trains one classifier per fold with a
/// seed derived from base_seed, and aggregates the rankings. Random CV runs
/// `repetitions` stratified holdouts; inter-subject runs `repetitions`
/// passes of leave-one-subject-out.
EvaluationReport evaluate(std::span<const EvalSample> samples, const ProtocolConfig& config,
                          const ClassifierFactory& make_classifier);

/// Aggregates fold predictions into a report (exposed for testing).
EvaluationReport summarize(Protocol protocol, std::vector<FoldResult> folds,
                           std::span<const Prediction> predictions,
                           std::span<const int> prediction_subjects);

nlohmann::json to_json(const EvaluationReport& report);
void write_report_json(const std::filesystem::path& path, const EvaluationReport& report);
/// repetition,fold,held_out_subject,test_count,correct,accuracy
void write_folds_csv(const std::filesystem::path& path, const EvaluationReport& report);
void write_confusion_csv(const std::filesystem::path& path, const EvaluationReport& report);
/// subject,test_count,accuracy — the per-subject accuracy plot data.
void write_per_subject_csv(const std::filesystem::path& path, const EvaluationReport& report);

}  // namespace handshape
