#include "handshape/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>

#include "handshape/parallel.hpp"
#include "handshape/rng.hpp"

namespace handshape {

using nlohmann::json;

std::string_view to_string(Protocol protocol) {
  return protocol == Protocol::random_cv ? "random-cv" : "inter-subject";
}

Protocol parse_protocol(std::string_view name) {
  if (name == "random-cv") return Protocol::random_cv;
  if (name == "inter-subject") return Protocol::inter_subject;
  throw ValidationError("unknown protocol '" + std::string(name) +
                        "' (expected random-cv or inter-subject)");
}

SplitSpec stratified_random_split(std::span<const int> class_ids, double test_fraction,
                                  std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ValidationError("test fraction must lie in (0, 1)");
  if (class_ids.empty()) throw ValidationError("cannot split an empty dataset");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < class_ids.size(); ++i) by_class[class_ids[i]].push_back(i);

  const auto min_per_class = static_cast<std::size_t>(std::ceil(1.0 / test_fraction - 1e-9));
  SplitSpec split;
  for (auto& [cls, members] : by_class) {
    const std::size_t n = members.size();
    if (n < min_per_class)
      throw ValidationError("class " + std::to_string(cls) + " has " + std::to_string(n) +
                            " samples; stratifying at fraction " + std::to_string(test_fraction) +
                            " needs at least " + std::to_string(min_per_class));
    const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * n + 0.5));
    if (n_test == 0 || n_test >= n)
      throw ValidationError("class " + std::to_string(cls) + " cannot be split at fraction " +
                            std::to_string(test_fraction));
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
    for (std::size_t i = 0; i < n_test; ++i)
      std::swap(members[i], members[i + rng.uniform_index(n - i)]);
    split.test.insert(split.test.end(), members.begin(), members.begin() + n_test);
    split.train.insert(split.train.end(), members.begin() + n_test, members.end());
  }
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

namespace {

std::vector<int> class_column(const Dataset& dataset) {
  std::vector<int> out;
  for (const auto& r : dataset.records) out.push_back(r.class_id);
  return out;
}

std::vector<int> subject_column(const Dataset& dataset) {
  std::vector<int> out;
  for (const auto& r : dataset.records) out.push_back(r.subject_id);
  return out;
}

}  // namespace

SplitSpec stratified_random_split(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
  return stratified_random_split(class_column(dataset), test_fraction, seed);
}

std::vector<SplitSpec> leave_one_subject_out(std::span<const int> subject_ids) {
  const std::set<int> subjects(subject_ids.begin(), subject_ids.end());
  if (subjects.size() < 2)
    throw ValidationError("leave-one-subject-out needs at least two subjects");
  std::vector<SplitSpec> splits;
  for (int s : subjects) {
    SplitSpec split;
    split.held_out_subject = s;
    for (std::size_t i = 0; i < subject_ids.size(); ++i)
      (subject_ids[i] == s ? split.test : split.train).push_back(i);
    splits.push_back(std::move(split));
  }
  return splits;
}

std::vector<SplitSpec> leave_one_subject_out(const Dataset& dataset) {
  return leave_one_subject_out(subject_column(dataset));
}

double top_k_accuracy(std::span<const Prediction> predictions, int k) {
  if (k < 1 || k > kNumClasses) throw ValidationError("k must lie in [1, 16]");
  if (predictions.empty()) throw ValidationError("no predictions");
  std::size_t hits = 0;
  for (const auto& p : predictions) {
    std::array<bool, kNumClasses> seen{};
    for (int c : p.ranking) {
      if (c < 0 || c >= kNumClasses || seen[c])
        throw ValidationError("ranking is not a permutation of the classes");
      seen[c] = true;
    }
    if (std::find(p.ranking.begin(), p.ranking.begin() + k, p.true_class) !=
        p.ranking.begin() + k)
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

namespace {

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

// Classes ordered by votes among the k nearest neighbours; ties by the rank
// of each class's nearest member, then unvoted classes by index.
Ranking knn_ranking(std::span<const FeatureVector> train, std::span<const int> labels,
                    const FeatureVector& query, int k_neighbors) {
  if (k_neighbors < 1) throw ValidationError("k_neighbors must be positive");
  if (train.empty()) throw EmptyTrainingSet("k-NN needs training vectors");
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].size() != query.size())
      throw DimensionError("k-NN vectors differ in dimension");
    dist.emplace_back(squared_distance(train[i], query), i);
  }
  const std::size_t k = std::min<std::size_t>(k_neighbors, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

  std::array<int, kNumClasses> votes{};
  std::array<std::size_t, kNumClasses> first_seen;
  first_seen.fill(std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < k; ++i) {
    const int c = labels[dist[i].second];
    ++votes[c];
    first_seen[c] = std::min(first_seen[c], i);
  }
  Ranking ranking;
  std::iota(ranking.begin(), ranking.end(), 0);
  std::stable_sort(ranking.begin(), ranking.end(), [&](int a, int b) {
    if (votes[a] != votes[b]) return votes[a] > votes[b];
    return first_seen[a] < first_seen[b];
  });
  return ranking;
}

FeatureVector concatenate(const DescriptorSet& set) {
  FeatureVector out;
  for (const auto& v : set.vectors) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace

std::vector<int> knn_baseline(std::span<const FeatureVector> train, std::span<const int> labels,
                              std::span<const FeatureVector> test, int k_neighbors) {
  if (train.size() != labels.size()) throw ValidationError("k-NN labels do not match vectors");
  for (int l : labels)
    if (l < 0 || l >= kNumClasses) throw ValidationError("k-NN label out of range");
  std::vector<int> out;
  out.reserve(test.size());
  for (const auto& q : test) out.push_back(knn_ranking(train, labels, q, k_neighbors)[0]);
  return out;
}

void ProbSomClassifier::fit(std::span<const LabeledSet> train, std::uint64_t seed) {
  if (train.empty()) throw EmptyTrainingSet("no training samples");
  SomConfig config = config_;
  config.seed = seed;
  config.vector_dim = train.front().descriptors.get().dimension();
  model_ = train_probsom(train, config, train.front().descriptors.get().kind);
}

Ranking ProbSomClassifier::rank(const DescriptorSet& sample) const {
  return classify(model_, sample).ranking;
}

void KnnClassifier::fit(std::span<const LabeledSet> train, std::uint64_t) {
  train_.clear();
  labels_.clear();
  for (const auto& s : train) {
    train_.push_back(concatenate(s.descriptors.get()));
    labels_.push_back(s.class_id);
  }
}

Ranking KnnClassifier::rank(const DescriptorSet& sample) const {
  return knn_ranking(train_, labels_, concatenate(sample), k_);
}

FoldError::FoldError(int repetition, int fold, const std::string& what)
    : Error("repetition " + std::to_string(repetition) + ", fold " + std::to_string(fold) + ": " +
            what),
      repetition_(repetition),
      fold_(fold) {}

namespace {

struct FoldTask {
  int repetition = 0;
  int fold = 0;
  SplitSpec split;
  std::uint64_t seed = 0;
};

struct FoldOutput {
  std::vector<Prediction> predictions;
  std::vector<int> subjects;
  FoldResult result;
};

}  // namespace

EvaluationReport evaluate(std::span<const EvalSample> samples, const ProtocolConfig& config,
                          const ClassifierFactory& make_classifier) {
  if (config.repetitions < 1) throw ValidationError("repetitions must be positive");
  if (samples.empty()) throw ValidationError("no samples to evaluate");
  std::vector<int> classes, subjects;
  for (const auto& s : samples) {
    if (s.class_id < 0 || s.class_id >= kNumClasses)
      throw ValidationError("sample " + s.id + " has an out-of-range class");
    classes.push_back(s.class_id);
    subjects.push_back(s.subject_id);
  }

  std::vector<FoldTask> tasks;
  if (config.protocol == Protocol::random_cv) {
    for (int r = 0; r < config.repetitions; ++r) {
      const auto rep = static_cast<std::uint64_t>(r);
      tasks.push_back({r, 0,
                       stratified_random_split(classes, config.test_fraction,
                                               derive_seed(config.base_seed, 2 * rep)),
                       derive_seed(config.base_seed, 2 * rep + 1)});
    }
  } else {
    const auto splits = leave_one_subject_out(subjects);
    for (int r = 0; r < config.repetitions; ++r)
      for (std::size_t f = 0; f < splits.size(); ++f)
        tasks.push_back({r, static_cast<int>(f), splits[f],
                         derive_seed(derive_seed(config.base_seed, static_cast<std::uint64_t>(r)),
                                     f)});
  }

  std::vector<FoldOutput> outputs(tasks.size());
  parallel_for(tasks.size(), config.jobs, [&](std::size_t t) {
    const FoldTask& task = tasks[t];
    try {
      std::vector<LabeledSet> train;
      train.reserve(task.split.train.size());
      for (std::size_t i : task.split.train)
        train.push_back({std::cref(samples[i].descriptors), samples[i].class_id});
      auto classifier = make_classifier();
      classifier->fit(train, task.seed);

      FoldOutput out;
      out.result = {task.repetition, task.fold, task.split.held_out_subject, 0, 0, 0.0};
      for (std::size_t i : task.split.test) {
        Prediction p{classifier->rank(samples[i].descriptors), samples[i].class_id};
        out.result.correct += p.ranking[0] == p.true_class;
        out.predictions.push_back(p);
        out.subjects.push_back(samples[i].subject_id);
      }
      out.result.test_count = task.split.test.size();
      out.result.accuracy =
          static_cast<double>(out.result.correct) / static_cast<double>(out.result.test_count);
      outputs[t] = std::move(out);
    } catch (const std::exception& e) {
      throw FoldError(task.repetition, task.fold, e.what());
    }
  });

  std::vector<FoldResult> folds;
  std::vector<Prediction> predictions;
  std::vector<int> prediction_subjects;
  for (auto& o : outputs) {
    folds.push_back(o.result);
    predictions.insert(predictions.end(), o.predictions.begin(), o.predictions.end());
    prediction_subjects.insert(prediction_subjects.end(), o.subjects.begin(), o.subjects.end());
  }
  return summarize(config.protocol, std::move(folds), predictions, prediction_subjects);
}

EvaluationReport summarize(Protocol protocol, std::vector<FoldResult> folds,
                           std::span<const Prediction> predictions,
                           std::span<const int> prediction_subjects) {
  if (folds.empty() || predictions.empty()) throw ValidationError("nothing to summarize");
  if (prediction_subjects.size() != predictions.size())
    throw ValidationError("subjects do not match predictions");
  EvaluationReport report;
  report.protocol = protocol;
  for (const auto& f : folds) report.per_fold_accuracy.push_back(f.accuracy);
  report.folds = std::move(folds);

  const auto n = static_cast<double>(report.per_fold_accuracy.size());
  report.mean = std::accumulate(report.per_fold_accuracy.begin(), report.per_fold_accuracy.end(), 0.0) / n;
  if (report.per_fold_accuracy.size() > 1) {
    double ss = 0.0;
    for (double a : report.per_fold_accuracy) ss += (a - report.mean) * (a - report.mean);
    report.std_dev = std::sqrt(ss / (n - 1.0));
  }

  for (const auto& p : predictions) {
    ++report.confusion[p.true_class][p.ranking[0]];
    ++report.per_class_count[p.true_class];
  }
  for (int c = 0; c < kNumClasses; ++c)
    report.per_class_accuracy[c] =
        report.per_class_count[c] == 0
            ? 0.0
            : static_cast<double>(report.confusion[c][c]) / static_cast<double>(report.per_class_count[c]);
  for (int k = 1; k <= kNumClasses; ++k) report.top_k_accuracy[k - 1] = top_k_accuracy(predictions, k);

  std::map<int, std::pair<std::size_t, std::size_t>> by_subject;  // correct, total
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    auto& [correct, total] = by_subject[prediction_subjects[i]];
    correct += predictions[i].ranking[0] == predictions[i].true_class;
    ++total;
  }
  for (const auto& [subject, ct] : by_subject)
    report.per_subject.push_back(
        {subject, ct.second, static_cast<double>(ct.first) / static_cast<double>(ct.second)});
  return report;
}

json to_json(const EvaluationReport& report) {
  json folds = json::array();
  for (const auto& f : report.folds)
    folds.push_back({{"repetition", f.repetition},
                     {"fold", f.fold},
                     {"held_out_subject", f.held_out_subject},
                     {"test_count", f.test_count},
                     {"correct", f.correct},
                     {"accuracy", f.accuracy}});
  json top_k = json::object();
  for (int k = 1; k <= kNumClasses; ++k) top_k[std::to_string(k)] = report.top_k_accuracy[k - 1];
  json subjects = json::array();
  for (const auto& s : report.per_subject)
    subjects.push_back({{"subject", s.subject}, {"test_count", s.test_count}, {"accuracy", s.accuracy}});
  return json{{"protocol", to_string(report.protocol)},
              {"folds", std::move(folds)},
              {"per_fold_accuracy", report.per_fold_accuracy},
              {"mean", report.mean},
              {"std_dev", report.std_dev},
              {"per_class_accuracy", report.per_class_accuracy},
              {"per_class_count", report.per_class_count},
              {"confusion", report.confusion},
              {"top_k_accuracy", std::move(top_k)},
              {"per_subject", std::move(subjects)},
              {"config", report.config}};
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(10);
  return out;
}

}  // namespace

void write_report_json(const std::filesystem::path& path, const EvaluationReport& report) {
  auto out = open_output(path);
  out << to_json(report).dump(2) << '\n';
}

void write_folds_csv(const std::filesystem::path& path, const EvaluationReport& report) {
  auto out = open_output(path);
  out << "repetition,fold,held_out_subject,test_count,correct,accuracy\n";
  for (const auto& f : report.folds)
    out << f.repetition << ',' << f.fold << ',' << f.held_out_subject << ',' << f.test_count << ','
        << f.correct << ',' << f.accuracy << '\n';
}

void write_confusion_csv(const std::filesystem::path& path, const EvaluationReport& report) {
  auto out = open_output(path);
  out << "true\\predicted";
  for (int c = 0; c < kNumClasses; ++c) out << ',' << c;
  out << '\n';
  for (int t = 0; t < kNumClasses; ++t) {
    out << t;
    for (int c = 0; c < kNumClasses; ++c) out << ',' << report.confusion[t][c];
    out << '\n';
  }
}

void write_per_subject_csv(const std::filesystem::path& path, const EvaluationReport& report) {
  auto out = open_output(path);
  out << "subject,test_count,accuracy\n";
  for (const auto& s : report.per_subject)
    out << s.subject << ',' << s.test_count << ',' << s.accuracy << '\n';
}

}  // namespace handshape
