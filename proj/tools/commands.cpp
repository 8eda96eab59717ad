#include "commands.hpp"

#include <atomic>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "handshape/config.hpp"
#include "handshape/errors.hpp"
#include "handshape/parallel.hpp"
#include "handshape/radon.hpp"

namespace handshape::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::string output_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool debug_stages = false;

  std::string manifest;
  std::string descriptor;
  std::string protocol;
  std::string classifier;
  std::string segmentation;
  std::string radon_input;
  int repetitions = 0;
  double test_fraction = 0.0;
  int knn_neighbors = 1;

  std::string model;
  std::string descriptors;
  std::string image;
  std::string images;
  std::string output;
  int top_k = 3;
  bool csv = false;
  bool zero_based = false;
};

struct Context {
  RunConfig config;
  fs::path descriptors_path;
  std::ostream& out;
  std::ostream& err;
};

fs::path canonical_dir(const RunConfig& c) { return c.output_dir / "canonical"; }

fs::path default_descriptors_path(const RunConfig& c) {
  return c.output_dir / ("descriptors_" + std::string(to_string(c.pipeline.descriptor)) + ".jsonl");
}

fs::path model_path(const RunConfig& c) {
  return c.model.empty() ? c.output_dir / "model.json" : c.model;
}

Dataset require_manifest(const RunConfig& c) {
  if (c.manifest.empty()) throw ValidationError("no manifest given (--manifest or config 'manifest')");
  return load_manifest(c.manifest);
}

int cmd_make_manifest(Context& ctx, const Flags& f) {
  if (f.images.empty()) throw ValidationError("make-manifest needs --images DIR");
  const fs::path target = f.output.empty() ? ctx.config.output_dir / "manifest.csv" : fs::path(f.output);
  Dataset d = dataset_from_directory(f.images, !f.zero_based);
  const fs::path base = target.has_parent_path() ? target.parent_path() : fs::path(".");
  fs::create_directories(base);
  for (auto& r : d.records)
    r.image_path = fs::proximate(fs::absolute(fs::path(f.images) / r.image_path), fs::absolute(base));
  write_manifest(target, d);
  ctx.out << "wrote " << d.records.size() << " records to " << target.string() << '\n';
  return 0;
}

int cmd_preprocess(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const Dataset dataset = require_manifest(cfg);
  const fs::path dir = canonical_dir(cfg);
  fs::create_directories(dir);

  std::vector<std::string> status(dataset.records.size());
  parallel_for(dataset.records.size(), cfg.protocol.jobs, [&](std::size_t i) {
    const auto& rec = dataset.records[i];
    const std::string id = rec.id();
    try {
      CanonicalizationStages stages;
      const auto hand = canonicalize(segment(read_rgb(rec.image_path), cfg.pipeline), stages);
      write_png(dir / (id + ".png"), hand.pixels);
      write_png(dir / (id + "_mask.png"), hand.mask);
      write_png(dir / (id + "_contour.png"), hand.contour);
      if (cfg.debug_stages) write_stages(cfg.output_dir / "stages", id, stages);
    } catch (const std::exception& e) {
      status[i] = e.what();
    }
  });

  std::ofstream log(dir / "status.csv");
  log << "id,path,status,message\n";
  std::size_t failures = 0;
  for (std::size_t i = 0; i < status.size(); ++i) {
    const auto& rec = dataset.records[i];
    const bool ok = status[i].empty();
    failures += !ok;
    log << rec.id() << ',' << rec.image_path.generic_string() << ',' << (ok ? "ok" : "failed")
        << ",\"" << status[i] << "\"\n";
    if (!ok) ctx.err << "preprocess: " << rec.id() << " (" << rec.image_path.string() << "): " << status[i] << '\n';
  }
  ctx.out << "preprocess: " << status.size() - failures << " of " << status.size()
          << " images canonicalised into " << dir.string() << '\n';
  return failures == 0 ? 0 : 1;
}

int cmd_extract(Context& ctx, bool csv) {
  const RunConfig& cfg = ctx.config;
  const Dataset dataset = require_manifest(cfg);
  const fs::path dir = canonical_dir(cfg);

  std::vector<std::optional<DescriptorRecord>> records(dataset.records.size());
  std::vector<std::string> failures(dataset.records.size());
  parallel_for(dataset.records.size(), cfg.protocol.jobs, [&](std::size_t i) {
    const auto& rec = dataset.records[i];
    const std::string id = rec.id();
    try {
      CanonicalHandImage hand;
      hand.pixels = read_gray(dir / (id + ".png"));
      hand.mask = read_mask(dir / (id + "_mask.png"));
      hand.pixels = apply_mask(hand.pixels, hand.mask);
      hand.contour = extract_contour(hand.mask);
      records[i] = DescriptorRecord{id, rec.class_id, rec.subject_id, rec.repetition,
                                    describe(hand, cfg.pipeline)};
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });

  DescriptorFile file;
  file.kind = cfg.pipeline.descriptor;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i]) {
      file.records.push_back(std::move(*records[i]));
    } else {
      ++failed;
      ctx.err << "extract: " << dataset.records[i].id() << ": " << failures[i] << '\n';
    }
  }
  file.dimension = file.records.empty() ? 0 : file.records.front().descriptors.dimension();
  write_descriptor_file(ctx.descriptors_path, file);
  if (csv) {
    fs::path csv_path = ctx.descriptors_path;
    write_descriptor_csv(csv_path.replace_extension(".csv"), file);
  }
  ctx.out << "extract: " << file.records.size() << " " << to_string(file.kind)
          << " descriptor records written to " << ctx.descriptors_path.string() << '\n';
  return failed == 0 && !file.records.empty() ? 0 : 1;
}

std::vector<LabeledSet> labeled(const DescriptorFile& file) {
  std::vector<LabeledSet> out;
  for (const auto& r : file.records) out.push_back({std::cref(r.descriptors), r.class_id});
  return out;
}

int cmd_train(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const DescriptorFile file = read_descriptor_file(ctx.descriptors_path);
  if (file.records.empty()) throw EmptyTrainingSet("descriptor file has no records");
  SomConfig som = cfg.pipeline.som;
  som.vector_dim = file.dimension;
  som.seed = cfg.protocol.base_seed;
  const auto samples = labeled(file);
  const ProbSomModel model = train_probsom(samples, som, file.kind);
  const fs::path path = model_path(cfg);
  save_model(model, path);
  std::size_t hit = 0;
  for (const auto& p : model.profiles) hit += p.hit_count > 0;
  ctx.out << "train: " << som.grid_rows << "x" << som.grid_cols << " map over "
          << file.records.size() << " samples, " << hit << " neurons hit; model written to "
          << path.string() << '\n';
  return 0;
}

int cmd_predict(Context& ctx, const Flags& f) {
  const RunConfig& cfg = ctx.config;
  if (f.top_k < 1 || f.top_k > kNumClasses) throw ValidationError("--top-k must lie in [1, 16]");
  const ProbSomModel model = load_model(model_path(cfg));

  DescriptorFile file;
  if (!f.image.empty()) {
    PipelineConfig pipeline = cfg.pipeline;
    pipeline.descriptor = model.descriptor_kind;
    file.kind = model.descriptor_kind;
    file.records.push_back({fs::path(f.image).stem().string(), -1, -1, -1,
                            describe_image(f.image, pipeline)});
  } else {
    file = read_descriptor_file(ctx.descriptors_path);
  }
  if (file.kind != model.descriptor_kind) {
    ctx.err << "predict: descriptor kind mismatch: input has " << to_string(file.kind)
            << " descriptors but the model was trained on " << to_string(model.descriptor_kind)
            << '\n';
    return 1;
  }

  json predictions = json::array();
  std::size_t labelled = 0, correct = 0;
  for (const auto& rec : file.records) {
    const ClassScores s = classify(model, rec.descriptors);
    json top = json::array();
    ctx.out << rec.id;
    for (int i = 0; i < f.top_k; ++i) {
      const int c = s.ranking[i];
      top.push_back({{"class", c}, {"name", model.class_names[c]}, {"score", s.scores[c]}});
      ctx.out << ' ' << c << ':' << std::setprecision(6) << s.scores[c];
    }
    ctx.out << '\n';
    predictions.push_back({{"id", rec.id}, {"true_class", rec.class_id}, {"top_k", std::move(top)}});
    if (rec.class_id >= 0) {
      ++labelled;
      correct += s.best() == rec.class_id;
    }
  }
  const fs::path target = f.output.empty() ? cfg.output_dir / "predictions.json" : fs::path(f.output);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ofstream(target) << json{{"descriptor_kind", to_string(model.descriptor_kind)},
                                {"predictions", std::move(predictions)}}
                               .dump(2)
                        << '\n';
  if (labelled > 0)
    ctx.out << "predict: top-1 accuracy " << static_cast<double>(correct) / labelled << " over "
            << labelled << " labelled samples\n";
  return 0;
}

int cmd_evaluate(Context& ctx) {
  RunConfig cfg = ctx.config;
  const DescriptorFile file = read_descriptor_file(ctx.descriptors_path);
  std::vector<EvalSample> samples;
  for (const auto& r : file.records) samples.push_back({r.id, r.class_id, r.subject_id, r.descriptors});
  cfg.pipeline.descriptor = file.kind;

  EvaluationReport report = evaluate(samples, cfg.protocol, classifier_factory(cfg.pipeline));
  report.config = to_json(cfg);
  write_report_json(cfg.output_dir / "report.json", report);
  write_folds_csv(cfg.output_dir / "folds.csv", report);
  write_confusion_csv(cfg.output_dir / "confusion.csv", report);
  write_per_subject_csv(cfg.output_dir / "per_subject.csv", report);
  ctx.out << "evaluate: " << to_string(report.protocol) << " over " << report.folds.size()
          << " folds: accuracy " << std::fixed << std::setprecision(2) << 100.0 * report.mean
          << "% (+- " << 100.0 * report.std_dev << "), top-2 " << 100.0 * report.top_k_accuracy[1]
          << "%\n"
          << std::defaultfloat;
  return 0;
}

int cmd_run_all(Context& ctx, const Flags& f) {
  int status = cmd_preprocess(ctx);
  status |= cmd_extract(ctx, f.csv);
  status |= cmd_train(ctx);
  status |= cmd_evaluate(ctx);
  return status;
}

void apply_flags(RunConfig& c, const CLI::App& app, const CLI::App& sub, const Flags& f) {
  auto given = [&](const char* name) {
    return (app.get_option_no_throw(name) && app.get_option_no_throw(name)->count() > 0) ||
           (sub.get_option_no_throw(name) && sub.get_option_no_throw(name)->count() > 0);
  };
  if (given("--output-dir")) c.output_dir = f.output_dir;
  if (given("--seed")) c.protocol.base_seed = f.seed;
  if (given("--jobs")) c.protocol.jobs = f.jobs;
  if (given("--debug-stages")) c.debug_stages = f.debug_stages;
  if (given("--manifest")) c.manifest = f.manifest;
  if (given("--model")) c.model = f.model;
  if (given("--descriptor")) c.pipeline.descriptor = parse_descriptor_kind(f.descriptor);
  if (given("--protocol")) c.protocol.protocol = parse_protocol(f.protocol);
  if (given("--classifier")) c.pipeline.classifier = parse_classifier_kind(f.classifier);
  if (given("--segmentation")) c.pipeline.segmentation = parse_segmentation_mode(f.segmentation);
  if (given("--radon-input")) c.pipeline.radon_input = parse_radon_input(f.radon_input);
  if (given("--repetitions")) c.protocol.repetitions = f.repetitions;
  if (given("--test-fraction")) c.protocol.test_fraction = f.test_fraction;
  if (given("--knn-neighbors")) c.pipeline.knn_neighbors = f.knn_neighbors;
  if (c.protocol.jobs < 1) throw ValidationError("--jobs must be positive");
  if (c.protocol.repetitions < 1) throw ValidationError("--repetitions must be positive");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Handshape recognition with Radon descriptors and ProbSom"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "JSON configuration file; flags override it");
  app.add_option("--output-dir", f.output_dir, "Directory for all outputs (default: out)");
  app.add_option("--seed", f.seed, "Base seed for splits and SOM training");
  app.add_option("--jobs", f.jobs, "Worker threads");
  app.add_flag("--debug-stages", f.debug_stages, "Write the five canonicalisation stage images");

  auto add_manifest = [&](CLI::App* s) {
    s->add_option("--manifest", f.manifest, "CSV manifest: path,class,subject,repetition");
  };
  auto add_pipeline = [&](CLI::App* s) {
    s->add_option("--descriptor", f.descriptor, "radon-local | radon-global | sift");
    s->add_option("--segmentation", f.segmentation, "auto | glove | black-background");
    s->add_option("--radon-input", f.radon_input, "intensity | mask");
  };
  auto add_eval = [&](CLI::App* s) {
    s->add_option("--protocol", f.protocol, "random-cv | inter-subject");
    s->add_option("--repetitions", f.repetitions, "Repetitions of the protocol");
    s->add_option("--test-fraction", f.test_fraction, "Held-out fraction for random-cv");
    s->add_option("--classifier", f.classifier, "probsom | knn");
    s->add_option("--knn-neighbors", f.knn_neighbors, "k for the knn baseline");
  };
  auto add_descriptors = [&](CLI::App* s) {
    s->add_option("--descriptors", f.descriptors,
                  "Descriptor file (default: <output-dir>/descriptors_<kind>.jsonl)");
  };

  auto* make_manifest = app.add_subcommand("make-manifest", "Build a manifest from <class>_<subject>_<rep>.png files");
  make_manifest->add_option("--images", f.images, "Image directory")->required();
  make_manifest->add_option("--output", f.output, "Manifest path (default: <output-dir>/manifest.csv)");
  make_manifest->add_flag("--zero-based", f.zero_based, "File name ids start at 0 instead of 1");

  auto* preprocess = app.add_subcommand("preprocess", "Segment and canonicalise every image");
  add_manifest(preprocess);
  add_pipeline(preprocess);

  auto* extract = app.add_subcommand("extract", "Compute descriptors from canonical images");
  add_manifest(extract);
  add_pipeline(extract);
  add_descriptors(extract);
  extract->add_flag("--csv", f.csv, "Also export the descriptors as CSV");

  auto* train = app.add_subcommand("train", "Train a ProbSom model on a descriptor file");
  add_pipeline(train);
  add_descriptors(train);
  train->add_option("--model", f.model, "Model path (default: <output-dir>/model.json)");

  auto* predict = app.add_subcommand("predict", "Rank classes for descriptor records or one image");
  add_pipeline(predict);
  add_descriptors(predict);
  predict->add_option("--model", f.model, "Model path (default: <output-dir>/model.json)");
  predict->add_option("--image", f.image, "Classify a single image instead of a descriptor file");
  predict->add_option("--top-k", f.top_k, "Number of ranked classes to report");
  predict->add_option("--output", f.output, "Predictions JSON (default: <output-dir>/predictions.json)");

  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate ProbSom on a descriptor file");
  add_pipeline(evaluate);
  add_descriptors(evaluate);
  add_eval(evaluate);

  auto* run_all = app.add_subcommand("run-all", "preprocess, extract, train and evaluate in one go");
  add_manifest(run_all);
  add_pipeline(run_all);
  add_eval(run_all);
  add_descriptors(run_all);
  run_all->add_option("--model", f.model, "Model path (default: <output-dir>/model.json)");
  run_all->add_flag("--csv", f.csv, "Also export the descriptors as CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    RunConfig config = f.config.empty() ? RunConfig{} : load_run_config(f.config);
    apply_flags(config, app, *sub, f);
    Context ctx{config, {}, out, err};
    ctx.descriptors_path = f.descriptors.empty() ? default_descriptors_path(config) : fs::path(f.descriptors);

    if (sub == make_manifest) return cmd_make_manifest(ctx, f);
    if (sub == preprocess) return cmd_preprocess(ctx);
    if (sub == extract) return cmd_extract(ctx, f.csv);
    if (sub == train) return cmd_train(ctx);
    if (sub == predict) return cmd_predict(ctx, f);
    if (sub == evaluate) return cmd_evaluate(ctx);
    if (sub == run_all) return cmd_run_all(ctx, f);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace handshape::cli
