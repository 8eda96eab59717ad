#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "commands.hpp"
#include "handshape/dataset.hpp"
#include "handshape/descriptor.hpp"
#include "handshape/image.hpp"
#include "synthetic.hpp"

using namespace handshape;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small SOM so the CLI tests stay fast.
fs::path write_config(const fs::path& dir) {
  std::ofstream(dir / "config.json") << R"({"som": {"grid_rows": 4, "grid_cols": 4, "epochs": 10},
    "repetitions": 5, "test_fraction": 0.25, "seed": 3})";
  return dir / "config.json";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("preprocess writes canonical images and is idempotent") {
    const auto dir = testing::scratch_dir("cli_preprocess");
    const Dataset d = testing::write_synthetic_corpus(dir / "img", 3, 1, 1);
    const auto out = dir / "out";
    const auto r = run({"preprocess", "--manifest", (dir / "img" / "manifest.csv").string(),
                        "--output-dir", out.string()});
    CHECK(r.status == 0);
    for (const auto& rec : d.records) {
      const auto png = out / "canonical" / (rec.id() + ".png");
      REQUIRE(fs::exists(png));
      CHECK(fs::exists(out / "canonical" / (rec.id() + "_contour.png")));
      const GrayImage img = read_gray(png);
      CHECK(img.rows() == 128);
      CHECK(img.cols() == 128);
    }
    const std::string first = slurp(out / "canonical" / (d.records[0].id() + ".png"));
    CHECK(run({"preprocess", "--manifest", (dir / "img" / "manifest.csv").string(), "--output-dir",
               out.string()})
              .status == 0);
    CHECK(slurp(out / "canonical" / (d.records[0].id() + ".png")) == first);
    CHECK_FALSE(fs::exists(out / "stages"));
  }

  TEST_CASE("preprocess reports unreadable files and continues") {
    const auto dir = testing::scratch_dir("cli_unreadable");
    Dataset d = testing::write_synthetic_corpus(dir, 1, 3, 2);
    std::ofstream(d.records[1].image_path, std::ios::trunc) << "garbage";
    const auto r = run({"preprocess", "--manifest", (dir / "manifest.csv").string(), "--output-dir",
                        (dir / "out").string()});
    CHECK(r.status == 1);
    CHECK(r.err.find(d.records[1].id()) != std::string::npos);
    CHECK(fs::exists(dir / "out" / "canonical" / (d.records[0].id() + ".png")));
    CHECK(fs::exists(dir / "out" / "canonical" / (d.records[2].id() + ".png")));
    CHECK_FALSE(fs::exists(dir / "out" / "canonical" / (d.records[1].id() + ".png")));
    const std::string status = slurp(dir / "out" / "canonical" / "status.csv");
    CHECK(status.find(d.records[1].id() + ",") != std::string::npos);
    CHECK(status.find("failed") != std::string::npos);
  }

  TEST_CASE("debug stages") {
    const auto dir = testing::scratch_dir("cli_stages");
    const Dataset d = testing::write_synthetic_corpus(dir, 2, 1, 4);
    const auto r = run({"--debug-stages", "preprocess", "--manifest", (dir / "manifest.csv").string(),
                        "--output-dir", (dir / "out").string()});
    REQUIRE(r.status == 0);
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir / "out" / "stages")) n += e.path().extension() == ".png";
    CHECK(n == 5 * d.records.size());
  }

  TEST_CASE("extract, train, predict and evaluate") {
    const auto dir = testing::scratch_dir("cli_flow");
    testing::write_synthetic_corpus(dir / "img", 2, 10, 5);
    const auto cfg = write_config(dir);
    const std::string manifest = (dir / "img" / "manifest.csv").string();
    const std::string out = (dir / "out").string();
    REQUIRE(run({"preprocess", "--manifest", manifest, "--output-dir", out}).status == 0);

    for (const char* kind : {"radon-local", "radon-global", "sift"}) {
      CAPTURE(kind);
      const auto r = run({"extract", "--manifest", manifest, "--output-dir", out, "--descriptor", kind, "--csv"});
      REQUIRE(r.status == 0);
      const auto file = read_descriptor_file(dir / "out" / (std::string("descriptors_") + kind + ".jsonl"));
      REQUIRE(file.records.size() == 20);
      for (const auto& rec : file.records) {
        if (std::string(kind) == "radon-local") {
          CHECK(rec.descriptors.vectors.size() == 32);
          CHECK(rec.descriptors.dimension() == 32);
        } else if (std::string(kind) == "radon-global") {
          CHECK(rec.descriptors.vectors.size() == 1);
          CHECK(rec.descriptors.dimension() == 1024);
        } else {
          CHECK(rec.descriptors.vectors.size() >= 1);
          CHECK(rec.descriptors.dimension() == 128);
        }
      }
    }
    CHECK(fs::exists(dir / "out" / "descriptors_sift.csv"));

    REQUIRE(run({"--config", cfg.string(), "train", "--output-dir", out, "--descriptor", "radon-local"}).status == 0);
    REQUIRE(fs::exists(dir / "out" / "model.json"));

    const auto p = run({"predict", "--output-dir", out, "--descriptor", "radon-local", "--top-k", "2"});
    REQUIRE(p.status == 0);
    const auto preds = nlohmann::json::parse(slurp(dir / "out" / "predictions.json"));
    REQUIRE(preds["predictions"].size() == 20);
    std::size_t correct = 0;
    for (const auto& e : preds["predictions"]) {
      CHECK(e["top_k"].size() == 2);
      correct += e["top_k"][0]["class"] == e["true_class"];
    }
    CHECK(correct >= 18);

    const auto mismatch = run({"predict", "--output-dir", out, "--descriptors",
                               (dir / "out" / "descriptors_sift.jsonl").string()});
    CHECK(mismatch.status == 1);
    CHECK(mismatch.err.find("descriptor kind mismatch") != std::string::npos);

    const auto single = run({"predict", "--output-dir", out, "--image",
                             (dir / "img" / "c01_s03_r0.png").string(), "--output",
                             (dir / "single.json").string()});
    REQUIRE(single.status == 0);
    CHECK(nlohmann::json::parse(slurp(dir / "single.json"))["predictions"][0]["top_k"][0]["class"] == 1);

    // Config says five repetitions; the flag wins.
    const auto e = run({"--config", cfg.string(), "evaluate", "--output-dir", out, "--repetitions", "2"});
    REQUIRE(e.status == 0);
    const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    CHECK(report["folds"].size() == 2);
    CHECK(report["config"]["repetitions"] == 2);
    CHECK(report["config"]["seed"] == 3);

    const auto inter = run({"--config", cfg.string(), "evaluate", "--output-dir", out, "--protocol",
                            "inter-subject", "--repetitions", "1"});
    REQUIRE(inter.status == 0);
    const auto ir = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    CHECK(ir["per_subject"].size() == 10);
    CHECK(ir["folds"].size() == 10);
    const std::string per_subject = slurp(dir / "out" / "per_subject.csv");
    CHECK(std::count(per_subject.begin(), per_subject.end(), '\n') == 11);
  }

  TEST_CASE("overfit toy corpus: every training image predicts its class") {
    const auto dir = testing::scratch_dir("cli_toy");
    const Dataset d = testing::write_synthetic_corpus(dir / "img", 2, 2, 9);
    REQUIRE(d.records.size() == 4);
    const std::string manifest = (dir / "img" / "manifest.csv").string();
    const std::string out = (dir / "out").string();
    REQUIRE(run({"preprocess", "--manifest", manifest, "--output-dir", out}).status == 0);
    REQUIRE(run({"extract", "--manifest", manifest, "--output-dir", out}).status == 0);
    REQUIRE(run({"--config", write_config(dir).string(), "train", "--output-dir", out}).status == 0);
    for (const auto& rec : d.records) {
      const auto p = run({"predict", "--output-dir", out, "--image", rec.image_path.string(), "--top-k", "1",
                          "--output", (dir / "p.json").string()});
      REQUIRE(p.status == 0);
      CHECK(nlohmann::json::parse(slurp(dir / "p.json"))["predictions"][0]["top_k"][0]["class"] == rec.class_id);
    }
  }

  TEST_CASE("extract needs canonical images and is job-count independent") {
    const auto dir = testing::scratch_dir("cli_extract");
    const Dataset d = testing::write_synthetic_corpus(dir / "img", 2, 3, 10);
    const std::string manifest = (dir / "img" / "manifest.csv").string();
    const std::string out = (dir / "out").string();
    const auto missing = run({"extract", "--manifest", manifest, "--output-dir", out});
    CHECK(missing.status == 1);
    CHECK(missing.err.find(d.records[0].id()) != std::string::npos);

    REQUIRE(run({"--jobs", "3", "preprocess", "--manifest", manifest, "--output-dir", out}).status == 0);
    REQUIRE(run({"extract", "--manifest", manifest, "--output-dir", out, "--descriptor", "sift"}).status == 0);
    const std::string serial = slurp(dir / "out" / "descriptors_sift.jsonl");
    REQUIRE(run({"--jobs", "3", "extract", "--manifest", manifest, "--output-dir", out, "--descriptor", "sift"})
                .status == 0);
    CHECK(slurp(dir / "out" / "descriptors_sift.jsonl") == serial);

    fs::remove(dir / "out" / "canonical" / (d.records[4].id() + ".png"));
    const auto partial = run({"extract", "--manifest", manifest, "--output-dir", out});
    CHECK(partial.status == 1);
    CHECK(partial.err.find(d.records[4].id()) != std::string::npos);
  }

  TEST_CASE("run-all") {
    const auto dir = testing::scratch_dir("cli_run_all");
    testing::write_synthetic_corpus(dir / "img", 2, 10, 6);
    const auto cfg = write_config(dir);
    const auto r = run({"--config", cfg.string(), "--jobs", "2", "run-all", "--manifest",
                        (dir / "img" / "manifest.csv").string(), "--output-dir", (dir / "out").string()});
    CHECK(r.status == 0);
    CHECK(fs::exists(dir / "out" / "report.json"));
    CHECK(fs::exists(dir / "out" / "model.json"));
    CHECK(fs::exists(dir / "out" / "confusion.csv"));
  }

  TEST_CASE("make-manifest") {
    const auto dir = testing::scratch_dir("cli_manifest");
    fs::create_directories(dir / "raw");
    for (const char* name : {"1_1_1.png", "2_3_4.png"}) std::ofstream(dir / "raw" / name) << "";
    const auto r = run({"make-manifest", "--images", (dir / "raw").string(), "--output", (dir / "m.csv").string()});
    REQUIRE(r.status == 0);
    const Dataset d = load_manifest(dir / "m.csv");
    REQUIRE(d.records.size() == 2);
    CHECK(d.records[1].class_id == 1);
    CHECK(d.records[1].subject_id == 2);
    CHECK(d.records[1].repetition == 3);
    CHECK(fs::equivalent(d.records[0].image_path, dir / "raw" / "1_1_1.png"));
  }

  TEST_CASE("usage errors") {
    CHECK(run({}).status != 0);
    CHECK(run({"frobnicate"}).status != 0);
    CHECK(run({"preprocess"}).status == 1);  // no manifest
    const auto bad = run({"evaluate", "--protocol", "loso", "--descriptors", "/nonexistent"});
    CHECK(bad.status == 1);
    CHECK(bad.err.find("error:") != std::string::npos);
    CHECK(run({"--help"}).status == 0);
  }
}
