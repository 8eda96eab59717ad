// Property-based acceptance suite: runs every criterion that needs no
// external data and prints one PASS/FAIL line per criterion.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "commands.hpp"
#include "handshape/config.hpp"
#include "handshape/errors.hpp"
#include "handshape/eval.hpp"
#include "handshape/geometry.hpp"
#include "handshape/pipeline.hpp"
#include "handshape/preprocess.hpp"
#include "handshape/probsom.hpp"
#include "handshape/radon.hpp"
#include "handshape/rng.hpp"
#include "synthetic.hpp"

using namespace handshape;
namespace fs = std::filesystem;
using Wide = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<256>>;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double mass(const GrayImage& img) {
  return std::accumulate(img.values().begin(), img.values().end(), 0.0);
}

GrayImage random_nonnegative_image(Rng& rng) {
  GrayImage img(128, 128);
  switch (rng.uniform_index(3)) {
    case 0:  // dense noise
      for (double& v : img.values()) v = rng.uniform01();
      break;
    case 1:  // sparse speckle
      for (double& v : img.values()) v = rng.uniform01() < 0.02 ? rng.uniform(0, 5) : 0.0;
      break;
    default: {  // smooth blobs
      const int n = 1 + static_cast<int>(rng.uniform_index(5));
      for (int k = 0; k < n; ++k) {
        const double cr = rng.uniform(10, 118), cc = rng.uniform(10, 118), s = rng.uniform(2, 20);
        for (int r = 0; r < 128; ++r)
          for (int c = 0; c < 128; ++c)
            img(r, c) += std::exp(-((r - cr) * (r - cr) + (c - cc) * (c - cc)) / (2 * s * s));
      }
    }
  }
  if (mass(img) == 0.0) img(64, 64) = 1.0;
  return img;
}

// --- 1 ---------------------------------------------------------------------
Outcome mass_conservation() {
  Rng rng(101);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const GrayImage img = random_nonnegative_image(rng);
    const double m = mass(img);
    const Sinogram s = radon_transform(img);
    for (int t = 0; t < kRadonAngles; ++t) {
      double row = 0;
      for (int k = 0; k < kRadonOffsets; ++k) row += s.values(t, k);
      worst = std::max(worst, std::abs(row - m) / m);
    }
  }
  return {worst <= 0.005, "max relative row error " + fmt("%.3g", worst) + " over 50 images"};
}

// --- 2 ---------------------------------------------------------------------
double line_integral(const GrayImage& img, double theta, double b) {
  const SinCos sc = sincos_degrees(theta);
  constexpr double step = 0.005;
  double sum = 0;
  for (double t = -100.0; t <= 100.0; t += step)
    sum += sample_bilinear(img, 64.0 - (b * sc.sin + t * sc.cos), 64.0 + (b * sc.cos - t * sc.sin));
  return sum * step;
}

Outcome linearity_and_oracle() {
  Rng rng(202);
  double worst_linear = 0;
  for (int i = 0; i < 5; ++i) {
    const GrayImage f = random_nonnegative_image(rng), g = random_nonnegative_image(rng);
    const double a = rng.uniform(-3, 3);
    GrayImage h(128, 128);
    for (std::size_t p = 0; p < h.size(); ++p) h.values()[p] = a * f.values()[p] + g.values()[p];
    const Sinogram sf = radon_transform(f), sg = radon_transform(g), sh = radon_transform(h);
    for (std::size_t p = 0; p < sh.values.size(); ++p)
      worst_linear = std::max(worst_linear, std::abs(sh.values.values()[p] -
                                                     (a * sf.values.values()[p] + sg.values.values()[p])));
  }

  double worst_axis = 0, worst_oblique = 0;
  for (int i = 0; i < 5; ++i) {
    GrayImage img(128, 128);
    const int top = 40 + static_cast<int>(rng.uniform_index(44));
    const int left = 40 + static_cast<int>(rng.uniform_index(44));
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) img(top + r, left + c) = rng.uniform(0.05, 1.0);
    const double m = mass(img);
    const Sinogram s = radon_transform(img);
    for (int theta : {90, 180, 30, 45, 120}) {
      double dev = 0;
      for (int k = 0; k < kRadonOffsets; ++k)
        dev = std::max(dev, std::abs(s.values(theta - 1, k) - line_integral(img, theta, Sinogram::offset_of(k))));
      double& worst = theta % 90 == 0 ? worst_axis : worst_oblique;
      worst = std::max(worst, dev / m);
    }
  }
  const bool pass = worst_linear <= 1e-9 && worst_axis <= 1e-3;
  return {pass, "linearity max error " + fmt("%.3g", worst_linear) + ", oracle deviation at 90/180 deg " +
                    fmt("%.3g", worst_axis) + " of mass (oblique angles, informational: " +
                    fmt("%.3g", worst_oblique) + ")"};
}

// --- 3 ---------------------------------------------------------------------
GrayImage rotate_about_origin(const GrayImage& img, double degrees) {
  const SinCos sc = sincos_degrees(degrees);
  GrayImage out(img.rows(), img.cols());
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c) {
      const double x = c - 64.0, y = 64.0 - r;
      out(r, c) = sample_bilinear(img, 64.0 - (-sc.sin * x + sc.cos * y), 64.0 + (sc.cos * x + sc.sin * y));
    }
  return out;
}

int best_angle_shift(const Sinogram& a, const Sinogram& rotated) {
  int best = 0;
  double best_score = -1;
  for (int s = 0; s < kRadonAngles; ++s) {
    double score = 0;
    for (int t = 0; t < kRadonAngles; ++t) {
      int src = t - s;
      const bool flip = src < 0;
      if (flip) src += kRadonAngles;
      for (int k = 0; k < kRadonOffsets; ++k)
        score += rotated.values(t, k) * a.values(src, flip ? kRadonOffsets - 1 - k : k);
    }
    if (score > best_score) best_score = score, best = s;
  }
  return best;
}

Outcome rotation_equivariance() {
  std::vector<GrayImage> images;
  images.push_back(canonicalize(testing::render(testing::handshape(3), 160, 160, {0, 1, 80, 80})).pixels);
  images.push_back(canonicalize(testing::render(testing::handshape(1), 160, 160, {0, 1, 80, 80})).pixels);
  Rng rng(303);
  for (int i = 0; i < 3; ++i) {
    GrayImage img(128, 128);
    for (int k = 0; k < 3; ++k) {
      const double cr = rng.uniform(40, 88), cc = rng.uniform(40, 88), s = rng.uniform(3, 10);
      for (int r = 0; r < 128; ++r)
        for (int c = 0; c < 128; ++c)
          img(r, c) += std::exp(-((r - cr) * (r - cr) + (c - cc) * (c - cc)) / (2 * s * s));
    }
    images.push_back(img);
  }
  bool pass = true;
  std::string shifts;
  for (int delta : {30, 45, 90}) {
    shifts += " d=" + std::to_string(delta) + ":";
    for (const auto& img : images) {
      const int shift = best_angle_shift(radon_transform(img), radon_transform(rotate_about_origin(img, delta)));
      pass = pass && std::abs(shift - delta) <= 1;
      shifts += " " + std::to_string(shift);
    }
  }
  return {pass, "correlation peaks" + shifts};
}

// --- 4 ---------------------------------------------------------------------
Outcome canonicalization_stability() {
  Rng rng(404);
  const auto shape = testing::handshape(3);
  std::vector<BinaryMask> masks;
  double worst_phi = 0;
  for (int i = 0; i < 20; ++i) {
    testing::Placement where;
    where.rotation = 180.0 - rng.uniform(0.0, 360.0);
    where.scale = rng.uniform(0.8, 1.4);
    where.center_row = 100 + rng.uniform(-10, 10);
    where.center_col = 100 + rng.uniform(-10, 10);
    const auto hand = canonicalize(testing::render(shape, 200, 200, where));
    worst_phi = std::max(worst_phi, std::abs(principal_inclination(hand.mask).degrees));
    masks.push_back(hand.mask);
  }
  double worst_iou = 1;
  for (std::size_t i = 0; i < masks.size(); ++i)
    for (std::size_t j = i + 1; j < masks.size(); ++j) worst_iou = std::min(worst_iou, mask_iou(masks[i], masks[j]));
  return {worst_iou >= 0.90 && worst_phi < 2.0,
          "min pairwise IoU " + fmt("%.4f", worst_iou) + ", max |phi| " + fmt("%.3f", worst_phi) + " deg"};
}

// --- 5 ---------------------------------------------------------------------
std::size_t oracle_bmu(const SomGrid& g, const FeatureVector& v) {
  std::size_t best = 0;
  Wide best_d = -1;
  for (std::size_t n = 0; n < g.neuron_count(); ++n) {
    Wide d = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Wide t = Wide(g.weight(n)[i]) - Wide(v[i]);
      d += t * t;
    }
    if (best_d < 0 || d < best_d) best_d = d, best = n;
  }
  return best;
}

Outcome probsom_oracle() {
  Rng rng(505);
  int mismatches = 0;
  double worst_ratio = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = 1 + static_cast<int>(rng.uniform_index(5)), cols = 1 + static_cast<int>(rng.uniform_index(5));
    const std::size_t dim = 1 + rng.uniform_index(8);
    auto vec = [&] {
      FeatureVector v(dim);
      for (double& x : v) x = rng.uniform(-1, 1);
      return v;
    };
    SomGrid grid(rows, cols, dim);
    for (std::size_t n = 0; n < grid.neuron_count(); ++n) {
      const auto w = vec();
      std::copy(w.begin(), w.end(), grid.weight(n).begin());
    }
    std::vector<DescriptorSet> sets;
    std::vector<int> labels;
    const int samples = 1 + static_cast<int>(rng.uniform_index(20));
    for (int s = 0; s < samples; ++s) {
      DescriptorSet d;
      const int count = 1 + static_cast<int>(rng.uniform_index(10));
      for (int k = 0; k < count; ++k) d.vectors.push_back(vec());
      sets.push_back(d);
      labels.push_back(static_cast<int>(rng.uniform_index(kNumClasses)));
    }
    std::vector<LabeledSet> train;
    for (int s = 0; s < samples; ++s) train.push_back({std::cref(sets[s]), labels[s]});
    const ProbSomModel model = weight_neurons(grid, train, DescriptorKind::radon_local);

    std::vector<std::array<long, kNumClasses>> counts(grid.neuron_count());
    for (int s = 0; s < samples; ++s)
      for (const auto& v : sets[s].vectors) ++counts[oracle_bmu(grid, v)][labels[s]];
    for (const auto& p : model.profiles)
      if (p.hit_count > 0) {
        const double sum = std::accumulate(p.ratios.begin(), p.ratios.end(), 0.0);
        worst_ratio = std::max(worst_ratio, std::abs(sum - 1.0));
      }

    DescriptorSet query;
    const int count = 1 + static_cast<int>(rng.uniform_index(10));
    for (int k = 0; k < count; ++k) query.vectors.push_back(vec());
    std::array<Wide, kNumClasses> sums{};
    for (const auto& v : query.vectors) {
      const auto& c = counts[oracle_bmu(grid, v)];
      const long hits = std::accumulate(c.begin(), c.end(), 0L);
      if (hits == 0) continue;
      for (int k = 0; k < kNumClasses; ++k) sums[k] += Wide(static_cast<double>(c[k]) / static_cast<double>(hits));
    }
    std::array<double, kNumClasses> expected{};
    for (int k = 0; k < kNumClasses; ++k) expected[k] = sums[k].convert_to<double>();
    const ClassScores got = classify(model, query);
    if (got.scores != expected || got.ranking != ClassScores::from_scores(expected).ranking) ++mismatches;
  }
  return {mismatches == 0 && worst_ratio <= 1e-9,
          std::to_string(mismatches) + " mismatching models of 100, max |ratio sum - 1| " + fmt("%.3g", worst_ratio)};
}

// --- 6 ---------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const auto dir = testing::scratch_dir("acceptance_determinism");
  testing::write_synthetic_corpus(dir / "img", 4, 16, 606);
  std::string reports[2];
  for (int run = 0; run < 2; ++run) {
    const auto out = dir / ("run" + std::to_string(run));
    std::ostringstream sout, serr;
    const int status = cli::run({"--seed", "7", "run-all", "--manifest", (dir / "img" / "manifest.csv").string(),
                                 "--output-dir", out.string(), "--protocol", "random-cv", "--repetitions", "3"},
                                sout, serr);
    if (status != 0) return {false, "run-all failed: " + serr.str()};
    reports[run] = slurp(out / "report.json") + slurp(out / "folds.csv") + slurp(out / "confusion.csv") +
                   slurp(out / "model.json");
  }
  return {reports[0] == reports[1] && !reports[0].empty(),
          reports[0] == reports[1] ? "reports, fold tables and models byte-identical across two runs"
                                   : "outputs differ between runs"};
}

// --- 7 ---------------------------------------------------------------------
Outcome synthetic_end_to_end() {
  const auto dir = testing::scratch_dir("acceptance_synthetic");
  const Dataset d = testing::write_synthetic_corpus(dir, 4, 10, 707);
  const auto start = std::chrono::steady_clock::now();
  const RunConfig defaults;
  const auto report = run_protocol(d, defaults.pipeline, defaults.protocol);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {report.mean >= 0.90 && seconds < 120.0,
          "random-cv accuracy " + fmt("%.4f", report.mean) + " (std " + fmt("%.4f", report.std_dev) + ", " +
              std::to_string(report.folds.size()) + " repetitions) in " + fmt("%.1f", seconds) + " s"};
}

// --- 8 ---------------------------------------------------------------------
Outcome top_k_fuzz() {
  Rng rng(808);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Prediction> preds(1 + rng.uniform_index(50));
    for (auto& p : preds) {
      std::iota(p.ranking.begin(), p.ranking.end(), 0);
      rng.shuffle(std::span<int>(p.ranking));
      p.true_class = static_cast<int>(rng.uniform_index(kNumClasses));
    }
    double prev = 0;
    for (int k = 1; k <= kNumClasses; ++k) {
      const double a = top_k_accuracy(preds, k);
      if (a < prev) ++violations;
      prev = a;
    }
    if (prev != 1.0) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations over 1000 fuzzed prediction sets"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"radon mass conservation", mass_conservation},
      {"radon linearity and line-integral oracle", linearity_and_oracle},
      {"radon rotation equivariance", rotation_equivariance},
      {"canonicalization stability", canonicalization_stability},
      {"probsom oracle equivalence", probsom_oracle},
      {"determinism", determinism},
      {"synthetic end-to-end accuracy", synthetic_end_to_end},
      {"top-k monotonicity", top_k_fuzz},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << i + 1 << " [" << (o.pass ? "PASS" : "FAIL") << "] " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all property criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
