#include "handshape/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

#include "handshape/errors.hpp"

namespace handshape {

std::string SampleRecord::id() const {
  char buf[48];
  std::snprintf(buf, sizeof buf, "c%02d_s%02d_r%d", class_id, subject_id, repetition);
  return buf;
}

std::vector<std::string> Dataset::default_class_names() {
  std::vector<std::string> names;
  for (int c = 0; c < kNumClasses; ++c) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "class_%02d", c);
    names.emplace_back(buf);
  }
  return names;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Comma separated fields; double-quoted fields may contain commas and "".
std::vector<std::string> split_csv(const std::string& line, long row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) throw ParseError("unterminated quote", row);
  fields.push_back(trim(cur));
  return fields;
}

int parse_int(const std::string& field, const char* name, long row) {
  int value = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || field.empty())
    throw ParseError(std::string("field '") + name + "' is not an integer: '" + field + "'", row);
  return value;
}

void check_range(int value, int upper, const char* name, long row) {
  if (value < 0 || value >= upper)
    throw ValidationError("row " + std::to_string(row) + ": " + name + " " +
                          std::to_string(value) + " outside [0, " + std::to_string(upper) + ")");
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

Dataset load_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest: " + manifest_path.string());

  Dataset dataset;
  const auto base = manifest_path.parent_path();
  std::string line;
  long row = 0;
  bool header_seen = false;
  std::set<std::tuple<int, int, int>> seen;

  while (std::getline(in, line)) {
    ++row;
    if (row == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split_csv(line, row);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"path", "class", "subject", "repetition"})
        throw ParseError("expected header 'path,class,subject,repetition'", row);
      header_seen = true;
      continue;
    }
    if (fields.size() != 4)
      throw ParseError("expected 4 fields, found " + std::to_string(fields.size()), row);
    if (fields[0].empty()) throw ParseError("empty path", row);

    SampleRecord rec;
    std::filesystem::path p(fields[0]);
    rec.image_path = p.is_absolute() ? p : base / p;
    rec.class_id = parse_int(fields[1], "class", row);
    rec.subject_id = parse_int(fields[2], "subject", row);
    rec.repetition = parse_int(fields[3], "repetition", row);
    check_range(rec.class_id, kNumClasses, "class", row);
    check_range(rec.subject_id, kNumSubjects, "subject", row);
    check_range(rec.repetition, kNumRepetitions, "repetition", row);
    if (!seen.emplace(rec.class_id, rec.subject_id, rec.repetition).second)
      throw ValidationError("row " + std::to_string(row) + ": duplicate sample " + rec.id());
    if (!std::filesystem::is_regular_file(rec.image_path))
      throw ValidationError("row " + std::to_string(row) + ": image not found: " + rec.image_path.string());
    dataset.records.push_back(std::move(rec));
  }
  if (!header_seen) throw ParseError("missing header", 1);
  return dataset;
}

void write_manifest(const std::filesystem::path& manifest_path, const Dataset& dataset) {
  if (manifest_path.has_parent_path())
    std::filesystem::create_directories(manifest_path.parent_path());
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write manifest: " + manifest_path.string());
  out << "path,class,subject,repetition\n";
  for (const auto& r : dataset.records)
    out << quote_if_needed(r.image_path.generic_string()) << ',' << r.class_id << ','
        << r.subject_id << ',' << r.repetition << '\n';
}

Dataset dataset_from_directory(const std::filesystem::path& dir, bool one_based) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  static const std::regex pattern(R"((\d+)_(\d+)_(\d+)\.(png|PNG|bmp|BMP|tif|tiff|jpg|jpeg))");
  const int offset = one_based ? 1 : 0;
  Dataset dataset;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, pattern)) continue;
    SampleRecord rec;
    rec.image_path = entry.path().filename();
    rec.class_id = std::stoi(m[1]) - offset;
    rec.subject_id = std::stoi(m[2]) - offset;
    rec.repetition = std::stoi(m[3]) - offset;
    check_range(rec.class_id, kNumClasses, "class", -1);
    check_range(rec.subject_id, kNumSubjects, "subject", -1);
    check_range(rec.repetition, kNumRepetitions, "repetition", -1);
    dataset.records.push_back(std::move(rec));
  }
  std::sort(dataset.records.begin(), dataset.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.class_id, a.subject_id, a.repetition) <
           std::tie(b.class_id, b.subject_id, b.repetition);
  });
  return dataset;
}

void GloveFilterConfig::validate() const {
  auto hue_ok = [](double h) { return std::isfinite(h) && h >= 0.0 && h < 360.0; };
  auto frac_ok = [](double f) { return std::isfinite(f) && f >= 0.0 && f <= 1.0; };
  if (!hue_ok(hue_lo) || !hue_ok(hue_hi))
    throw ValidationError("glove hue window endpoints must lie in [0, 360)");
  if (!frac_ok(min_saturation) || !frac_ok(min_value))
    throw ValidationError("glove saturation/value thresholds must lie in [0, 1]");
}

Hsv to_hsv(Rgb p) {
  const double r = p.r / 255.0, g = p.g / 255.0, b = p.b / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv hsv;
  hsv.value = mx;
  hsv.saturation = mx > 0.0 ? delta / mx : 0.0;
  if (delta > 0.0) {
    double h;
    if (mx == r)
      h = 60.0 * std::fmod((g - b) / delta, 6.0);
    else if (mx == g)
      h = 60.0 * ((b - r) / delta + 2.0);
    else
      h = 60.0 * ((r - g) / delta + 4.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    hsv.hue = h;
  }
  return hsv;
}

bool glove_color(Rgb p, const GloveFilterConfig& config) {
  const Hsv hsv = to_hsv(p);
  const bool in_hue = config.hue_lo <= config.hue_hi
                          ? (hsv.hue >= config.hue_lo && hsv.hue <= config.hue_hi)
                          : (hsv.hue >= config.hue_lo || hsv.hue <= config.hue_hi);
  return in_hue && hsv.saturation >= config.min_saturation && hsv.value >= config.min_value;
}

double luminance(Rgb p) { return (0.299 * p.r + 0.587 * p.g + 0.114 * p.b) / 255.0; }

SegmentedImage segment_glove(const RgbImage& rgb, const GloveFilterConfig& config) {
  if (rgb.empty()) throw ValidationError("segment_glove: empty image");
  config.validate();
  SegmentedImage seg{GrayImage(rgb.rows(), rgb.cols()), BinaryMask(rgb.rows(), rgb.cols())};
  std::size_t kept = 0;
  for (int r = 0; r < rgb.rows(); ++r)
    for (int c = 0; c < rgb.cols(); ++c)
      if (glove_color(rgb(r, c), config)) {
        seg.mask(r, c) = 1;
        seg.pixels(r, c) = luminance(rgb(r, c));
        ++kept;
      }
  if (kept == 0) throw SegmentationEmpty("no pixel matches the glove color window");
  return seg;
}

SegmentedImage segment_black_background(const RgbImage& rgb, int black_level) {
  if (rgb.empty()) throw ValidationError("segment_black_background: empty image");
  SegmentedImage seg{GrayImage(rgb.rows(), rgb.cols()), BinaryMask(rgb.rows(), rgb.cols())};
  std::size_t kept = 0;
  for (int r = 0; r < rgb.rows(); ++r)
    for (int c = 0; c < rgb.cols(); ++c) {
      const Rgb p = rgb(r, c);
      if (std::max({p.r, p.g, p.b}) > black_level) {
        seg.mask(r, c) = 1;
        seg.pixels(r, c) = luminance(p);
        ++kept;
      }
    }
  if (kept == 0) throw SegmentationEmpty("image is entirely black");
  return seg;
}

bool has_black_background(const RgbImage& rgb, int black_level) {
  auto dark = [&](int r, int c) {
    const Rgb p = rgb(r, c);
    return std::max({p.r, p.g, p.b}) <= black_level;
  };
  for (int c = 0; c < rgb.cols(); ++c)
    if (!dark(0, c) || !dark(rgb.rows() - 1, c)) return false;
  for (int r = 0; r < rgb.rows(); ++r)
    if (!dark(r, 0) || !dark(r, rgb.cols() - 1)) return false;
  return !rgb.empty();
}

}  // namespace handshape
