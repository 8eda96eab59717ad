#include "handshape/descriptor.hpp"

#include <fstream>

#include <json.hpp>

#include "handshape/errors.hpp"

namespace handshape {

using nlohmann::json;

std::string_view to_string(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::radon_local:
      return "radon-local";
    case DescriptorKind::radon_global:
      return "radon-global";
    case DescriptorKind::sift:
      return "sift";
  }
  return "unknown";
}

DescriptorKind parse_descriptor_kind(std::string_view name) {
  if (name == "radon-local") return DescriptorKind::radon_local;
  if (name == "radon-global") return DescriptorKind::radon_global;
  if (name == "sift") return DescriptorKind::sift;
  throw ValidationError("unknown descriptor kind '" + std::string(name) +
                        "' (expected radon-local, radon-global or sift)");
}

void DescriptorSet::validate() const {
  if (vectors.empty()) throw EmptySample("descriptor set is empty");
  const std::size_t dim = vectors.front().size();
  if (dim == 0) throw DimensionError("descriptor vectors have dimension 0");
  for (const auto& v : vectors)
    if (v.size() != dim) throw DimensionError("descriptor vectors differ in dimension");
}

namespace {
constexpr const char* kFormat = "handshape-descriptors";
constexpr int kVersion = 1;
}  // namespace

void write_descriptor_file(const std::filesystem::path& path, const DescriptorFile& file) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write descriptor file: " + path.string());
  out << json{{"format", kFormat},
              {"version", kVersion},
              {"kind", to_string(file.kind)},
              {"dimension", file.dimension},
              {"records", file.records.size()}}
             .dump()
      << '\n';
  for (const auto& rec : file.records) {
    out << json{{"id", rec.id},
                {"class", rec.class_id},
                {"subject", rec.subject_id},
                {"repetition", rec.repetition},
                {"vectors", rec.descriptors.vectors}}
               .dump()
        << '\n';
  }
  if (!out) throw IoError("error while writing " + path.string());
}

DescriptorFile read_descriptor_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open descriptor file: " + path.string());
  DescriptorFile file;
  std::string line;
  long row = 0;
  std::size_t expected = 0;
  try {
    if (!std::getline(in, line)) throw ParseError("empty descriptor file", 1);
    ++row;
    const json header = json::parse(line);
    if (header.at("format") != kFormat) throw ParseError("not a descriptor file", row);
    if (header.at("version") != kVersion)
      throw ParseError("unsupported descriptor file version", row);
    file.kind = parse_descriptor_kind(header.at("kind").get<std::string>());
    file.dimension = header.at("dimension").get<std::size_t>();
    expected = header.at("records").get<std::size_t>();

    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      const json j = json::parse(line);
      DescriptorRecord rec;
      rec.id = j.at("id").get<std::string>();
      rec.class_id = j.at("class").get<int>();
      rec.subject_id = j.at("subject").get<int>();
      rec.repetition = j.at("repetition").get<int>();
      rec.descriptors.kind = file.kind;
      rec.descriptors.vectors = j.at("vectors").get<std::vector<FeatureVector>>();
      rec.descriptors.validate();
      if (rec.descriptors.dimension() != file.dimension)
        throw ParseError("record " + rec.id + " has dimension " +
                             std::to_string(rec.descriptors.dimension()),
                         row);
      file.records.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed descriptor file: ") + e.what(), row);
  } catch (const EmptySample& e) {
    throw ParseError(e.what(), row);
  } catch (const DimensionError& e) {
    throw ParseError(e.what(), row);
  }
  if (file.records.size() != expected)
    throw ParseError("descriptor file truncated: expected " + std::to_string(expected) +
                     " records, found " + std::to_string(file.records.size()));
  return file;
}

void write_descriptor_csv(const std::filesystem::path& path, const DescriptorFile& file) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write descriptor csv: " + path.string());
  out.precision(17);
  out << "id,class,subject,repetition,vector";
  for (std::size_t d = 0; d < file.dimension; ++d) out << ",v" << d;
  out << '\n';
  for (const auto& rec : file.records)
    for (std::size_t v = 0; v < rec.descriptors.vectors.size(); ++v) {
      out << rec.id << ',' << rec.class_id << ',' << rec.subject_id << ',' << rec.repetition
          << ',' << v;
      for (double x : rec.descriptors.vectors[v]) out << ',' << x;
      out << '\n';
    }
}

}  // namespace handshape
