#include <bit>
#include <cstring>
#include <fstream>

#include "rarec/error.hpp"
#include "rarec/retrieval.hpp"

namespace rarec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  auto parsed = json::parse(in, nullptr, false);
  if (parsed.is_discarded()) throw ValidationError("malformed JSON in " + path.string());
  return parsed;
}

IndexManifest manifest_from_json(const json& j) {
  try {
    IndexManifest m;
    m.provider_id = j.at("provider_id").get<std::string>();
    m.dim = j.at("dim").get<std::size_t>();
    m.doc_count = j.at("doc_count").get<std::size_t>();
    m.normalized = j.at("normalized").get<bool>();
    m.build_timestamp = j.value("build_timestamp", std::string());
    m.default_m = j.value("m", 5);
    m.default_k = j.value("k", 2);
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid manifest.json: ") + e.what());
  }
}

}  // namespace

nlohmann::json to_json(const IndexManifest& m) {
  return {{"provider_id", m.provider_id}, {"dim", m.dim},
          {"doc_count", m.doc_count},     {"normalized", m.normalized},
          {"build_timestamp", m.build_timestamp}, {"m", m.default_m},
          {"k", m.default_k}};
}

void save_index(const ReviewIndex& index, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "manifest.json", to_json(index.manifest()).dump(2) + "\n");

  {
    std::ofstream out(dir / "vectors.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + (dir / "vectors.bin").string());
    for (float v : index.vectors()) {
      std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }

  std::string docs;
  for (const auto& row : index.rows()) {
    docs += json{{"doc_id", row.doc_id}, {"item_id", row.item_id}, {"kind", to_string(row.kind)}, {"text", row.text}}
                .dump();
    docs += '\n';
  }
  write_text(dir / "docs.jsonl", docs);

  const auto partitions_path = dir / "partitions.json";
  if (index.has_partitions()) {
    const auto& p = index.partitions();
    json centroids = json::array();
    for (std::size_t c = 0; c < p.count; ++c) {
      centroids.push_back(std::vector<float>(p.centroids.begin() + static_cast<std::ptrdiff_t>(c * index.dim()),
                                             p.centroids.begin() + static_cast<std::ptrdiff_t>((c + 1) * index.dim())));
    }
    write_text(partitions_path, json{{"count", p.count}, {"centroids", centroids}, {"assignment", p.assignment}}.dump() + "\n");
  } else if (fs::exists(partitions_path)) {
    fs::remove(partitions_path);
  }
}

ReviewIndex load_index(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("index directory " + dir.string() + " does not exist");
  auto manifest = manifest_from_json(read_json_file(dir / "manifest.json"));

  std::vector<IndexRow> rows;
  {
    std::ifstream in(dir / "docs.jsonl", std::ios::binary);
    if (!in) throw ValidationError("cannot open " + (dir / "docs.jsonl").string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw ValidationError("malformed docs.jsonl line " + std::to_string(line_no));
      }
      try {
        rows.push_back({j.at("doc_id").get<std::string>(), j.at("item_id").get<std::string>(),
                        doc_kind_from_string(j.at("kind").get<std::string>()), j.at("text").get<std::string>()});
      } catch (const json::exception& e) {
        throw ValidationError("docs.jsonl line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  std::vector<float> vectors;
  {
    const auto path = dir / "vectors.bin";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    const auto bytes = fs::file_size(path);
    if (bytes != manifest.doc_count * manifest.dim * sizeof(float)) {
      throw ValidationError("vectors.bin has " + std::to_string(bytes) + " bytes, manifest implies " +
                            std::to_string(manifest.doc_count * manifest.dim * sizeof(float)));
    }
    vectors.resize(bytes / sizeof(float));
    for (auto& v : vectors) {
      std::uint32_t bits = 0;
      in.read(reinterpret_cast<char*>(&bits), sizeof bits);
      v = std::bit_cast<float>(to_little_endian(bits));
    }
    if (!in) throw ValidationError("short read on " + path.string());
  }

  std::optional<PartitionLayout> layout;
  if (fs::exists(dir / "partitions.json")) {
    auto j = read_json_file(dir / "partitions.json");
    try {
      PartitionLayout p;
      p.count = j.at("count").get<std::size_t>();
      for (const auto& c : j.at("centroids")) {
        auto values = c.get<std::vector<float>>();
        if (values.size() != manifest.dim) throw ValidationError("partition centroid has wrong dim");
        p.centroids.insert(p.centroids.end(), values.begin(), values.end());
      }
      p.assignment = j.at("assignment").get<std::vector<std::uint32_t>>();
      layout = std::move(p);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("invalid partitions.json: ") + e.what());
    }
  }
  return ReviewIndex(std::move(manifest), std::move(rows), std::move(vectors), std::move(layout));
}

}  // namespace rarec
