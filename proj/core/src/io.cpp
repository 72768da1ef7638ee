#include "facemap/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <system_error>
#include <vector>

namespace facemap {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts are not supported");
static_assert(sizeof(double) == 8);

namespace {

constexpr std::string_view kEmbeddingMagic = "FMAP-EMB";
constexpr std::string_view kMapMagic = "FMAP-MAT";
constexpr std::uint32_t kFormatVersion = 1;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProtocolError("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

std::vector<std::string_view> split_char(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

bool parse_int(std::string_view s, long long& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_value(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Walks a text buffer line by line, tracking 1-based line numbers.
struct LineReader {
  std::string_view text;
  std::size_t pos = 0;
  std::size_t line_number = 0;

  bool next(std::string_view& line) {
    if (pos >= text.size()) return false;
    const std::size_t eol = text.find('\n', pos);
    const std::size_t end = eol == std::string_view::npos ? text.size() : eol;
    line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_number;
    return true;
  }

  // Next line with content, or false at end of file.
  bool next_nonempty(std::string_view& line) {
    while (next(line)) {
      if (!trim(line).empty()) return true;
    }
    return false;
  }
};

void put_bytes(std::string& out, const void* data, std::size_t n) {
  out.append(static_cast<const char*>(data), n);
}

void put_u32(std::string& out, std::uint32_t v) { put_bytes(out, &v, sizeof v); }
void put_u64(std::string& out, std::uint64_t v) { put_bytes(out, &v, sizeof v); }
void put_i64(std::string& out, std::int64_t v) { put_bytes(out, &v, sizeof v); }
void put_f64(std::string& out, double v) { put_bytes(out, &v, sizeof v); }

void put_string(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

struct Cursor {
  const char* p;
  const char* end;
  std::string what;

  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end - p) < n) {
      throw FormatError("truncated " + what);
    }
  }
  std::uint32_t get_u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    p += 4;
    return v;
  }
  std::uint64_t get_u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, p, 8);
    p += 8;
    return v;
  }
  std::int64_t get_i64() {
    need(8);
    std::int64_t v;
    std::memcpy(&v, p, 8);
    p += 8;
    return v;
  }
  double get_f64() {
    need(8);
    double v;
    std::memcpy(&v, p, 8);
    p += 8;
    return v;
  }
  std::string get_string() {
    const std::uint32_t n = get_u32();
    need(n);
    std::string s(p, n);
    p += n;
    return s;
  }
};

Cursor open_binary(const std::string& content, std::string_view magic, std::string_view kind) {
  Cursor cur{content.data(), content.data() + content.size(), std::string(kind) + " file"};
  cur.need(magic.size());
  if (std::string_view(cur.p, magic.size()) != magic) {
    throw FormatError("not a " + std::string(kind) + " file (bad magic bytes)");
  }
  cur.p += magic.size();
  const std::uint32_t version = cur.get_u32();
  if (version != kFormatVersion) {
    throw FormatError(std::string(kind) + " file has version " + std::to_string(version) +
                      "; this build reads version " + std::to_string(kFormatVersion));
  }
  return cur;
}

bool is_csv(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv";
}

EmbeddingSet read_embeddings_csv(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  LineReader reader{content};
  std::string tag;
  std::string_view line;

  // Leading comment lines; "# system: TAG" carries the system tag.
  std::size_t header_line = 0;
  while (reader.next_nonempty(line)) {
    const std::string_view t = trim(line);
    if (t.empty() || t.front() != '#') {
      header_line = reader.line_number;
      break;
    }
    constexpr std::string_view kSystemPrefix = "# system:";
    if (t.substr(0, kSystemPrefix.size()) == kSystemPrefix) {
      tag = std::string(trim(t.substr(kSystemPrefix.size())));
    }
  }
  if (header_line == 0) throw ProtocolError("no entries in embedding file " + path.string());

  const auto header = split_char(trim(line), ',');
  if (header.size() < 2 || trim(header[0]) != "id") {
    throw ParseError("embedding header must be 'id,v0,...'", header_line);
  }
  const int dim = static_cast<int>(header.size()) - 1;

  EmbeddingSet set(dim, tag);
  Vector v(dim);
  while (reader.next_nonempty(line)) {
    const auto fields = split_char(trim(line), ',');
    if (static_cast<int>(fields.size()) != dim + 1) {
      throw ParseError("row has " + std::to_string(fields.size() - 1) + " values, expected " +
                       std::to_string(dim), reader.line_number);
    }
    for (int i = 0; i < dim; ++i) {
      double x;
      if (!parse_value(fields[i + 1], x)) {
        throw ParseError("non-numeric value '" + std::string(fields[i + 1]) + "'",
                         reader.line_number);
      }
      if (!std::isfinite(x)) {
        throw ParseError("non-finite value in embedding row", reader.line_number);
      }
      v[i] = x;
    }
    set.insert(std::string(trim(fields[0])), v);
  }
  if (set.empty()) throw ProtocolError("no entries in embedding file " + path.string());
  return set;
}

void write_embeddings_csv(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::string out;
  out.reserve(set.size() * (static_cast<std::size_t>(set.dim()) * 20 + 16));
  out += "# system: ";
  out += set.system_tag();
  out += '\n';
  out += "id";
  for (int i = 0; i < set.dim(); ++i) {
    out += ",v";
    out += std::to_string(i);
  }
  out += '\n';
  for (std::size_t r = 0; r < set.size(); ++r) {
    const EntityId& id = set.ids()[r];
    if (id.find_first_of(",\n\r") != std::string::npos) {
      throw ProtocolError("entity id '" + id + "' cannot be written to CSV");
    }
    out += id;
    const Vector& v = set.vector_at(r);
    for (int i = 0; i < set.dim(); ++i) {
      out += ',';
      out += format_double(v[i]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

EmbeddingSet read_embeddings_binary(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  Cursor cur = open_binary(content, kEmbeddingMagic, "embedding");
  const std::string tag = cur.get_string();
  const std::uint32_t dim = cur.get_u32();
  const std::uint64_t count = cur.get_u64();
  if (dim == 0) throw FormatError("embedding file declares dimension 0");
  if (count == 0) throw ProtocolError("no entries in embedding file " + path.string());

  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) ids.push_back(cur.get_string());

  EmbeddingSet set(static_cast<int>(dim), tag);
  Vector v(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    cur.need(static_cast<std::size_t>(dim) * 8);
    std::memcpy(v.data(), cur.p, static_cast<std::size_t>(dim) * 8);
    cur.p += static_cast<std::size_t>(dim) * 8;
    set.insert(ids[i], v);
  }
  return set;
}

void write_embeddings_binary(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::string out;
  out.reserve(16 + set.size() * (static_cast<std::size_t>(set.dim()) * 8 + 24));
  out.append(kEmbeddingMagic);
  put_u32(out, kFormatVersion);
  put_string(out, set.system_tag());
  put_u32(out, static_cast<std::uint32_t>(set.dim()));
  put_u64(out, set.size());
  for (const EntityId& id : set.ids()) put_string(out, id);
  for (std::size_t r = 0; r < set.size(); ++r) {
    const Vector& v = set.vector_at(r);
    put_bytes(out, v.data(), static_cast<std::size_t>(set.dim()) * 8);
  }
  write_file_atomic(path, out);
}

// Splits "name/0042" into the name and the numeric image index.
void split_entity_id(const EntityId& id, std::string& name, long long& index) {
  const std::size_t slash = id.rfind('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == id.size()) {
    throw ProtocolError("entity id '" + id + "' is not in 'name/index' form");
  }
  if (!parse_int(std::string_view(id).substr(slash + 1), index)) {
    throw ProtocolError("entity id '" + id + "' has a non-numeric image index");
  }
  name = id.substr(0, slash);
}

EntityId lfw_entity_id(std::string_view name, long long index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04lld", index);
  return std::string(name) + "/" + buf;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ProtocolError("cannot write file: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ProtocolError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

EmbeddingSet read_embeddings(const std::filesystem::path& path) {
  return is_csv(path) ? read_embeddings_csv(path) : read_embeddings_binary(path);
}

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  if (set.empty()) throw ProtocolError("refusing to write an embedding set with no entries");
  if (is_csv(path)) {
    write_embeddings_csv(set, path);
  } else {
    write_embeddings_binary(set, path);
  }
}

PairProtocol read_pairs_lfw(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  LineReader reader{content};
  std::string_view line;

  if (!reader.next_nonempty(line)) throw ParseError("empty pairs file", 1);
  const auto header = split_whitespace(line);
  long long n_folds = 0;
  long long per_class = 0;
  if (header.size() != 2 || !parse_int(header[0], n_folds) || !parse_int(header[1], per_class) ||
      n_folds < 1 || per_class < 1) {
    throw ParseError("header must be '<n_folds> <pairs_per_class_per_fold>'", reader.line_number);
  }

  std::vector<Fold> folds;
  folds.reserve(static_cast<std::size_t>(n_folds));
  for (long long f = 0; f < n_folds; ++f) {
    Fold fold;
    fold.reserve(static_cast<std::size_t>(2 * per_class));
    for (long long i = 0; i < per_class; ++i) {
      if (!reader.next_nonempty(line)) {
        throw ParseError("unexpected end of file: fold " + std::to_string(f) + " has " +
                         std::to_string(i) + " matched lines, expected " +
                         std::to_string(per_class), reader.line_number + 1);
      }
      const auto tokens = split_whitespace(line);
      long long idx1 = 0;
      long long idx2 = 0;
      if (tokens.size() != 3 || !parse_int(tokens[1], idx1) || !parse_int(tokens[2], idx2)) {
        throw ParseError("expected matched pair 'name idx1 idx2'", reader.line_number);
      }
      fold.push_back({lfw_entity_id(tokens[0], idx1), lfw_entity_id(tokens[0], idx2),
                      PairLabel::kSame});
    }
    for (long long i = 0; i < per_class; ++i) {
      if (!reader.next_nonempty(line)) {
        throw ParseError("unexpected end of file: fold " + std::to_string(f) + " has " +
                         std::to_string(i) + " mismatched lines, expected " +
                         std::to_string(per_class), reader.line_number + 1);
      }
      const auto tokens = split_whitespace(line);
      long long idx1 = 0;
      long long idx2 = 0;
      if (tokens.size() != 4 || !parse_int(tokens[1], idx1) || !parse_int(tokens[3], idx2)) {
        throw ParseError("expected mismatched pair 'name1 idx1 name2 idx2'", reader.line_number);
      }
      fold.push_back({lfw_entity_id(tokens[0], idx1), lfw_entity_id(tokens[2], idx2),
                      PairLabel::kDifferent});
    }
    folds.push_back(std::move(fold));
  }
  if (reader.next_nonempty(line)) {
    throw ParseError("unexpected trailing content after the declared folds", reader.line_number);
  }
  return PairProtocol(std::move(folds));
}

void write_pairs_lfw(const PairProtocol& protocol, const std::filesystem::path& path) {
  // The LFW layout fixes one matched/mismatched count for every fold and
  // lists matched pairs first within a fold.
  std::size_t per_class = 0;
  for (std::size_t f = 0; f < protocol.n_folds(); ++f) {
    std::size_t matched = 0;
    std::size_t mismatched = 0;
    for (const VerificationPair& pair : protocol.folds()[f]) {
      if (pair.label == PairLabel::kSame) {
        ++matched;
      } else {
        ++mismatched;
      }
    }
    if (matched != mismatched) {
      throw ProtocolError("fold " + std::to_string(f) + " has " + std::to_string(matched) +
                          " matched but " + std::to_string(mismatched) +
                          " mismatched pairs; the LFW layout needs equal counts");
    }
    if (f == 0) {
      per_class = matched;
    } else if (matched != per_class) {
      throw ProtocolError("folds have differing pair counts; the LFW layout needs one count");
    }
  }
  if (per_class == 0) throw ProtocolError("cannot write a protocol with empty folds");

  std::string out;
  out += std::to_string(protocol.n_folds());
  out += '\t';
  out += std::to_string(per_class);
  out += '\n';
  std::string name_a;
  std::string name_b;
  long long idx_a = 0;
  long long idx_b = 0;
  for (const Fold& fold : protocol.folds()) {
    for (const bool matched_block : {true, false}) {
      for (const VerificationPair& pair : fold) {
        if ((pair.label == PairLabel::kSame) != matched_block) continue;
        split_entity_id(pair.a, name_a, idx_a);
        split_entity_id(pair.b, name_b, idx_b);
        if (matched_block) {
          if (name_a != name_b) {
            throw ProtocolError("matched pair ('" + pair.a + "', '" + pair.b +
                                "') crosses names; not representable in the LFW layout");
          }
          out += name_a;
          out += '\t';
          out += std::to_string(idx_a);
          out += '\t';
          out += std::to_string(idx_b);
        } else {
          out += name_a;
          out += '\t';
          out += std::to_string(idx_a);
          out += '\t';
          out += name_b;
          out += '\t';
          out += std::to_string(idx_b);
        }
        out += '\n';
      }
    }
  }
  write_file_atomic(path, out);
}

PairProtocol read_pairs_ytf(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  LineReader reader{content};
  std::string_view line;

  std::map<long long, Fold> by_split;
  bool first_content_line = true;
  while (reader.next_nonempty(line)) {
    const auto fields = split_char(trim(line), ',');
    if (first_content_line) {
      first_content_line = false;
      long long probe = 0;
      if (!fields.empty() && !parse_int(fields[0], probe)) continue;  // header line
    }
    if (fields.size() != 5) {
      throw ParseError("expected 5 comma-separated fields "
                       "'split, pair, id_a, id_b, label'", reader.line_number);
    }
    long long split = 0;
    long long pair_index = 0;
    if (!parse_int(fields[0], split) || !parse_int(fields[1], pair_index)) {
      throw ParseError("split and pair indices must be integers", reader.line_number);
    }
    const std::string_view id_a = trim(fields[2]);
    const std::string_view id_b = trim(fields[3]);
    if (id_a.empty() || id_b.empty()) {
      throw ParseError("empty video id", reader.line_number);
    }
    const std::string_view label = trim(fields[4]);
    if (label != "0" && label != "1") {
      throw ParseError("label must be 1 (same) or 0 (different), got '" + std::string(label) +
                       "'", reader.line_number);
    }
    by_split[split].push_back({std::string(id_a), std::string(id_b),
                               label == "1" ? PairLabel::kSame : PairLabel::kDifferent});
  }
  if (by_split.empty()) throw ProtocolError("no pairs in file " + path.string());
  const long long lowest = by_split.begin()->first;
  const long long highest = by_split.rbegin()->first;
  if (highest - lowest + 1 != static_cast<long long>(by_split.size())) {
    throw ParseError("split indices must form a contiguous range; found " +
                     std::to_string(by_split.size()) + " distinct values in [" +
                     std::to_string(lowest) + ", " + std::to_string(highest) + "]");
  }
  std::vector<Fold> folds;
  folds.reserve(by_split.size());
  for (auto& [split, fold] : by_split) folds.push_back(std::move(fold));
  return PairProtocol(std::move(folds));
}

PairProtocol read_pairs(const std::filesystem::path& path, PairFileFormat format) {
  return format == PairFileFormat::kLfw ? read_pairs_lfw(path) : read_pairs_ytf(path);
}

LinearMap read_map(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  Cursor cur = open_binary(content, kMapMagic, "linear map");
  LinearMap map;
  map.lambda = cur.get_f64();
  map.n_pairs_used = cur.get_i64();
  map.source_tag = cur.get_string();
  map.target_tag = cur.get_string();
  const std::uint32_t rows = cur.get_u32();
  const std::uint32_t cols = cur.get_u32();
  if (rows == 0 || cols == 0) throw FormatError("linear map file declares an empty matrix");
  map.matrix.resize(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) map.matrix(r, c) = cur.get_f64();
  }
  map.validate();
  return map;
}

void write_map(const LinearMap& map, const std::filesystem::path& path) {
  map.validate();
  std::string out;
  out.reserve(64 + static_cast<std::size_t>(map.matrix.size()) * 8);
  out.append(kMapMagic);
  put_u32(out, kFormatVersion);
  put_f64(out, map.lambda);
  put_i64(out, map.n_pairs_used);
  put_string(out, map.source_tag);
  put_string(out, map.target_tag);
  put_u32(out, static_cast<std::uint32_t>(map.matrix.rows()));
  put_u32(out, static_cast<std::uint32_t>(map.matrix.cols()));
  for (Eigen::Index r = 0; r < map.matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < map.matrix.cols(); ++c) put_f64(out, map.matrix(r, c));
  }
  write_file_atomic(path, out);
}

nlohmann::json to_json(const EvalConfig& config) {
  nlohmann::json j;
  j["lambda"] = config.lambda;
  switch (config.mapping_mode) {
    case MappingMode::kFitted:
      j["mapping_mode"] = "fitted";
      break;
    case MappingMode::kIdentity:
      j["mapping_mode"] = "identity";
      break;
    case MappingMode::kTruncatedRank:
      j["mapping_mode"] = "truncated_rank";
      j["rank"] = config.rank;
      break;
  }
  if (config.pairs_subsample) {
    j["pairs_subsample"] = {{"count", config.pairs_subsample->count},
                            {"seed", config.pairs_subsample->seed}};
  } else {
    j["pairs_subsample"] = nullptr;
  }
  j["normalize_before_fit"] = config.normalize_before_fit;
  return j;
}

EvalConfig eval_config_from_json(const nlohmann::json& j) {
  EvalConfig config;
  config.lambda = j.at("lambda").get<double>();
  const std::string mode = j.at("mapping_mode").get<std::string>();
  if (mode == "fitted") {
    config.mapping_mode = MappingMode::kFitted;
  } else if (mode == "identity") {
    config.mapping_mode = MappingMode::kIdentity;
  } else if (mode == "truncated_rank") {
    config.mapping_mode = MappingMode::kTruncatedRank;
    config.rank = j.at("rank").get<int>();
  } else {
    throw FormatError("unknown mapping mode '" + mode + "'");
  }
  if (!j.at("pairs_subsample").is_null()) {
    config.pairs_subsample =
        SubsampleSpec{j.at("pairs_subsample").at("count").get<std::int64_t>(),
                      j.at("pairs_subsample").at("seed").get<std::uint64_t>()};
  }
  config.normalize_before_fit = j.at("normalize_before_fit").get<bool>();
  return config;
}

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const FoldResult& fr : report.per_fold) {
    folds.push_back({{"fold_index", fr.fold_index},
                     {"threshold", fr.threshold},
                     {"train_accuracy", fr.train_accuracy},
                     {"test_accuracy", fr.test_accuracy}});
  }
  return nlohmann::json{{"format", "facemap-report"},
                        {"version", kFormatVersion},
                        {"source_tag", report.source_tag},
                        {"target_tag", report.target_tag},
                        {"config", to_json(report.config)},
                        {"per_fold", std::move(folds)},
                        {"mean_accuracy", report.mean_accuracy},
                        {"std_accuracy", report.std_accuracy},
                        {"warnings", report.warnings}};
}

namespace {

void check_header(const nlohmann::json& j, std::string_view format) {
  if (!j.is_object() || j.value("format", std::string()) != format) {
    throw FormatError("not a " + std::string(format) + " document");
  }
  const std::uint32_t version = j.value("version", 0u);
  if (version != kFormatVersion) {
    throw FormatError(std::string(format) + " has version " + std::to_string(version) +
                      "; this build reads version " + std::to_string(kFormatVersion));
  }
}

nlohmann::json parse_json_file(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  try {
    return nlohmann::json::parse(content);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON in ") + path.string() + ": " + e.what());
  }
}

}  // namespace

EvaluationReport evaluation_report_from_json(const nlohmann::json& j) {
  check_header(j, "facemap-report");
  EvaluationReport report;
  report.source_tag = j.at("source_tag").get<std::string>();
  report.target_tag = j.at("target_tag").get<std::string>();
  report.config = eval_config_from_json(j.at("config"));
  for (const nlohmann::json& fold : j.at("per_fold")) {
    report.per_fold.push_back({fold.at("fold_index").get<int>(),
                               fold.at("threshold").get<double>(),
                               fold.at("train_accuracy").get<double>(),
                               fold.at("test_accuracy").get<double>()});
  }
  report.mean_accuracy = j.at("mean_accuracy").get<double>();
  report.std_accuracy = j.at("std_accuracy").get<double>();
  report.warnings = j.at("warnings").get<std::vector<std::string>>();
  return report;
}

void write_report(const EvaluationReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, to_json(report).dump(2) + "\n");
}

EvaluationReport read_report(const std::filesystem::path& path) {
  return evaluation_report_from_json(parse_json_file(path));
}

void write_sensitivity_report(const SensitivityCurve& curve, const EvalConfig& config,
                              const std::string& source_tag, const std::string& target_tag,
                              const std::filesystem::path& path) {
  nlohmann::json points = nlohmann::json::array();
  for (const SensitivityPoint& point : curve.points) {
    points.push_back({{"p", point.p}, {"mean_accuracy", point.mean_accuracy}});
  }
  nlohmann::json j{{"format", "facemap-sensitivity"},
                   {"version", kFormatVersion},
                   {"source_tag", source_tag},
                   {"target_tag", target_tag},
                   {"config", to_json(config)},
                   {"drop_threshold", curve.drop_threshold},
                   {"full_accuracy", curve.full_accuracy},
                   {"points", std::move(points)},
                   {"warnings", curve.warnings}};
  if (curve.p_for_drop) {
    j["p_for_drop"] = *curve.p_for_drop;
  } else {
    j["p_for_drop"] = nullptr;
  }
  write_file_atomic(path, j.dump(2) + "\n");
}

void write_sensitivity_csv(const SensitivityCurve& curve, const std::filesystem::path& path) {
  std::string out = "p,accuracy\n";
  for (const SensitivityPoint& point : curve.points) {
    out += std::to_string(point.p);
    out += ',';
    out += format_double(point.mean_accuracy);
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_rank_report(const RankCurve& curve, const EvalConfig& config,
                       const std::string& source_tag, const std::string& target_tag,
                       const std::filesystem::path& path) {
  nlohmann::json points = nlohmann::json::array();
  for (const RankPoint& point : curve.points) {
    points.push_back({{"k", point.k}, {"mean_accuracy", point.mean_accuracy}});
  }
  nlohmann::json variance = nlohmann::json::array();
  for (const auto& [k, value] : curve.variance_points) {
    variance.push_back({{"k", k}, {"value", value}});
  }
  const nlohmann::json j{{"format", "facemap-rank"},
                         {"version", kFormatVersion},
                         {"source_tag", source_tag},
                         {"target_tag", target_tag},
                         {"config", to_json(config)},
                         {"points", std::move(points)},
                         {"variance_explained", std::move(variance)}};
  write_file_atomic(path, j.dump(2) + "\n");
}

void write_rank_csv(const RankCurve& curve, const std::filesystem::path& path) {
  if (curve.points.size() != curve.variance_points.size()) {
    throw ProtocolError("rank curve has mismatched accuracy and variance point counts");
  }
  std::string out = "k,accuracy,variance_explained\n";
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    out += std::to_string(curve.points[i].k);
    out += ',';
    out += format_double(curve.points[i].mean_accuracy);
    out += ',';
    out += format_double(curve.variance_points[i].second);
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_cross_report(const CrossMatrix& matrix, const EvalConfig& config,
                        const std::filesystem::path& path) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& row : matrix.cells) {
    nlohmann::json json_row = nlohmann::json::array();
    for (const CrossCell& cell : row) {
      nlohmann::json c{{"report", to_json(cell.report)}};
      if (cell.identity_baseline) {
        c["identity_baseline"] = to_json(*cell.identity_baseline);
      } else {
        c["identity_baseline"] = nullptr;
      }
      json_row.push_back(std::move(c));
    }
    cells.push_back(std::move(json_row));
  }
  const nlohmann::json j{{"format", "facemap-cross"},
                         {"version", kFormatVersion},
                         {"config", to_json(config)},
                         {"systems", matrix.system_tags},
                         {"cells", std::move(cells)}};
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace facemap
