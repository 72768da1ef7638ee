#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "facemap/io.hpp"
#include "facemap/protocol.hpp"
#include "facemap/rng.hpp"
#include "test_support.hpp"

using namespace facemap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("facemap-io-test-" + std::to_string(Rng(std::random_device{}()).next_u64() % 100000000));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

EmbeddingSet random_set(std::uint64_t seed, int entries, int dim, const std::string& tag) {
  Rng rng(seed);
  EmbeddingSet set(dim, tag);
  for (int e = 0; e < entries; ++e) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.next_normal();
    set.insert("person_" + std::to_string(e) + "/" + std::to_string(e % 7 + 1), v);
  }
  return set;
}

bool sets_equal_exact(const EmbeddingSet& a, const EmbeddingSet& b) {
  if (a.dim() != b.dim() || a.size() != b.size() || a.system_tag() != b.system_tag()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.ids()[i] != b.ids()[i]) return false;
    if ((a.vector_at(i).array() != b.vector_at(i).array()).any()) return false;
  }
  return true;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("embedding CSV round trip is value-exact") {
  TempDir dir;
  const EmbeddingSet original = random_set(1, 20, 7, "Model-X");
  const fs::path file = dir.path / "emb.csv";
  write_embeddings(original, file);
  CHECK(sets_equal_exact(read_embeddings(file), original));

  // Deterministic bytes on rewrite.
  const std::string first = slurp(file);
  write_embeddings(original, file);
  CHECK(slurp(file) == first);
}

TEST_CASE("embedding binary round trip is bit-exact") {
  TempDir dir;
  const EmbeddingSet original = random_set(2, 15, 9, "Model-Y");
  const fs::path file = dir.path / "emb.bin";
  write_embeddings(original, file);
  CHECK(sets_equal_exact(read_embeddings(file), original));
}

TEST_CASE("embedding CSV parse errors carry line numbers") {
  TempDir dir;
  const fs::path file = dir.path / "bad.csv";

  spit(file, "# system: t\nid,v0,v1,v2,v3\nrow1,1,2,3\n");
  CHECK_THROWS_WITH_AS(read_embeddings(file), doctest::Contains("line 3"), ParseError);

  spit(file, "id,v0,v1\nrow1,1,oops\n");
  CHECK_THROWS_WITH_AS(read_embeddings(file), doctest::Contains("non-numeric"), ParseError);

  spit(file, "id,v0,v1\nrow1,1,2\nrow1,3,4\n");
  CHECK_THROWS_WITH_AS(read_embeddings(file), doctest::Contains("duplicate"), ProtocolError);

  spit(file, "");
  CHECK_THROWS_WITH_AS(read_embeddings(file), doctest::Contains("no entries"), ProtocolError);

  spit(file, "id,v0,v1\n");
  CHECK_THROWS_AS(read_embeddings(file), ProtocolError);

  const EmbeddingSet empty(4, "empty");
  CHECK_THROWS_AS(write_embeddings(empty, dir.path / "empty.csv"), ProtocolError);
}

TEST_CASE("LFW pairs reader handles the documented layout") {
  TempDir dir;
  const fs::path file = dir.path / "pairs.txt";
  spit(file,
       "2\t2\n"
       "Alice 1 3\n"
       "Bob 2 4\n"
       "Alice 1 Carol 2\n"
       "Bob 1 Dave 7\n"
       "Carol 5 6\n"
       "Dave 1 2\n"
       "Alice 2 Bob 3\n"
       "Carol 1 Dave 3\n");
  const PairProtocol protocol = read_pairs_lfw(file);
  CHECK(protocol.n_folds() == 2);
  CHECK(protocol.total_pairs() == 8);
  const VerificationPair& first = protocol.folds()[0][0];
  CHECK(first.a == "Alice/0001");
  CHECK(first.b == "Alice/0003");
  CHECK(first.label == PairLabel::kSame);
  const VerificationPair& third = protocol.folds()[0][2];
  CHECK(third.a == "Alice/0001");
  CHECK(third.b == "Carol/0002");
  CHECK(third.label == PairLabel::kDifferent);
}

TEST_CASE("LFW pairs reader rejects malformed files") {
  TempDir dir;
  const fs::path file = dir.path / "pairs.txt";

  spit(file, "nonsense\n");
  CHECK_THROWS_AS(read_pairs_lfw(file), ParseError);

  // A fold promising 2 matched lines but delivering 1 fails on the short line.
  spit(file,
       "2 2\n"
       "Alice 1 3\n"
       "Alice 1 Carol 2\n");
  CHECK_THROWS_WITH_AS(read_pairs_lfw(file), doctest::Contains("line 3"), ParseError);

  spit(file,
       "2 1\n"
       "Alice 1 3\n"
       "Alice 1 Carol 2\n"
       "Bob 1 2\n"
       "Bob 1 Carol 2\n"
       "trailing junk here ok?\n");
  CHECK_THROWS_WITH_AS(read_pairs_lfw(file), doctest::Contains("trailing"), ParseError);

  spit(file, "");
  CHECK_THROWS_AS(read_pairs_lfw(file), ParseError);
}

TEST_CASE("LFW pairs writer round-trips generated protocols") {
  TempDir dir;
  const auto fixture = testsupport::small_world();
  const fs::path file = dir.path / "pairs.txt";
  write_pairs_lfw(fixture.protocol, file);
  const PairProtocol loaded = read_pairs_lfw(file);

  REQUIRE(loaded.n_folds() == fixture.protocol.n_folds());
  for (std::size_t f = 0; f < loaded.n_folds(); ++f) {
    REQUIRE(loaded.folds()[f].size() == fixture.protocol.folds()[f].size());
    for (std::size_t i = 0; i < loaded.folds()[f].size(); ++i) {
      CHECK(loaded.folds()[f][i].a == fixture.protocol.folds()[f][i].a);
      CHECK(loaded.folds()[f][i].b == fixture.protocol.folds()[f][i].b);
      CHECK(loaded.folds()[f][i].label == fixture.protocol.folds()[f][i].label);
    }
  }
}

TEST_CASE("YTF pairs reader handles the split layout") {
  TempDir dir;
  const fs::path file = dir.path / "pairs.csv";
  spit(file,
       "split, pair, first, second, same\n"
       "1, 1, alice/2, alice/4, 1\n"
       "1, 2, bob/1, carol/3, 0\n"
       "2, 3, dave/1, dave/2, 1\n"
       "2, 4, carol/2, bob/2, 0\n");
  const PairProtocol protocol = read_pairs_ytf(file);
  CHECK(protocol.n_folds() == 2);
  CHECK(protocol.folds()[0][0].a == "alice/2");
  CHECK(protocol.folds()[0][0].label == PairLabel::kSame);
  CHECK(protocol.folds()[1][1].label == PairLabel::kDifferent);

  spit(file, "1, 1, a/1, b/1\n");
  CHECK_THROWS_AS(read_pairs_ytf(file), ParseError);

  spit(file,
       "1, 1, a/1, a/2, 1\n"
       "3, 2, b/1, c/1, 0\n");
  CHECK_THROWS_WITH_AS(read_pairs_ytf(file), doctest::Contains("contiguous"), ParseError);

  spit(file, "1, 1, a/1, a/2, 2\n");
  CHECK_THROWS_AS(read_pairs_ytf(file), ParseError);
}

TEST_CASE("linear map binary round trip is bit-exact") {
  TempDir dir;
  Rng rng(33);
  LinearMap map;
  map.matrix = Matrix(5, 3);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 3; ++c) map.matrix(r, c) = rng.next_normal();
  }
  map.lambda = 0.125;
  map.n_pairs_used = 271;
  map.source_tag = "src";
  map.target_tag = "tgt";

  const fs::path file = dir.path / "map.bin";
  write_map(map, file);
  const LinearMap loaded = read_map(file);
  CHECK((loaded.matrix.array() == map.matrix.array()).all());
  CHECK(loaded.lambda == map.lambda);
  CHECK(loaded.n_pairs_used == map.n_pairs_used);
  CHECK(loaded.source_tag == map.source_tag);
  CHECK(loaded.target_tag == map.target_tag);
}

TEST_CASE("linear map reader rejects corrupted headers") {
  TempDir dir;
  Rng rng(34);
  LinearMap map;
  map.matrix = Matrix::Identity(3, 3);
  const fs::path file = dir.path / "map.bin";
  write_map(map, file);

  std::string bytes = slurp(file);
  std::string corrupted = bytes;
  corrupted[0] = 'X';
  spit(file, corrupted);
  CHECK_THROWS_WITH_AS(read_map(file), doctest::Contains("magic"), FormatError);

  std::string wrong_version = bytes;
  wrong_version[8] = 42;  // version u32 follows the 8-byte magic
  spit(file, wrong_version);
  CHECK_THROWS_WITH_AS(read_map(file), doctest::Contains("version"), FormatError);

  spit(file, bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_WITH_AS(read_map(file), doctest::Contains("truncated"), FormatError);
}

TEST_CASE("evaluation report JSON round trip") {
  TempDir dir;
  const auto fixture = testsupport::small_world();
  EvalConfig config;
  config.lambda = 2.5;
  config.pairs_subsample = SubsampleSpec{40, 987654321};
  const EvaluationReport report =
      evaluate(fixture.systems[0], fixture.systems[1], fixture.protocol, config);

  const fs::path file = dir.path / "report.json";
  write_report(report, file);
  const EvaluationReport loaded = read_report(file);

  CHECK(loaded.source_tag == report.source_tag);
  CHECK(loaded.target_tag == report.target_tag);
  CHECK(loaded.mean_accuracy == report.mean_accuracy);
  CHECK(loaded.std_accuracy == report.std_accuracy);
  REQUIRE(loaded.per_fold.size() == report.per_fold.size());
  for (std::size_t f = 0; f < report.per_fold.size(); ++f) {
    CHECK(loaded.per_fold[f].fold_index == report.per_fold[f].fold_index);
    CHECK(loaded.per_fold[f].threshold == report.per_fold[f].threshold);
    CHECK(loaded.per_fold[f].train_accuracy == report.per_fold[f].train_accuracy);
    CHECK(loaded.per_fold[f].test_accuracy == report.per_fold[f].test_accuracy);
  }
  CHECK(loaded.config.lambda == report.config.lambda);
  CHECK(loaded.config.mapping_mode == report.config.mapping_mode);
  REQUIRE(loaded.config.pairs_subsample.has_value());
  CHECK(loaded.config.pairs_subsample->count == 40);
  CHECK(loaded.config.pairs_subsample->seed == 987654321);

  // Reports with the wrong format or version are refused.
  spit(file, R"({"format":"something-else","version":1})");
  CHECK_THROWS_AS(read_report(file), FormatError);
  spit(file, R"({"format":"facemap-report","version":9})");
  CHECK_THROWS_WITH_AS(read_report(file), doctest::Contains("version"), FormatError);
  spit(file, "not json at all {");
  CHECK_THROWS_AS(read_report(file), ParseError);
}

TEST_CASE("atomic writes leave no temp file behind") {
  TempDir dir;
  const fs::path file = dir.path / "nested" / "out.txt";
  write_file_atomic(file, "payload");
  CHECK(slurp(file) == "payload");
  CHECK_FALSE(fs::exists(file.string() + ".tmp"));
}

TEST_CASE("curve and cross writers produce plottable files") {
  TempDir dir;
  SensitivityCurve curve;
  curve.points = {{1, 0.5}, {10, 0.875}, {100, 0.9375}};
  curve.full_accuracy = 0.9375;
  curve.p_for_drop = 10;
  EvalConfig config;

  const fs::path csv = dir.path / "sens.csv";
  write_sensitivity_csv(curve, csv);
  CHECK(slurp(csv) == "p,accuracy\n1,0.5\n10,0.875\n100,0.9375\n");
  write_sensitivity_report(curve, config, "a", "b", dir.path / "sens.json");
  CHECK(slurp(dir.path / "sens.json").find("\"p_for_drop\": 10") != std::string::npos);

  RankCurve rank;
  rank.points = {{2, 0.5}, {4, 0.75}};
  rank.variance_points = {{2, 0.25}, {4, 1.0}};
  const fs::path rank_csv = dir.path / "rank.csv";
  write_rank_csv(rank, rank_csv);
  CHECK(slurp(rank_csv) == "k,accuracy,variance_explained\n2,0.5,0.25\n4,0.75,1\n");
}
