#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "facemap/experiments.hpp"
#include "facemap/protocol.hpp"
#include "facemap/types.hpp"

namespace facemap {

/// Embedding files come in two formats, auto-detected by extension:
///   .csv        text: optional "# system: TAG" line, header "id,v0,...,v{d-1}",
///               one row per entity, values with 17 significant digits so a
///               text round trip preserves doubles exactly.
///   anything else (".bin" suggested)  little-endian binary: magic "FMAP-EMB",
///               u32 version, tagged header, then raw 64-bit rows. Binary
///               round trips are bit-exact.
EmbeddingSet read_embeddings(const std::filesystem::path& path);
void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);

enum class PairFileFormat : std::uint8_t { kLfw, kYtf };

/// LFW pairs.txt layout: a "<n_folds> <pairs_per_class_per_fold>" header,
/// then per fold that many matched lines ("name idx1 idx2") followed by that
/// many mismatched lines ("name1 idx1 name2 idx2"). Entity ids are rendered
/// as "name/0001" with the zero-padded image index.
PairProtocol read_pairs_lfw(const std::filesystem::path& path);
void write_pairs_lfw(const PairProtocol& protocol, const std::filesystem::path& path);

/// YTF split file: comma-separated lines
/// "split index, pair index, id a, id b, label(1|0)", an optional header
/// line, split indices forming a contiguous range. Ids are taken verbatim.
PairProtocol read_pairs_ytf(const std::filesystem::path& path);

PairProtocol read_pairs(const std::filesystem::path& path, PairFileFormat format);

/// Binary map file ("FMAP-MAT"): bit-exact round trip of the matrix plus fit
/// metadata. A wrong magic or version raises FormatError.
LinearMap read_map(const std::filesystem::path& path);
void write_map(const LinearMap& map, const std::filesystem::path& path);

/// Evaluation reports are JSON with the full fold list, the config snapshot
/// and any warnings; read_report round-trips what write_report emits.
void write_report(const EvaluationReport& report, const std::filesystem::path& path);
EvaluationReport read_report(const std::filesystem::path& path);

nlohmann::json to_json(const EvalConfig& config);
EvalConfig eval_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvaluationReport& report);
EvaluationReport evaluation_report_from_json(const nlohmann::json& j);

/// Curve and matrix reports for external plotting. The JSON carries the
/// config snapshot and all points; the CSV files are one row per point.
void write_sensitivity_report(const SensitivityCurve& curve, const EvalConfig& config,
                              const std::string& source_tag, const std::string& target_tag,
                              const std::filesystem::path& path);
void write_sensitivity_csv(const SensitivityCurve& curve, const std::filesystem::path& path);
void write_rank_report(const RankCurve& curve, const EvalConfig& config,
                       const std::string& source_tag, const std::string& target_tag,
                       const std::filesystem::path& path);
void write_rank_csv(const RankCurve& curve, const std::filesystem::path& path);
void write_cross_report(const CrossMatrix& matrix, const EvalConfig& config,
                        const std::filesystem::path& path);

/// Renders a double with 17 significant digits (exact text round trip).
std::string format_double(double value);

/// Writes content to path atomically (temp file in the same directory, then
/// rename), creating parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace facemap
