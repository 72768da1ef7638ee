// Batch driver for fitting and evaluating linear maps between embedding
// spaces. Subcommands cover synthetic data generation, single evaluations,
// the full cross-system table and the two sweep analyses; all randomness is
// seeded via --seed, so identical flags give byte-identical outputs.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "facemap/experiments.hpp"
#include "facemap/io.hpp"
#include "facemap/protocol.hpp"
#include "facemap/rng.hpp"
#include "facemap/synthetic.hpp"

namespace fs = std::filesystem;
using namespace facemap;

namespace {

struct CommonEvalArgs {
  std::string source_path;
  std::string target_path;
  std::string pairs_path;
  std::string pairs_format = "lfw";
  double lambda = 1.0;
  bool no_normalize = false;
  int jobs = 1;
};

void add_pairs_options(CLI::App* cmd, CommonEvalArgs& args) {
  cmd->add_option("--pairs", args.pairs_path, "pair protocol file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--pairs-format", args.pairs_format, "pair file layout")
      ->check(CLI::IsMember({"lfw", "ytf"}))
      ->capture_default_str();
}

void add_eval_options(CLI::App* cmd, CommonEvalArgs& args) {
  cmd->add_option("--source", args.source_path, "source-system embedding file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--target", args.target_path, "target-system embedding file")
      ->required()
      ->check(CLI::ExistingFile);
  add_pairs_options(cmd, args);
  cmd->add_option("--lambda", args.lambda, "ridge regularization strength")
      ->capture_default_str();
  cmd->add_flag("--no-normalize", args.no_normalize,
                "skip the row normalization applied before fitting");
  cmd->add_option("--jobs", args.jobs, "worker threads (results match --jobs 1)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

PairProtocol load_pairs(const CommonEvalArgs& args) {
  return read_pairs(args.pairs_path,
                    args.pairs_format == "lfw" ? PairFileFormat::kLfw : PairFileFormat::kYtf);
}

std::string percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * value);
  return buf;
}

std::string cell_text(const CrossCell& cell, bool diagonal) {
  std::string text = percent(cell.report.mean_accuracy);
  if (!diagonal && cell.identity_baseline) {
    text += " (" + percent(cell.identity_baseline->mean_accuracy) + ")";
  }
  return text;
}

void print_cross_table(const CrossMatrix& matrix) {
  const std::size_t n = matrix.system_tags.size();
  std::vector<std::size_t> widths(n + 1, 7);  // "from\\to"
  for (std::size_t i = 0; i < n; ++i) {
    widths[0] = std::max(widths[0], matrix.system_tags[i].size());
    widths[i + 1] = std::max(widths[i + 1], matrix.system_tags[i].size());
    for (std::size_t j = 0; j < n; ++j) {
      widths[j + 1] = std::max(widths[j + 1], cell_text(matrix.cells[i][j], i == j).size());
    }
  }
  const auto pad = [](const std::string& text, std::size_t width) {
    std::string out = text;
    out.append(width + 2 - text.size(), ' ');
    return out;
  };
  std::string header = pad("from\\to", widths[0]);
  for (std::size_t j = 0; j < n; ++j) header += pad(matrix.system_tags[j], widths[j + 1]);
  std::printf("%s\n", header.c_str());
  for (std::size_t i = 0; i < n; ++i) {
    std::string row = pad(matrix.system_tags[i], widths[0]);
    for (std::size_t j = 0; j < n; ++j) {
      row += pad(cell_text(matrix.cells[i][j], i == j), widths[j + 1]);
    }
    std::printf("%s\n", row.c_str());
  }
}

int run_synth(int argc, char** argv);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linear maps between face-embedding spaces: fitting, verification, analyses"};
  app.require_subcommand(1);

  // ---- synth ----------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic world and protocol");
  std::string out_dir;
  std::uint64_t synth_seed = 42;
  int n_identities = 3000;
  int latent_dim = 32;
  int images = 4;
  std::vector<int> out_dims{64, 64};
  double sigma = 0.05;
  double output_noise = 0.0;
  int folds = 10;
  int matched_per_fold = 300;
  int mismatched_per_fold = 300;
  std::string emb_format = "bin";
  synth->add_option("--out-dir", out_dir, "directory for the generated files")->required();
  synth->add_option("--seed", synth_seed, "master seed")->capture_default_str();
  synth->add_option("--n-identities", n_identities)->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--latent-dim", latent_dim)->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--images-per-identity", images)->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--out-dims", out_dims, "one output dimension per system")
      ->delimiter(',')
      ->capture_default_str();
  synth->add_option("--sigma", sigma, "latent jitter scale")->capture_default_str();
  synth->add_option("--output-noise", output_noise, "per-system observation noise")
      ->capture_default_str();
  synth->add_option("--folds", folds)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--matched-per-fold", matched_per_fold)->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--mismatched-per-fold", mismatched_per_fold)->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--format", emb_format, "embedding file format")
      ->check(CLI::IsMember({"bin", "csv"}))
      ->capture_default_str();

  // ---- evaluate -------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate one source->target mapping");
  CommonEvalArgs eval_args;
  std::string eval_mode = "fitted";
  int eval_rank = 0;
  std::int64_t subsample_count = -1;
  std::uint64_t eval_seed = 42;
  std::string eval_report_path;
  add_eval_options(eval_cmd, eval_args);
  eval_cmd->add_option("--mode", eval_mode, "mapping mode")
      ->check(CLI::IsMember({"fitted", "identity", "rank"}))
      ->capture_default_str();
  eval_cmd->add_option("--rank", eval_rank, "truncation rank for --mode rank");
  eval_cmd->add_option("--pairs-subsample", subsample_count,
                       "fit on this many randomly chosen matched pairs");
  eval_cmd->add_option("--seed", eval_seed, "seed for --pairs-subsample")->capture_default_str();
  eval_cmd->add_option("--report", eval_report_path, "JSON report destination")->required();

  // ---- cross ----------------------------------------------------------
  auto* cross_cmd = app.add_subcommand("cross", "full cross-system accuracy table");
  std::vector<std::string> system_paths;
  CommonEvalArgs cross_args;
  std::string cross_report_path;
  cross_cmd->add_option("--systems", system_paths, "two or more embedding files")
      ->required()
      ->expected(2, -1)
      ->check(CLI::ExistingFile);
  add_pairs_options(cross_cmd, cross_args);
  cross_cmd->add_option("--lambda", cross_args.lambda)->capture_default_str();
  cross_cmd->add_flag("--no-normalize", cross_args.no_normalize);
  cross_cmd->add_option("--jobs", cross_args.jobs)->check(CLI::PositiveNumber)
      ->capture_default_str();
  cross_cmd->add_option("--report", cross_report_path, "JSON report destination")->required();

  // ---- sensitivity ----------------------------------------------------
  auto* sens_cmd = app.add_subcommand("sensitivity",
                                      "accuracy as a function of the number of fit pairs");
  CommonEvalArgs sens_args;
  int sens_points = 100;
  double sens_drop = 0.01;
  int sens_reps = 1;
  std::uint64_t sens_seed = 42;
  std::string sens_csv_path;
  std::string sens_report_path;
  add_eval_options(sens_cmd, sens_args);
  sens_cmd->add_option("--points", sens_points, "number of swept p values")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sens_cmd->add_option("--drop", sens_drop, "accuracy drop defining p_for_drop")
      ->capture_default_str();
  sens_cmd->add_option("--repetitions", sens_reps, "independent draws averaged per point")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sens_cmd->add_option("--seed", sens_seed)->capture_default_str();
  sens_cmd->add_option("--csv", sens_csv_path, "curve CSV destination")->required();
  sens_cmd->add_option("--report", sens_report_path, "JSON report destination")->required();

  // ---- rank -----------------------------------------------------------
  auto* rank_cmd = app.add_subcommand("rank", "accuracy as the map rank is truncated");
  CommonEvalArgs rank_args;
  std::vector<int> rank_list;
  std::string rank_csv_path;
  std::string rank_report_path;
  add_eval_options(rank_cmd, rank_args);
  rank_cmd->add_option("--ranks", rank_list, "ranks to evaluate")->required()->delimiter(',');
  rank_cmd->add_option("--csv", rank_csv_path, "curve CSV destination")->required();
  rank_cmd->add_option("--report", rank_report_path, "JSON report destination")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      for (const int dim : out_dims) {
        if (dim < latent_dim) {
          throw CLI::ValidationError("--out-dims", "out-dim " + std::to_string(dim) +
                                                       " is smaller than --latent-dim " +
                                                       std::to_string(latent_dim));
        }
      }
      std::vector<SyntheticSystemSpec> specs;
      specs.reserve(out_dims.size());
      for (const int dim : out_dims) specs.push_back({dim, sigma, output_noise});
      const SyntheticWorld world =
          generate_world(n_identities, latent_dim, images, specs, synth_seed);

      const fs::path dir(out_dir);
      fs::create_directories(dir);
      for (std::size_t s = 0; s < specs.size(); ++s) {
        const EmbeddingSet set = emit_embeddings(world, static_cast<int>(s));
        const fs::path file = dir / ("system" + std::to_string(s) + "." + emb_format);
        write_embeddings(set, file);
        std::printf("wrote %s (%zu embeddings, dim %d)\n", file.c_str(), set.size(), set.dim());
      }
      const PairProtocol protocol =
          generate_protocol(world, folds, matched_per_fold, mismatched_per_fold,
                            derive_seed(synth_seed, "protocol"));
      const fs::path pairs_file = dir / "pairs.txt";
      write_pairs_lfw(protocol, pairs_file);
      std::printf("wrote %s (%zu folds x %zu pairs)\n", pairs_file.c_str(), protocol.n_folds(),
                  protocol.folds()[0].size());
      return 0;
    }

    if (*eval_cmd) {
      EvalConfig config;
      config.lambda = eval_args.lambda;
      config.normalize_before_fit = !eval_args.no_normalize;
      if (eval_mode == "identity") {
        config.mapping_mode = MappingMode::kIdentity;
      } else if (eval_mode == "rank") {
        if (eval_rank < 1) {
          throw CLI::ValidationError("--rank", "--mode rank requires --rank K with K >= 1");
        }
        config.mapping_mode = MappingMode::kTruncatedRank;
        config.rank = eval_rank;
      }
      if (subsample_count >= 0) {
        config.pairs_subsample = SubsampleSpec{subsample_count, eval_seed};
      }
      const EmbeddingSet source = read_embeddings(eval_args.source_path);
      const EmbeddingSet target = read_embeddings(eval_args.target_path);
      const PairProtocol protocol = load_pairs(eval_args);
      const EvaluationReport report =
          evaluate(source, target, protocol, config, eval_args.jobs);
      write_report(report, eval_report_path);
      std::printf("%s ± %s\n", percent(report.mean_accuracy).c_str(),
                  percent(report.std_accuracy).c_str());
      return 0;
    }

    if (*cross_cmd) {
      EvalConfig config;
      config.lambda = cross_args.lambda;
      config.normalize_before_fit = !cross_args.no_normalize;
      std::vector<EmbeddingSet> systems;
      systems.reserve(system_paths.size());
      for (const std::string& path : system_paths) systems.push_back(read_embeddings(path));
      const PairProtocol protocol = load_pairs(cross_args);
      const CrossMatrix matrix = cross_matrix(systems, protocol, config, cross_args.jobs);
      write_cross_report(matrix, config, cross_report_path);
      print_cross_table(matrix);
      return 0;
    }

    if (*sens_cmd) {
      EvalConfig config;
      config.lambda = sens_args.lambda;
      config.normalize_before_fit = !sens_args.no_normalize;
      const EmbeddingSet source = read_embeddings(sens_args.source_path);
      const EmbeddingSet target = read_embeddings(sens_args.target_path);
      const PairProtocol protocol = load_pairs(sens_args);
      const SensitivityCurve curve =
          sensitivity_sweep(source, target, protocol, config, sens_points, sens_seed, sens_drop,
                            sens_reps, sens_args.jobs);
      write_sensitivity_csv(curve, sens_csv_path);
      write_sensitivity_report(curve, config, source.system_tag(), target.system_tag(),
                               sens_report_path);
      std::printf("full accuracy %s over %zu points\n", percent(curve.full_accuracy).c_str(),
                  curve.points.size());
      if (curve.p_for_drop) {
        std::printf("p_for_drop (%.1f%% drop): %lld pairs\n", 100.0 * curve.drop_threshold,
                    static_cast<long long>(*curve.p_for_drop));
      } else {
        std::printf("p_for_drop: not reached\n");
      }
      return 0;
    }

    if (*rank_cmd) {
      EvalConfig config;
      config.lambda = rank_args.lambda;
      config.normalize_before_fit = !rank_args.no_normalize;
      const EmbeddingSet source = read_embeddings(rank_args.source_path);
      const EmbeddingSet target = read_embeddings(rank_args.target_path);
      const PairProtocol protocol = load_pairs(rank_args);
      const RankCurve curve =
          rank_sweep(source, target, protocol, config, rank_list, rank_args.jobs);
      write_rank_csv(curve, rank_csv_path);
      write_rank_report(curve, config, source.system_tag(), target.system_tag(),
                        rank_report_path);
      for (std::size_t i = 0; i < curve.points.size(); ++i) {
        std::printf("k=%d  accuracy %s  variance %.4f\n", curve.points[i].k,
                    percent(curve.points[i].mean_accuracy).c_str(),
                    curve.variance_points[i].second);
      }
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return e.get_exit_code();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
  return 0;
}
