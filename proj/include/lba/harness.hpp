#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lba/classifier.hpp"
#include "lba/oracle.hpp"
#include "lba/policy.hpp"
#include "lba/realizer.hpp"
#include "lba/world.hpp"

namespace lba {

struct EpisodeConfig {
  PolicyKind policy = PolicyKind::Ours;
  NoiseParams noise;
  OracleConfig oracle;
  std::uint64_t seed = 7;
  int rounds = 1;
  /// Ours only: choose one mode for the whole query batch.
  bool global_mode = false;
  /// Also revisit the train split while fine-tuning.
  bool replay = false;
  FineTuneOptions fine_tune;
};

struct EpisodeReport {
  std::string policy;
  AccuracyReport zero_shot;
  std::optional<AccuracyReport> fine_tuned;
  std::size_t n_questions = 0;
  std::size_t n_valid_q = 0;
  std::size_t n_knowledge = 0;
  std::uint64_t seed = 0;

  bool operator==(const EpisodeReport&) const;
};

struct EpisodeResult {
  EpisodeReport report;
  KnowledgeSource expanded;  // K+
  std::vector<AcquiredPair> acquired;
  std::vector<std::string> questions;  // question records
  std::vector<std::string> audit;      // audit records
};

/// Test split against the initial knowledge only; no questions are asked.
EpisodeReport run_baseline(const World& world, const Projection& proj);

/// Asks one question per query object per round, merges every answer into
/// K+, evaluates the test split zero-shot with the frozen projection, then
/// fine-tunes a copy on the acquired pairs and evaluates again.
EpisodeResult run_episode(const World& world, const Projection& proj, const EpisodeConfig& config);

struct Stat {
  double mean = 0.0;
  std::optional<double> stddev;
};

struct TableRow {
  std::string label;
  std::string policy;
  Stat overall_zs, known_zs, novel_zs;
  std::optional<Stat> overall_ft, known_ft, novel_ft;
  Stat n_valid_q, n_knowledge;
  std::vector<std::uint64_t> seeds;
};

/// Row label used in comparison tables: CLIP-Ret, All Conf., All Exp., Random, Ours.
std::string row_label(PolicyKind kind);
constexpr const char* kBaselineLabel = "CLIP-Ret";

TableRow to_row(const EpisodeReport& report, std::string label);
/// Mean and sample standard deviation over the reports.
TableRow aggregate(std::span<const EpisodeReport> reports, std::string label);

/// Rows in order: CLIP-Ret, All Conf., All Exp., Random (mean +- std over all
/// seeds), Ours. Deterministic policies run with seeds.front(). Needs at
/// least three seeds.
std::vector<TableRow> compare_policies(const World& world, const Projection& proj,
                                       std::span<const std::uint64_t> seeds,
                                       const EpisodeConfig& base);

/// Columns: policy, overall_zs, overall_ft, known_zs, known_ft, novel_zs,
/// novel_ft, n_valid_q, n_knowledge, seeds. Aggregated cells read `mean±std`.
void write_table_csv(std::ostream& out, std::span<const TableRow> rows);
void write_table_json(std::ostream& out, std::span<const TableRow> rows);

}  // namespace lba
