#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "owaic/datasets.hpp"
#include "owaic/mcmc.hpp"
#include "owaic/predictive.hpp"
#include "owaic/waic.hpp"

namespace owaic {

enum class StudyFamily { hier1, hier2, sv };

const char* to_string(StudyFamily family) noexcept;
/// Throws DomainError for an unknown family name.
StudyFamily parse_family(std::string_view text);

struct VariantSpec {
  PredictiveMode mode = PredictiveMode::conditional;
  /// "ungrouped", "grouped" or "blocks:<n>".
  std::string partition = "ungrouped";

  /// "<partition> <mode>", e.g. "grouped marginal".
  std::string label() const;
  friend bool operator==(const VariantSpec&, const VariantSpec&) = default;
};

struct StudyConfig {
  StudyFamily family = StudyFamily::hier1;
  HierParams hier_truth;
  SvParams sv_truth;
  std::size_t groups = 20;      // hierarchical J
  std::size_t per_group = 100;  // hierarchical n_j
  std::size_t length = 200;     // stochastic volatility T
  std::size_t replicates = 30;
  std::vector<std::string> models;
  std::vector<VariantSpec> variants;
  McmcConfig mcmc;
  std::size_t inner_draws = 500;  // K for marginal variants
  std::uint64_t master_seed = 20240101;
  /// When non-empty, one seed per replicate; otherwise derived from
  /// master_seed and the replicate index.
  std::vector<std::uint64_t> replicate_seeds;
  std::string true_model;
  /// Worker threads over (replicate, model) tasks; 0 means one per core.
  std::size_t threads = 1;

  /// Desk-scale defaults for a family: every model and variant of that
  /// family's study.
  static StudyConfig defaults(StudyFamily family);

  std::uint64_t replicate_seed(std::size_t replicate) const;

  /// Throws DomainError describing the first violated constraint.
  void validate() const;
};

/// Switches to the full-scale study size: 500 (hierarchical) or 300 (sv)
/// replicates, keep = 5000, K = 1000 (hierarchical) or 3000 (sv).
void apply_full_scale(StudyConfig& config);

/// JSON study config. Keys mirror StudyConfig in camelCase; anything left out
/// keeps the family's default. Throws FormatError on malformed input and
/// DomainError on invalid values.
StudyConfig parse_study_config(std::string_view text);
StudyConfig load_study_config(const std::filesystem::path& path);

struct VariantOutcome {
  FractionResult full;
  std::vector<double> fraction_waic;  // one per checkpoint fraction
};

struct ReplicateRecord {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  std::string model;
  bool ok = false;
  std::string error;
  std::vector<VariantOutcome> variants;  // config order; empty on failure
  double min_ess = 0.0;
  std::size_t low_ess_count = 0;
  std::uint64_t neg_inf_count = 0;
};

struct SummaryRow {
  std::string variant;
  std::string model;
  std::size_t replicates = 0;
  double mean_waic = 0.0;
  double mean_lppd = 0.0;
  double mean_p_waic = 0.0;
  // Monte Carlo standard errors; empty with fewer than 2 replicates.
  std::optional<double> se_waic;
  std::optional<double> se_lppd;
  std::optional<double> se_p_waic;
  std::vector<double> fraction_mean_waic;  // one per checkpoint fraction
};

struct SelectionRow {
  std::string variant;
  std::string true_model;
  std::size_t replicates = 0;
  std::size_t correct = 0;
  double proportion = 0.0;
  std::optional<double> se;
  std::vector<std::size_t> chosen;  // count per model, config order
};

struct StudyDiagnostics {
  std::size_t tasks = 0;
  std::size_t failed_tasks = 0;
  std::size_t excluded_replicates = 0;
  bool failure_flag = false;  // more than 2% of tasks failed
  std::size_t low_ess_runs = 0;
  std::uint64_t neg_inf_values = 0;
  std::vector<std::string> messages;
};

struct StudyReport {
  std::string family;
  std::vector<std::string> models;
  std::vector<std::string> variants;
  std::vector<double> fractions;  // checkpoint fractions of fraction_mean_waic
  std::vector<SummaryRow> summary;      // variant-major, then model
  std::vector<SelectionRow> selection;  // one per variant
  std::vector<ReplicateRecord> records; // replicate-major, then model
  StudyDiagnostics diagnostics;
};

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

/// Generates every replicate's dataset, fits every model with every variant
/// and aggregates. Output depends only on the config, not on the thread
/// count or scheduling.
StudyReport run_study(const StudyConfig& config, const ProgressCallback& progress = {});

/// Aggregates per-replicate records: means and standard errors over
/// replicates where the fit succeeded, and argmin-WAIC selection over
/// replicates where every model succeeded (first listed model wins ties).
StudyReport aggregate(std::string family, std::vector<std::string> models,
                      std::vector<std::string> variants, std::string true_model,
                      std::vector<ReplicateRecord> records);

/// Index of the smallest WAIC; the first wins ties.
std::size_t select_model(const std::vector<double>& waic);

enum class ReportFormat { csv, json, pretty };

/// Throws DomainError for an unknown format name.
ReportFormat parse_report_format(std::string_view text);

/// csv: summary.csv, selection.csv, replicates.csv, checkpoints.csv.
/// json: report.json. pretty: report.txt. Returns the files written.
/// Throws Error if the directory cannot be created or written.
std::vector<std::filesystem::path> emit_report(const StudyReport& report, ReportFormat format,
                                               const std::filesystem::path& dir);

/// Aligned plain-text tables.
std::string format_pretty(const StudyReport& report);

/// Replays an h-vector stream through the online engine.
///
/// `meta` is a partition file (see write_partition) optionally carrying
/// "mode" and "innerDraws". Its element count must match the stream's M and
/// its mode the stream's mode (IntegrityError otherwise). Malformed lines
/// raise FormatError naming the line.
WaicResult ingest_stream(const std::filesystem::path& stream,
                         const std::optional<std::filesystem::path>& meta);

/// As ingest_stream, returning the accumulated state without finalizing.
WaicState ingest_stream_state(const std::filesystem::path& stream,
                              const std::optional<std::filesystem::path>& meta);

}  // namespace owaic
