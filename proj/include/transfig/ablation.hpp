#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "transfig/metrics.hpp"
#include "transfig/train_config.hpp"
#include "transfig/trainer.hpp"

namespace transfig {

inline constexpr AblationVariant kAllVariants[] = {AblationVariant::baseline, AblationVariant::d_shared1,
                                                   AblationVariant::no_pool, AblationVariant::no_stage1,
                                                   AblationVariant::no_stage2};

// One config delta per variant; baseline returns base untouched.
TrainConfig make_variant(AblationVariant variant, const TrainConfig& base);
TrainConfig make_variant(const std::string& name, const TrainConfig& base);

// Same config with only the generator architecture swapped.
TrainConfig make_arch(GeneratorArch arch, const TrainConfig& base);

// Dotted keys whose values differ between the two configs.
std::vector<std::string> config_diff(const TrainConfig& a, const TrainConfig& b);

struct ComparisonCell {
  std::string column;     // variant or architecture name
  std::string direction;  // "AB" or "BA"
  std::string metric;     // "FID" or "KIDx100"
  double mean = 0.0;
  double std = 0.0;       // across seeds
  std::int64_t seeds = 0;
  bool failed = false;

  friend bool operator==(const ComparisonCell&, const ComparisonCell&) = default;
};

// Published numbers shown next to the desk-scale results for context only.
struct ReferenceValue {
  std::string source;  // e.g. "horse2zebra 128/256"
  std::string column;
  std::string direction;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;

  friend bool operator==(const ReferenceValue&, const ReferenceValue&) = default;
};

struct ComparisonReport {
  std::string title;
  std::vector<std::string> columns;
  std::vector<ComparisonCell> cells;
  std::vector<ReferenceValue> references;

  const ComparisonCell* find(const std::string& column, const std::string& direction,
                             const std::string& metric) const;
  bool all_finite() const;

  std::string to_csv() const;
  static ComparisonReport from_csv(const std::string& text);
  std::string to_table() const;

  friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

struct RunRecord {
  std::string column;
  std::uint64_t seed = 0;
  std::filesystem::path run_dir;
  bool ok = false;
  std::string error;
  std::int64_t steps = 0;
  std::size_t d_term_count = 0;
  std::int64_t inputs_seen = 0;
  std::int64_t generated_inputs_seen = 0;
  MetricReport metrics;
};

struct SuiteOptions {
  std::filesystem::path out_dir;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int jobs = 1;
  std::string embedder = "hermetic";
  EvalOptions eval;
  bool quiet = true;
};

struct SuiteResult {
  ComparisonReport report;
  std::vector<RunRecord> runs;
};

// Trains and evaluates every variant for every seed on <data_root>/trainA,
// trainB (evaluation on testA, testB). Failed runs mark their cells and the
// suite carries on. Writes report.csv, report.txt and runs.csv to out_dir.
SuiteResult run_ablation_suite(const TrainConfig& base, const std::filesystem::path& data_root,
                               const SuiteOptions& options);

// UNet versus ResNet under identical seeds and settings.
SuiteResult run_arch_comparison(const TrainConfig& base, const std::filesystem::path& data_root,
                                const SuiteOptions& options);

std::vector<ReferenceValue> ablation_references();
std::vector<ReferenceValue> arch_references();

}  // namespace transfig
