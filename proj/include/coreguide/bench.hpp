#pragma once

#include "coreguide/labeling.hpp"
#include "coreguide/model.hpp"
#include "coreguide/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace coreguide {

struct Confusion {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0; // positive = core

  std::uint64_t total() const { return tp + fp + tn + fn; }
  Confusion& operator+=(const Confusion& o);
};

/// F1 = 2TP / (2TP + FP + FN); undefined when the class never occurs in the
/// ground truth.
std::optional<double> pos_f1(const Confusion& c);
std::optional<double> neg_f1(const Confusion& c);
double accuracy(const Confusion& c);

struct PredMetrics {
  Confusion pooled;
  double accuracy = 0.0;
  std::optional<double> pos_f1;
  std::optional<double> neg_f1;
  // Per-instance averages over instances where the value is defined.
  double macro_accuracy = 0.0;
  std::optional<double> macro_pos_f1;
  std::optional<double> macro_neg_f1;
  std::size_t instances = 0;
};

inline constexpr double kDecisionThreshold = 0.5;

Confusion confusion(const std::vector<double>& probs, const std::vector<std::uint8_t>& labels,
                    double threshold = kDecisionThreshold);

/// Pooled and macro metrics for per-instance probability vectors.
PredMetrics score_predictions(const std::vector<std::vector<double>>& probs,
                              const std::vector<std::vector<std::uint8_t>>& labels);

/// Metrics of the constant predictor for the pooled majority class.
PredMetrics majority_baseline(const std::vector<std::vector<std::uint8_t>>& labels);

PredMetrics eval_prediction(const ModelParams& params, const ModelConfig& cfg,
                            const std::vector<LoadedInstance>& test);

/// Rows "threshold,precision,recall" on the core class for thresholds 0.00..1.00.
void write_pr_curve(const std::string& path, const std::vector<std::vector<double>>& probs,
                    const std::vector<std::vector<std::uint8_t>>& labels,
                    const std::string& provenance);

// Speed benchmark.

enum class SeedMode { None, Model, Oracle };
SeedMode parse_seed_mode(const std::string& s);
const char* seed_mode_name(SeedMode m);

struct InstanceRun {
  std::string instance;
  VerdictKind kind = VerdictKind::Halted;
  SolveStats stats;
  double overhead_ms = 0.0; // graph build + inference + seeding
  double total_ms = 0.0;    // overhead + solve
};

struct SpeedMetrics {
  std::string arm;
  std::vector<InstanceRun> runs;
  double avg_runtime_ms = 0.0; // censored mean (A.RT)
  std::size_t halted_count = 0;
  double halted_pct = 0.0;
  double median_conflicts = 0.0;
  double mean_conflicts = 0.0;
  double median_decisions = 0.0;
  double mean_decisions = 0.0;
};

/// Censored runtime: a halted run counts at least the time budget.
double censored_runtime(const InstanceRun& r, std::uint64_t time_budget_ms);

SpeedMetrics summarize_runs(std::string arm, std::vector<InstanceRun> runs,
                            std::uint64_t time_budget_ms);

struct SpeedComparison {
  SpeedMetrics baseline;
  std::optional<SpeedMetrics> guided;
  double improvement_ms = 0.0;  // baseline A.RT − guided A.RT
  double improvement_pct = 0.0; // relative to baseline A.RT
};

SpeedComparison compare(const SpeedMetrics& baseline, const std::optional<SpeedMetrics>& guided);

struct Guidance {
  SeedMode mode = SeedMode::None;
  const ModelParams* params = nullptr; // SeedMode::Model
  const ModelConfig* model_cfg = nullptr;
  double oracle_core = 0.99;
  double oracle_other = 0.01;
};

/// Oracle prediction: labels mapped to oracle_core / oracle_other.
Prediction oracle_prediction(const std::vector<std::uint8_t>& labels, double core = 0.99,
                             double other = 0.01);

/// Unseeded baseline for every instance, then the guided arm (when mode is not
/// None) over the same instances in the same order.
SpeedComparison run_speed_bench(const std::vector<LoadedInstance>& instances,
                                const SolverConfig& cfg, const Guidance& guidance);

// Ablations.

enum class AblationAxis { Graph, Supervision, Loss };
AblationAxis parse_ablation_axis(const std::string& s);
const char* ablation_axis_name(AblationAxis a);

struct AblationArm {
  std::string name;
  ModelConfig cfg;
  PredMetrics metrics;
  double final_train_loss = 0.0;
};

struct AblationResult {
  AblationAxis axis = AblationAxis::Graph;
  std::vector<AblationArm> arms;
};

/// Arm configurations differing from base only on the axis.
std::vector<std::pair<std::string, ModelConfig>> ablation_arms(AblationAxis axis,
                                                               const ModelConfig& base);

/// Trains each arm with identical seeds on the manifest's train split and
/// scores core prediction on its test split.
AblationResult run_ablation(const DatasetManifest& manifest, AblationAxis axis,
                            const ModelConfig& base);

// Reports.

inline constexpr const char* kRunCsvHeader =
    "instance,kind,decisions,propagations,conflicts,restarts,wall_ms,overhead_ms,total_ms";
inline constexpr const char* kScatterCsvHeader =
    "instance,baseline_ms,guided_ms,baseline_conflicts,guided_conflicts";

std::string run_csv(const SpeedMetrics& m, const std::string& provenance);
std::string scatter_csv(const SpeedMetrics& baseline, const SpeedMetrics& guided,
                        const std::string& provenance);
std::string speed_summary_text(const SpeedComparison& c);
std::string speed_summary_json(const SpeedComparison& c);
std::string pred_metrics_text(const PredMetrics& m);
std::string pred_metrics_json(const PredMetrics& m);
std::string ablation_text(const AblationResult& r);
std::string ablation_json(const AblationResult& r);

/// Writes <prefix>baseline.csv, <prefix>guided.csv, <prefix>scatter.csv,
/// <prefix>summary.txt and <prefix>summary.json; guided files only when present.
std::vector<std::string> write_speed_report(const SpeedComparison& c, const std::string& prefix,
                                            const std::string& provenance);

void write_text_file(const std::string& path, const std::string& content);

} // namespace coreguide
