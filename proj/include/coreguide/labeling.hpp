#pragma once

#include "coreguide/cnf.hpp"
#include "coreguide/model.hpp"
#include "coreguide/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace coreguide {

enum class LabelSource { Oracle, Planted };
enum class Split { Train, Test };

const char* label_source_name(LabelSource s);
const char* split_name(Split s);

struct VarLabels {
  std::vector<std::uint8_t> core; // one entry per variable
  LabelSource source = LabelSource::Oracle;

  std::size_t positives() const;
};

struct LabelConfig {
  SolverConfig solver;
  bool minimize = false;      // single deletion pass over the extracted core
  bool use_planted = true;    // trust <stem>.labels when present
  bool verify = true;         // re-check oracle cores with verify_core
  unsigned jobs = 1;          // labeling threads in build_dataset
};

struct LabelOutcome {
  std::optional<VarLabels> labels;
  VerdictKind verdict = VerdictKind::Halted;
  std::string reason; // set when labels is empty
};

/// Labels a variable positive iff it occurs in a clause of the extracted core.
LabelOutcome label_instance(const Cnf& cnf, const LabelConfig& cfg = {});

VarLabels labels_from_vars(const std::vector<std::uint32_t>& vars, std::uint32_t num_vars,
                           LabelSource source);
std::vector<std::uint32_t> vars_from_labels(const VarLabels& labels);

struct ManifestEntry {
  std::string cnf;    // relative to the manifest directory
  std::string labels;
  LabelSource label_source = LabelSource::Oracle;
  Split split = Split::Train;
  std::uint32_t n_vars = 0;
  std::size_t n_clauses = 0;
  VerdictKind verdict = VerdictKind::Unsat;
};

struct SkipRecord {
  std::string cnf;
  std::string reason;
  std::optional<VerdictKind> verdict; // empty when the file could not be read
  Split split = Split::Train;
  std::uint32_t n_vars = 0;
  std::size_t n_clauses = 0;
};

struct DatasetManifest {
  std::uint64_t split_seed = 0;
  std::string config; // provenance echo
  std::vector<ManifestEntry> entries;
  std::vector<SkipRecord> skipped;
  std::string base_dir; // not serialized; set by load/build

  std::string resolve(const std::string& rel) const;
  std::vector<const ManifestEntry*> split_entries(Split s) const;
};

/// Number of training instances for a corpus of n: round(0.8 n).
std::size_t train_count(std::size_t n);

/// Scans *.cnf in instance_dir (sorted by name), labels what is missing, and
/// assigns a seeded 80/20 split. Writes manifest.json into the directory.
DatasetManifest build_dataset(const std::string& instance_dir, const LabelConfig& cfg,
                              std::uint64_t split_seed);

void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);
std::string manifest_to_json(const DatasetManifest& m);

struct LoadedInstance {
  std::string name;
  Cnf cnf;
  std::vector<std::uint8_t> labels; // empty for SAT instances
  bool unsat = true;
};

/// Labeled entries of a split; with include_sat, SAT skip records of the same
/// split are appended with empty labels.
std::vector<LoadedInstance> load_split(const DatasetManifest& m, Split s,
                                       bool include_sat = false);

std::vector<TrainingInstance> to_training_set(const std::vector<LoadedInstance>& xs,
                                              const GraphOptions& graph);

} // namespace coreguide
