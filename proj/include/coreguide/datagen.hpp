#pragma once

#include "coreguide/cnf.hpp"
#include "coreguide/solver.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace coreguide {

enum class GenFamily { PlantedCore, Pigeonhole, RandomKsat };
enum class KernelKind { RandomKcnf, Pigeonhole };

struct GenSpec {
  GenFamily family = GenFamily::PlantedCore;
  KernelKind kernel = KernelKind::RandomKcnf;
  std::uint32_t n_core_vars = 40;
  std::uint32_t n_pad_vars = 4;
  std::uint32_t k = 3;
  double clause_ratio = 8.0;     // kernel (or random k-SAT) clauses per variable
  double pad_clause_ratio = 1.5; // padding clauses per padding variable
  std::uint32_t holes = 2;       // pigeonhole kernels and family
  std::uint64_t seed = 1;

  void validate() const;
};

using Rng = std::mt19937_64;

struct PlantedInstance {
  Cnf cnf;
  std::vector<std::uint32_t> core_vars;     // ground truth, ascending
  std::vector<std::size_t> kernel_clauses;  // clause indices after shuffling
  std::vector<std::size_t> padding_clauses;

  double core_fraction() const {
    return cnf.num_vars == 0 ? 0.0
                             : static_cast<double>(core_vars.size()) / cnf.num_vars;
  }
};

/// m clauses, each over k distinct variables with uniform polarity.
Cnf gen_random_ksat(std::uint32_t n, std::size_t m, std::uint32_t k, Rng& rng);

/// PHP(holes+1, holes); variable p·holes + h + 1 means pigeon p sits in hole h.
Cnf gen_pigeonhole(std::uint32_t holes);

/// Disjoint union of an UNSAT kernel and satisfiable padding over fresh
/// variables, with variable names and clause order shuffled.
PlantedInstance plant_kernel(const Cnf& kernel, std::uint32_t n_pad_vars,
                             double pad_clause_ratio, std::uint32_t k, Rng& rng,
                             const SolverConfig& check = {});

PlantedInstance gen_planted_core(const GenSpec& spec, Rng& rng,
                                 const SolverConfig& check = {});

/// Shuffles variable names and clause order; returns the permutation used
/// (old variable v ↦ perm[v-1]).
std::vector<std::uint32_t> shuffle_instance(Cnf& cnf, Rng& rng);

enum class CorpusPreset { LecLike, CompLike, BenchHard };

CorpusPreset parse_corpus_preset(const std::string& name);

/// Per-instance spec drawn from a preset: lec-like has core fraction in
/// [0.9, 0.97] and 60..300 variables, comp-like core fraction in [0.3, 0.5],
/// bench-hard sizes kernels for thousands of baseline conflicts.
GenSpec draw_preset_spec(CorpusPreset preset, Rng& rng);

/// Random k-SAT at ratio 3.5 over the preset's variable count, resampled
/// until verified satisfiable. Used for the satisfiability target.
Cnf gen_sat_instance(const GenSpec& spec, Rng& rng, const SolverConfig& check = {});

/// Sidecar label format: first line "core-vars", then space-separated
/// 1-based variable indices.
void write_label_file(const std::string& path, const std::vector<std::uint32_t>& vars);
std::vector<std::uint32_t> read_label_file(const std::string& path);

struct CorpusOptions {
  CorpusPreset preset = CorpusPreset::LecLike;
  std::size_t count = 10;
  double sat_fraction = 0.0;
  std::uint64_t seed = 1;
};

/// Writes inst_NNNNN.cnf (+ inst_NNNNN.labels for planted instances) into dir.
/// Returns the generated paths.
std::vector<std::string> write_corpus(const std::string& dir, const CorpusOptions& options,
                                      const SolverConfig& check = {});

} // namespace coreguide
