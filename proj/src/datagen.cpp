#include "coreguide/datagen.hpp"

#include "coreguide/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace coreguide {

namespace {

constexpr int kMaxResamples = 100;

// UNSAT check for generated kernels; brute force where it is cheap.
std::optional<bool> is_unsat(const Cnf& cnf, const SolverConfig& check) {
  if (cnf.num_vars <= kMinCoreMaxVars)
    return brute_force_solve(cnf).kind == VerdictKind::Unsat;
  Verdict v = solve(cnf, check);
  if (v.kind == VerdictKind::Halted)
    return std::nullopt;
  return v.kind == VerdictKind::Unsat;
}

std::size_t clause_count(double ratio, std::uint32_t n) {
  return static_cast<std::size_t>(std::lround(ratio * static_cast<double>(n)));
}

Rng instance_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

} // namespace

void GenSpec::validate() const {
  if (k < 1)
    throw Error(Errc::InvalidArgument, "k must be positive");
  if (!(clause_ratio > 0.0) || !(pad_clause_ratio > 0.0))
    throw Error(Errc::InvalidArgument, "clause ratios must be positive");
  if (family == GenFamily::PlantedCore && kernel == KernelKind::RandomKcnf &&
      n_core_vars < k)
    throw Error(Errc::InvalidArgument, "kernel needs at least k variables");
  if ((family == GenFamily::Pigeonhole || kernel == KernelKind::Pigeonhole) && holes < 1)
    throw Error(Errc::InvalidArgument, "pigeonhole needs at least one hole");
}

Cnf gen_random_ksat(std::uint32_t n, std::size_t m, std::uint32_t k, Rng& rng) {
  if (k > n || k == 0)
    throw Error(Errc::InvalidArgument, "need 1 <= k <= n");
  Cnf cnf;
  cnf.num_vars = n;
  cnf.clauses.reserve(m);
  std::uniform_int_distribution<std::uint32_t> var_dist(1, n);
  std::bernoulli_distribution sign(0.5);
  std::vector<std::uint32_t> pool;
  for (std::size_t c = 0; c < m; ++c) {
    std::vector<std::uint32_t> vars;
    if (2 * k <= n) {
      while (vars.size() < k) {
        std::uint32_t v = var_dist(rng);
        if (std::find(vars.begin(), vars.end(), v) == vars.end())
          vars.push_back(v);
      }
    } else {
      pool.resize(n);
      std::iota(pool.begin(), pool.end(), 1u);
      for (std::uint32_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::uint32_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      vars.assign(pool.begin(), pool.begin() + k);
    }
    std::vector<Lit> lits;
    for (std::uint32_t v : vars)
      lits.push_back(Lit{v, sign(rng)});
    cnf.clauses.push_back(Clause::make(std::move(lits)));
  }
  return cnf;
}

Cnf gen_pigeonhole(std::uint32_t holes) {
  if (holes < 1)
    throw Error(Errc::InvalidArgument, "pigeonhole needs at least one hole");
  const std::uint32_t pigeons = holes + 1;
  auto var = [&](std::uint32_t p, std::uint32_t h) { return p * holes + h + 1; };
  Cnf cnf;
  cnf.num_vars = pigeons * holes;
  cnf.name = "php_" + std::to_string(pigeons) + "_" + std::to_string(holes);
  for (std::uint32_t p = 0; p < pigeons; ++p) {
    std::vector<Lit> lits;
    for (std::uint32_t h = 0; h < holes; ++h)
      lits.push_back(Lit{var(p, h), true});
    cnf.clauses.push_back(Clause::make(std::move(lits)));
  }
  for (std::uint32_t h = 0; h < holes; ++h)
    for (std::uint32_t p = 0; p < pigeons; ++p)
      for (std::uint32_t q = p + 1; q < pigeons; ++q)
        cnf.clauses.push_back(Clause::make({Lit{var(p, h), false}, Lit{var(q, h), false}}));
  return cnf;
}

std::vector<std::uint32_t> shuffle_instance(Cnf& cnf, Rng& rng) {
  std::vector<std::uint32_t> perm(cnf.num_vars);
  std::iota(perm.begin(), perm.end(), 1u);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (auto& c : cnf.clauses)
    for (Lit& l : c.lits)
      l.var = perm[l.var - 1];
  std::shuffle(cnf.clauses.begin(), cnf.clauses.end(), rng);
  return perm;
}

PlantedInstance plant_kernel(const Cnf& kernel, std::uint32_t n_pad_vars,
                             double pad_clause_ratio, std::uint32_t k, Rng& rng,
                             const SolverConfig& check) {
  const std::uint32_t nk = kernel.num_vars;
  Cnf padding;
  padding.num_vars = n_pad_vars;
  if (n_pad_vars > 0) {
    const std::uint32_t pad_k = std::min(k, n_pad_vars);
    int attempt = 0;
    for (;; ++attempt) {
      if (attempt == kMaxResamples)
        throw Error(Errc::GenerationFailed, "padding stayed UNSAT after resampling");
      padding = gen_random_ksat(n_pad_vars, clause_count(pad_clause_ratio, n_pad_vars),
                                pad_k, rng);
      auto unsat = is_unsat(padding, check);
      if (unsat && !*unsat)
        break;
    }
  }

  struct Tagged {
    Clause clause;
    bool kernel;
  };
  std::vector<Tagged> all;
  for (const auto& c : kernel.clauses)
    all.push_back({c, true});
  for (auto c : padding.clauses) {
    for (Lit& l : c.lits)
      l.var += nk;
    all.push_back({std::move(c), false});
  }

  const std::uint32_t n = nk + n_pad_vars;
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 1u);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::shuffle(all.begin(), all.end(), rng);

  PlantedInstance out;
  out.cnf.num_vars = n;
  out.cnf.name = kernel.name;
  for (std::size_t j = 0; j < all.size(); ++j) {
    for (Lit& l : all[j].clause.lits)
      l.var = perm[l.var - 1];
    (all[j].kernel ? out.kernel_clauses : out.padding_clauses).push_back(j);
    out.cnf.clauses.push_back(std::move(all[j].clause));
  }
  for (std::uint32_t v = 1; v <= nk; ++v)
    out.core_vars.push_back(perm[v - 1]);
  std::sort(out.core_vars.begin(), out.core_vars.end());
  return out;
}

PlantedInstance gen_planted_core(const GenSpec& spec, Rng& rng, const SolverConfig& check) {
  spec.validate();
  Cnf kernel;
  if (spec.kernel == KernelKind::Pigeonhole) {
    kernel = gen_pigeonhole(spec.holes);
  } else {
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxResamples)
        throw Error(Errc::GenerationFailed, "kernel not verified UNSAT after " +
                                                std::to_string(kMaxResamples) +
                                                " resamples");
      kernel = gen_random_ksat(spec.n_core_vars,
                               clause_count(spec.clause_ratio, spec.n_core_vars), spec.k,
                               rng);
      auto unsat = is_unsat(kernel, check);
      if (unsat && *unsat)
        break;
    }
  }
  return plant_kernel(kernel, spec.n_pad_vars, spec.pad_clause_ratio, spec.k, rng, check);
}

Cnf gen_sat_instance(const GenSpec& spec, Rng& rng, const SolverConfig& check) {
  spec.validate();
  const std::uint32_t n = spec.n_core_vars + spec.n_pad_vars;
  constexpr double kSatRatio = 3.5;
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    Cnf cnf = gen_random_ksat(n, clause_count(kSatRatio, n), std::min(spec.k, n), rng);
    auto unsat = is_unsat(cnf, check);
    if (unsat && !*unsat)
      return cnf;
  }
  throw Error(Errc::GenerationFailed, "no satisfiable instance after resampling");
}

CorpusPreset parse_corpus_preset(const std::string& name) {
  if (name == "lec-like") return CorpusPreset::LecLike;
  if (name == "comp-like") return CorpusPreset::CompLike;
  if (name == "bench-hard") return CorpusPreset::BenchHard;
  throw Error(Errc::InvalidArgument, "unknown preset '" + name + "'");
}

GenSpec draw_preset_spec(CorpusPreset preset, Rng& rng) {
  GenSpec spec;
  spec.family = GenFamily::PlantedCore;
  spec.kernel = KernelKind::RandomKcnf;
  spec.k = 3;
  std::uniform_int_distribution<std::uint32_t> size(60, 300);
  switch (preset) {
  case CorpusPreset::LecLike: {
    std::uniform_real_distribution<double> frac(0.90, 0.97);
    const std::uint32_t n = size(rng);
    spec.n_core_vars = static_cast<std::uint32_t>(std::lround(frac(rng) * n));
    spec.n_pad_vars = n - spec.n_core_vars;
    spec.clause_ratio = 10.0;
    spec.pad_clause_ratio = 1.5;
    break;
  }
  case CorpusPreset::CompLike: {
    std::uniform_real_distribution<double> frac(0.30, 0.50);
    const std::uint32_t n = size(rng);
    spec.n_core_vars = static_cast<std::uint32_t>(std::lround(frac(rng) * n));
    spec.n_pad_vars = n - spec.n_core_vars;
    spec.clause_ratio = 10.0;
    spec.pad_clause_ratio = 3.0;
    break;
  }
  case CorpusPreset::BenchHard: {
    std::uniform_int_distribution<std::uint32_t> core(170, 200);
    spec.n_core_vars = core(rng);
    spec.n_pad_vars = spec.n_core_vars / 4;
    spec.clause_ratio = 5.0;
    spec.pad_clause_ratio = 2.0;
    break;
  }
  }
  spec.seed = rng();
  return spec;
}

void write_label_file(const std::string& path, const std::vector<std::uint32_t>& vars) {
  std::ofstream out(path);
  if (!out)
    throw Error(Errc::Io, "cannot write " + path);
  out << "core-vars\n";
  for (std::size_t i = 0; i < vars.size(); ++i)
    out << (i ? " " : "") << vars[i];
  out << '\n';
  if (!out)
    throw Error(Errc::Io, "write failed for " + path);
}

std::vector<std::uint32_t> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::Io, "cannot open " + path);
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r')
    header.pop_back();
  if (header != "core-vars")
    throw Error(Errc::Io, path + ": missing 'core-vars' header");
  std::vector<std::uint32_t> vars;
  std::int64_t v = 0;
  while (in >> v) {
    if (v < 1)
      throw Error(Errc::Io, path + ": bad variable index");
    vars.push_back(static_cast<std::uint32_t>(v));
  }
  if (!in.eof())
    throw Error(Errc::Io, path + ": unreadable label entry");
  return vars;
}

std::vector<std::string> write_corpus(const std::string& dir, const CorpusOptions& options,
                                      const SolverConfig& check) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> paths;
  for (std::size_t i = 0; i < options.count; ++i) {
    Rng rng = instance_rng(options.seed, i);
    char stem[32];
    std::snprintf(stem, sizeof stem, "inst_%05zu", i);
    const std::string base = (fs::path(dir) / stem).string();
    GenSpec spec = draw_preset_spec(options.preset, rng);
    std::bernoulli_distribution make_sat(options.sat_fraction);
    if (make_sat(rng)) {
      Cnf cnf = gen_sat_instance(spec, rng, check);
      cnf.name = stem;
      write_dimacs_file(cnf, base + ".cnf");
    } else {
      PlantedInstance inst = gen_planted_core(spec, rng, check);
      inst.cnf.name = stem;
      write_dimacs_file(inst.cnf, base + ".cnf");
      write_label_file(base + ".labels", inst.core_vars);
    }
    paths.push_back(base + ".cnf");
  }
  return paths;
}

} // namespace coreguide
