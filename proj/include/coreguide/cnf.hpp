#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace coreguide {

/// A literal over a 1-based variable.
struct Lit {
  std::uint32_t var = 0;
  bool positive = true;

  static Lit from_dimacs(std::int64_t value) {
    return value > 0 ? Lit{static_cast<std::uint32_t>(value), true}
                     : Lit{static_cast<std::uint32_t>(-value), false};
  }
  std::int64_t to_dimacs() const {
    return positive ? static_cast<std::int64_t>(var)
                    : -static_cast<std::int64_t>(var);
  }
  Lit operator~() const { return Lit{var, !positive}; }

  friend bool operator==(const Lit&, const Lit&) = default;
};

struct Clause {
  std::vector<Lit> lits;
  bool tautological = false;

  /// Drops repeated literals (first occurrence wins) and flags x ∨ ¬x.
  static Clause make(std::vector<Lit> lits);

  std::size_t size() const { return lits.size(); }
  bool empty() const { return lits.empty(); }

  friend bool operator==(const Clause&, const Clause&) = default;
};

struct Cnf {
  std::uint32_t num_vars = 0;
  std::vector<Clause> clauses;
  std::string name;

  std::size_t num_clauses() const { return clauses.size(); }

  /// Convenience for tests and generators: clauses given as DIMACS integers.
  static Cnf from_ints(std::uint32_t num_vars,
                       const std::vector<std::vector<int>>& clauses,
                       std::string name = {});
};

enum class VerdictKind { Sat, Unsat, Halted };

const char* verdict_name(VerdictKind kind) noexcept;

struct SolveStats {
  std::uint64_t decisions = 0;
  std::uint64_t propagations = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t restarts = 0;
  double wall_ms = 0.0;
  // FNV-1a over the decision literal sequence; equal hashes mean equal
  // search trajectories.
  std::uint64_t decision_hash = 14695981039346656037ull;
};

struct Verdict {
  VerdictKind kind = VerdictKind::Halted;
  std::vector<bool> model; // model[i] is the value of variable i+1
  std::vector<std::size_t> core_clauses;
  SolveStats stats;
};

Cnf parse_dimacs(std::istream& in, std::string name = {});
Cnf parse_dimacs(std::string_view text, std::string name = {});
Cnf read_dimacs_file(const std::string& path);

std::string write_dimacs(const Cnf& cnf);
void write_dimacs_file(const Cnf& cnf, const std::string& path);

/// 1-based node index: +v ↦ v, ¬v ↦ n + v.
std::uint32_t lit_node_index(Lit lit, std::uint32_t num_vars);

/// 0-based counterpart used by the graph storage.
inline std::uint32_t lit_node(Lit lit, std::uint32_t num_vars) {
  return lit.positive ? lit.var - 1 : num_vars + lit.var - 1;
}

bool clause_satisfied(const Clause& clause, const std::vector<bool>& model);

inline constexpr std::uint32_t kBruteForceMaxVars = 26;
inline constexpr std::uint32_t kMinCoreMaxVars = 20;
inline constexpr std::size_t kMinCoreMaxClauses = 16;

/// Exhaustive search in lexicographic order with x1 most significant and
/// false before true.
Verdict brute_force_solve(const Cnf& cnf);

/// Minimum-cardinality unsatisfiable clause subset; ties go to the
/// lexicographically smallest index set.
std::vector<std::size_t> brute_force_min_core(const Cnf& cnf);

/// Sub-formula made of the listed clauses, same variable numbering.
Cnf select_clauses(const Cnf& cnf, const std::vector<std::size_t>& indices);

} // namespace coreguide
