#pragma once

#include "coreguide/cnf.hpp"
#include "coreguide/model.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace coreguide {

struct SolverConfig {
  std::uint64_t conflict_budget = 0; // 0 = unlimited
  std::uint64_t time_budget_ms = 0;  // 0 = unlimited
  double activity_decay = 0.95;
  std::uint64_t restart_base = 64; // conflicts per Luby unit
  bool phase_saving = true;
  std::uint64_t seed = 0;
  double random_decision_freq = 0.0;

  // Test hooks.
  bool record_learnts = false;
  bool check_propagation = false;

  void validate() const;
};

/// Initial decision scores and queue. order holds 1-based variables.
struct BranchSeed {
  std::vector<double> scores;
  std::vector<std::uint32_t> order;
};

BranchSeed seed_from_prediction(const Prediction& pred);

/// Incremental CDCL solver: two watched literals, first-UIP learning, VSIDS,
/// Luby restarts, phase saving and solving under assumptions.
class Solver {
public:
  explicit Solver(SolverConfig cfg = {});

  std::uint32_t num_vars() const { return static_cast<std::uint32_t>(assigns_.size()); }
  void ensure_vars(std::uint32_t n);

  /// Returns false once the clause set is known UNSAT at the root.
  bool add_clause(std::span<const Lit> lits);

  /// Installs initial activities and queue order for variables 1..order.size().
  void seed(const BranchSeed& seed);

  /// Sat/Unsat/Halted. Budgets apply per call. On UNSAT under assumptions,
  /// failed_assumptions() lists the assumptions used in the refutation.
  Verdict solve(std::span<const Lit> assumptions = {});

  const std::vector<Lit>& failed_assumptions() const { return failed_; }
  const std::vector<std::vector<Lit>>& learnt_log() const { return learnt_log_; }
  double activity(std::uint32_t var) const { return activity_[var - 1]; }

private:
  using LitCode = std::uint32_t;
  using ClauseRef = std::uint32_t;
  static constexpr ClauseRef kNoReason = ~ClauseRef{0};
  static constexpr LitCode kUndefLit = ~LitCode{0};
  enum Value : std::uint8_t { True = 0, False = 1, Undef = 2 };

  struct ClauseData {
    std::vector<LitCode> lits;
    double activity = 0.0;
    bool learnt = false;
    bool deleted = false;
  };
  struct Watcher {
    ClauseRef clause;
    LitCode blocker;
  };

  static LitCode encode(Lit l) { return 2 * (l.var - 1) + (l.positive ? 0 : 1); }
  static Lit decode(LitCode c) { return Lit{c / 2 + 1, (c & 1) == 0}; }
  static std::uint32_t var_of(LitCode c) { return c >> 1; }
  Value value(LitCode c) const {
    Value v = assigns_[c >> 1];
    return v == Undef ? Undef : static_cast<Value>(v ^ (c & 1));
  }
  std::uint32_t level(std::uint32_t v) const { return levels_[v]; }
  std::uint32_t decision_level() const { return static_cast<std::uint32_t>(trail_lim_.size()); }

  Value search(std::uint64_t max_conflicts, const std::vector<LitCode>& assumptions);
  void attach(ClauseRef cr);
  void enqueue(LitCode lit, ClauseRef reason);
  ClauseRef propagate();
  void analyze(ClauseRef confl, std::vector<LitCode>& learnt, std::uint32_t& bt_level);
  void analyze_final(LitCode falsified_assumption);
  void cancel_until(std::uint32_t level);
  LitCode pick_branch();
  void bump_var(std::uint32_t v);
  void bump_clause(ClauseData& c);
  void reduce_db();
  bool locked(ClauseRef cr) const;
  bool budget_exhausted() const;
  void check_propagation_fixpoint() const;

  // Activity heap ordered by (activity desc, rank asc).
  bool heap_less(std::uint32_t a, std::uint32_t b) const;
  void heap_insert(std::uint32_t v);
  std::uint32_t heap_pop();
  void heap_up(std::size_t i);
  void heap_down(std::size_t i);
  bool heap_contains(std::uint32_t v) const { return heap_pos_[v] >= 0; }

  SolverConfig cfg_;
  bool ok_ = true;
  std::vector<ClauseData> clauses_;
  std::vector<ClauseRef> learnts_;
  std::vector<std::vector<Watcher>> watches_;
  std::vector<Value> assigns_;
  std::vector<std::uint32_t> levels_;
  std::vector<ClauseRef> reasons_;
  std::vector<std::uint8_t> saved_phase_; // 1 = positive
  std::vector<std::uint8_t> seen_;
  std::vector<double> activity_;
  std::vector<std::uint32_t> rank_;
  std::vector<std::uint32_t> heap_;
  std::vector<std::int64_t> heap_pos_;
  std::vector<LitCode> trail_;
  std::vector<std::size_t> trail_lim_;
  std::size_t qhead_ = 0;
  double var_inc_ = 1.0;
  double clause_inc_ = 1.0;
  double max_learnts_ = 0.0;
  std::size_t num_original_ = 0;
  std::vector<Lit> failed_;
  std::vector<std::vector<Lit>> learnt_log_;
  std::mt19937_64 rng_;

  SolveStats stats_;
  std::uint64_t conflicts_at_start_ = 0;
  std::chrono::steady_clock::time_point started_;
};

/// One-shot solve. With a seed the initial activities and queue come from it;
/// otherwise activities start at 0 and the queue is ascending variable index.
/// A SAT verdict's model is checked against every clause.
Verdict solve(const Cnf& cnf, const SolverConfig& cfg = {},
              const std::optional<BranchSeed>& seed = std::nullopt);

bool verify_model(const Cnf& cnf, const std::vector<bool>& assignment);

struct CoreOptions {
  bool minimize = false; // one deletion pass over the extracted core
};

struct CoreResult {
  std::vector<std::size_t> clauses; // ascending clause indices
  std::vector<std::uint32_t> vars;  // ascending 1-based variables
  SolveStats stats;
};

/// Selector-based core extraction. Throws NotUnsat for satisfiable input and
/// BudgetExhausted when the budget runs out first.
CoreResult extract_core(const Cnf& cnf, const SolverConfig& cfg = {},
                        const CoreOptions& options = {});

/// true: the subset is UNSAT; false: SAT; nullopt: budget ran out.
std::optional<bool> verify_core(const Cnf& cnf,
                                const std::vector<std::size_t>& core_clauses,
                                const SolverConfig& cfg = {});

/// CSV record "instance,kind,decisions,propagations,conflicts,restarts,wall_ms".
std::string verdict_record(const std::string& instance, const Verdict& v);
inline constexpr const char* kVerdictRecordHeader =
    "instance,kind,decisions,propagations,conflicts,restarts,wall_ms";

} // namespace coreguide
