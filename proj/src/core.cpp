#include "coreguide/error.hpp"
#include "coreguide/solver.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace coreguide {

BranchSeed seed_from_prediction(const Prediction& pred) {
  BranchSeed seed;
  seed.scores = pred.probs;
  seed.order.resize(pred.probs.size());
  std::iota(seed.order.begin(), seed.order.end(), 1u);
  std::stable_sort(seed.order.begin(), seed.order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return pred.probs[a - 1] > pred.probs[b - 1];
                   });
  return seed;
}

bool verify_model(const Cnf& cnf, const std::vector<bool>& assignment) {
  if (assignment.size() != cnf.num_vars)
    throw Error(Errc::LengthMismatch, "assignment covers " +
                                          std::to_string(assignment.size()) +
                                          " of " + std::to_string(cnf.num_vars) +
                                          " variables");
  return std::all_of(cnf.clauses.begin(), cnf.clauses.end(),
                     [&](const Clause& c) { return clause_satisfied(c, assignment); });
}

Verdict solve(const Cnf& cnf, const SolverConfig& cfg,
              const std::optional<BranchSeed>& seed) {
  const auto start = std::chrono::steady_clock::now();
  Solver solver(cfg);
  solver.ensure_vars(cnf.num_vars);
  for (const auto& c : cnf.clauses)
    if (!solver.add_clause(c.lits))
      break;
  if (seed) {
    if (seed->order.size() != cnf.num_vars)
      throw Error(Errc::LengthMismatch, "seed order length differs from variable count");
    solver.seed(*seed);
  }
  Verdict v = solver.solve();
  v.stats.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  if (v.kind == VerdictKind::Sat) {
    v.model.resize(cnf.num_vars);
    if (!verify_model(cnf, v.model))
      throw std::logic_error("solver produced a model that violates a clause");
  }
  return v;
}

CoreResult extract_core(const Cnf& cnf, const SolverConfig& cfg,
                        const CoreOptions& options) {
  const std::uint32_t n = cnf.num_vars;
  const auto m = static_cast<std::uint32_t>(cnf.clauses.size());
  Solver solver(cfg);
  solver.ensure_vars(n + m);
  // Clause j becomes c_j ∨ ¬s_j with selector s_j = n + j + 1.
  for (std::uint32_t j = 0; j < m; ++j) {
    std::vector<Lit> lits = cnf.clauses[j].lits;
    lits.push_back(Lit{n + j + 1, false});
    solver.add_clause(lits);
  }

  CoreResult result;
  auto accumulate = [&](const SolveStats& s) {
    result.stats.decisions += s.decisions;
    result.stats.propagations += s.propagations;
    result.stats.conflicts += s.conflicts;
    result.stats.restarts += s.restarts;
    result.stats.wall_ms += s.wall_ms;
  };
  auto selectors = [&](const std::vector<std::size_t>& clauses) {
    std::vector<Lit> out;
    for (std::size_t j : clauses)
      out.push_back(Lit{n + static_cast<std::uint32_t>(j) + 1, true});
    return out;
  };
  auto core_from_failed = [&]() {
    std::vector<std::size_t> core;
    for (const Lit& l : solver.failed_assumptions())
      core.push_back(l.var - n - 1);
    std::sort(core.begin(), core.end());
    core.erase(std::unique(core.begin(), core.end()), core.end());
    if (core.empty())
      throw std::logic_error("UNSAT under selectors without a failed assumption");
    return core;
  };

  std::vector<std::size_t> all(m);
  std::iota(all.begin(), all.end(), std::size_t{0});
  Verdict v = solver.solve(selectors(all));
  accumulate(v.stats);
  if (v.kind == VerdictKind::Sat)
    throw Error(Errc::NotUnsat, "instance is satisfiable");
  if (v.kind == VerdictKind::Halted)
    throw Error(Errc::BudgetExhausted, "budget exhausted before refutation");
  result.clauses = core_from_failed();

  if (options.minimize) {
    const std::vector<std::size_t> candidates = result.clauses;
    for (std::size_t drop : candidates) {
      if (!std::binary_search(result.clauses.begin(), result.clauses.end(), drop))
        continue;
      std::vector<std::size_t> trial;
      for (std::size_t j : result.clauses)
        if (j != drop)
          trial.push_back(j);
      Verdict t = solver.solve(selectors(trial));
      accumulate(t.stats);
      if (t.kind == VerdictKind::Unsat)
        result.clauses = core_from_failed();
    }
  }

  std::vector<std::uint8_t> used(n + 1, 0);
  for (std::size_t j : result.clauses)
    for (const Lit& l : cnf.clauses[j].lits)
      used[l.var] = 1;
  for (std::uint32_t var = 1; var <= n; ++var)
    if (used[var])
      result.vars.push_back(var);
  return result;
}

std::optional<bool> verify_core(const Cnf& cnf,
                                const std::vector<std::size_t>& core_clauses,
                                const SolverConfig& cfg) {
  Cnf sub = select_clauses(cnf, core_clauses);

  // Renumber the occurring variables densely so small cores go to brute force.
  std::vector<std::uint32_t> remap(cnf.num_vars + 1, 0);
  std::uint32_t next = 0;
  for (auto& c : sub.clauses)
    for (Lit& l : c.lits) {
      if (remap[l.var] == 0)
        remap[l.var] = ++next;
      l.var = remap[l.var];
    }
  sub.num_vars = next;

  if (sub.num_vars <= kMinCoreMaxVars)
    return brute_force_solve(sub).kind == VerdictKind::Unsat;
  Verdict v = solve(sub, cfg);
  if (v.kind == VerdictKind::Halted)
    return std::nullopt;
  return v.kind == VerdictKind::Unsat;
}

std::string verdict_record(const std::string& instance, const Verdict& v) {
  std::ostringstream out;
  out << instance << ',' << verdict_name(v.kind) << ',' << v.stats.decisions << ','
      << v.stats.propagations << ',' << v.stats.conflicts << ',' << v.stats.restarts
      << ',' << std::fixed << std::setprecision(3) << v.stats.wall_ms;
  return out.str();
}

} // namespace coreguide
