#include "coreguide/solver.hpp"

#include "coreguide/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coreguide {

namespace {

constexpr double kVarRescale = 1e100;
constexpr double kClauseRescale = 1e20;
constexpr double kClauseDecay = 0.999;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

// Luby sequence 1,1,2,1,1,2,4,... (x is 0-based).
double luby(double y, std::uint64_t x) {
  std::uint64_t size = 1;
  int seq = 0;
  while (size < x + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  while (size - 1 != x) {
    size = (size - 1) >> 1;
    --seq;
    x = x % size;
  }
  return std::pow(y, seq);
}

} // namespace

void SolverConfig::validate() const {
  if (!(activity_decay > 0.0 && activity_decay < 1.0))
    throw Error(Errc::InvalidArgument, "activity_decay must lie in (0,1)");
  if (restart_base == 0)
    throw Error(Errc::InvalidArgument, "restart_base must be positive");
  if (!(random_decision_freq >= 0.0 && random_decision_freq <= 1.0))
    throw Error(Errc::InvalidArgument, "random_decision_freq must lie in [0,1]");
}

Solver::Solver(SolverConfig cfg) : cfg_(cfg), rng_(cfg.seed) { cfg_.validate(); }

void Solver::ensure_vars(std::uint32_t n) {
  const std::uint32_t old = num_vars();
  if (n <= old)
    return;
  assigns_.resize(n, Undef);
  levels_.resize(n, 0);
  reasons_.resize(n, kNoReason);
  saved_phase_.resize(n, 0);
  seen_.resize(n, 0);
  activity_.resize(n, 0.0);
  rank_.resize(n);
  heap_pos_.resize(n, -1);
  watches_.resize(2 * static_cast<std::size_t>(n));
  for (std::uint32_t v = old; v < n; ++v) {
    rank_[v] = v;
    heap_insert(v);
  }
}

bool Solver::add_clause(std::span<const Lit> lits) {
  if (!ok_)
    return false;
  cancel_until(0);
  std::vector<LitCode> c;
  c.reserve(lits.size());
  for (const Lit& l : lits) {
    if (l.var == 0)
      throw Error(Errc::VarOutOfRange, "variable 0");
    ensure_vars(l.var);
    c.push_back(encode(l));
  }
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  std::vector<LitCode> kept;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i + 1 < c.size() && (c[i] ^ 1) == c[i + 1])
      return true; // tautology
    if (value(c[i]) == True)
      return true;
    if (value(c[i]) != False)
      kept.push_back(c[i]);
  }
  ++num_original_;
  if (kept.empty()) {
    ok_ = false;
    return false;
  }
  if (kept.size() == 1) {
    enqueue(kept[0], kNoReason);
    ok_ = propagate() == kNoReason;
    return ok_;
  }
  clauses_.push_back(ClauseData{std::move(kept), 0.0, false, false});
  attach(static_cast<ClauseRef>(clauses_.size() - 1));
  return true;
}

void Solver::seed(const BranchSeed& seed) {
  const auto n = static_cast<std::uint32_t>(seed.order.size());
  if (seed.scores.size() != n)
    throw Error(Errc::LengthMismatch, "seed scores and order differ in length");
  ensure_vars(n);
  std::vector<std::uint8_t> placed(n, 0);
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::uint32_t v = seed.order[k];
    if (v < 1 || v > n || placed[v - 1])
      throw Error(Errc::InvalidArgument, "seed order is not a permutation of 1..n");
    placed[v - 1] = 1;
    rank_[v - 1] = k;
    activity_[v - 1] = seed.scores[v - 1];
  }
  for (std::uint32_t v = n; v < num_vars(); ++v)
    rank_[v] = v;
  for (std::uint32_t v : heap_)
    heap_pos_[v] = -1;
  heap_.clear();
  for (std::uint32_t v = 0; v < num_vars(); ++v)
    if (assigns_[v] == Undef)
      heap_insert(v);
}

//===----------------------------------------------------------------------===//
// Trail and propagation
//===----------------------------------------------------------------------===//

void Solver::attach(ClauseRef cr) {
  const auto& c = clauses_[cr].lits;
  watches_[c[0] ^ 1].push_back(Watcher{cr, c[1]});
  watches_[c[1] ^ 1].push_back(Watcher{cr, c[0]});
}

void Solver::enqueue(LitCode lit, ClauseRef reason) {
  const std::uint32_t v = var_of(lit);
  assigns_[v] = static_cast<Value>(lit & 1);
  levels_[v] = decision_level();
  reasons_[v] = reason;
  trail_.push_back(lit);
}

Solver::ClauseRef Solver::propagate() {
  ClauseRef confl = kNoReason;
  while (qhead_ < trail_.size()) {
    const LitCode p = trail_[qhead_++];
    const LitCode false_lit = p ^ 1;
    ++stats_.propagations;
    auto& ws = watches_[p];
    std::size_t i = 0, j = 0;
    while (i < ws.size()) {
      const Watcher w = ws[i];
      if (value(w.blocker) == True) {
        ws[j++] = ws[i++];
        continue;
      }
      auto& lits = clauses_[w.clause].lits;
      if (lits[0] == false_lit)
        std::swap(lits[0], lits[1]);
      ++i;
      const LitCode first = lits[0];
      const Watcher moved{w.clause, first};
      if (first != w.blocker && value(first) == True) {
        ws[j++] = moved;
        continue;
      }
      bool found = false;
      for (std::size_t k = 2; k < lits.size(); ++k) {
        if (value(lits[k]) != False) {
          lits[1] = lits[k];
          lits[k] = false_lit;
          watches_[lits[1] ^ 1].push_back(moved);
          found = true;
          break;
        }
      }
      if (found)
        continue;
      ws[j++] = moved;
      if (value(first) == False) {
        confl = w.clause;
        qhead_ = trail_.size();
        while (i < ws.size())
          ws[j++] = ws[i++];
      } else {
        enqueue(first, w.clause);
      }
    }
    ws.resize(j);
  }
  return confl;
}

void Solver::cancel_until(std::uint32_t target) {
  if (decision_level() <= target)
    return;
  for (std::size_t i = trail_.size(); i-- > trail_lim_[target];) {
    const std::uint32_t v = var_of(trail_[i]);
    assigns_[v] = Undef;
    reasons_[v] = kNoReason;
    if (cfg_.phase_saving)
      saved_phase_[v] = (trail_[i] & 1) == 0 ? 1 : 0;
    if (!heap_contains(v))
      heap_insert(v);
  }
  trail_.resize(trail_lim_[target]);
  trail_lim_.resize(target);
  qhead_ = trail_.size();
}

//===----------------------------------------------------------------------===//
// Conflict analysis
//===----------------------------------------------------------------------===//

void Solver::analyze(ClauseRef confl, std::vector<LitCode>& learnt,
                     std::uint32_t& bt_level) {
  learnt.clear();
  learnt.push_back(kUndefLit);
  int path = 0;
  LitCode p = kUndefLit;
  std::size_t index = trail_.size();

  do {
    ClauseData& c = clauses_[confl];
    if (c.learnt)
      bump_clause(c);
    for (std::size_t k = (p == kUndefLit ? 0 : 1); k < c.lits.size(); ++k) {
      const LitCode q = c.lits[k];
      const std::uint32_t v = var_of(q);
      if (!seen_[v] && level(v) > 0) {
        seen_[v] = 1;
        bump_var(v);
        if (level(v) >= decision_level())
          ++path;
        else
          learnt.push_back(q);
      }
    }
    while (!seen_[var_of(trail_[--index])]) {
    }
    p = trail_[index];
    confl = reasons_[var_of(p)];
    seen_[var_of(p)] = 0;
    --path;
  } while (path > 0);
  learnt[0] = p ^ 1;

  bt_level = 0;
  if (learnt.size() > 1) {
    std::size_t max_i = 1;
    for (std::size_t k = 2; k < learnt.size(); ++k)
      if (level(var_of(learnt[k])) > level(var_of(learnt[max_i])))
        max_i = k;
    std::swap(learnt[1], learnt[max_i]);
    bt_level = level(var_of(learnt[1]));
  }
  for (std::size_t k = 1; k < learnt.size(); ++k)
    seen_[var_of(learnt[k])] = 0;
}

void Solver::analyze_final(LitCode falsified) {
  failed_.clear();
  failed_.push_back(decode(falsified));
  if (decision_level() == 0)
    return;
  seen_[var_of(falsified)] = 1;
  for (std::size_t i = trail_.size(); i-- > trail_lim_[0];) {
    const std::uint32_t x = var_of(trail_[i]);
    if (!seen_[x])
      continue;
    if (reasons_[x] == kNoReason) {
      failed_.push_back(decode(trail_[i]));
    } else {
      const auto& c = clauses_[reasons_[x]].lits;
      for (std::size_t k = 1; k < c.size(); ++k)
        if (level(var_of(c[k])) > 0)
          seen_[var_of(c[k])] = 1;
    }
    seen_[x] = 0;
  }
  seen_[var_of(falsified)] = 0;
}

//===----------------------------------------------------------------------===//
// Activities and clause database
//===----------------------------------------------------------------------===//

void Solver::bump_var(std::uint32_t v) {
  activity_[v] += var_inc_;
  if (activity_[v] > kVarRescale) {
    for (double& a : activity_)
      a /= kVarRescale;
    var_inc_ /= kVarRescale;
  }
  if (heap_contains(v))
    heap_up(static_cast<std::size_t>(heap_pos_[v]));
}

void Solver::bump_clause(ClauseData& c) {
  c.activity += clause_inc_;
  if (c.activity > kClauseRescale) {
    for (ClauseRef cr : learnts_)
      clauses_[cr].activity /= kClauseRescale;
    clause_inc_ /= kClauseRescale;
  }
}

bool Solver::locked(ClauseRef cr) const {
  const LitCode first = clauses_[cr].lits[0];
  return reasons_[var_of(first)] == cr && value(first) == True;
}

void Solver::reduce_db() {
  std::vector<ClauseRef> sorted = learnts_;
  std::stable_sort(sorted.begin(), sorted.end(), [&](ClauseRef a, ClauseRef b) {
    return clauses_[a].activity < clauses_[b].activity;
  });
  std::size_t removed = 0;
  const std::size_t half = sorted.size() / 2;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    ClauseData& c = clauses_[sorted[k]];
    if (k < half && c.lits.size() > 2 && !locked(sorted[k])) {
      c.deleted = true;
      ++removed;
    }
  }
  if (removed == 0)
    return;
  for (auto& ws : watches_)
    std::erase_if(ws, [&](const Watcher& w) { return clauses_[w.clause].deleted; });
  std::erase_if(learnts_, [&](ClauseRef cr) {
    if (!clauses_[cr].deleted)
      return false;
    clauses_[cr].lits = {};
    return true;
  });
  max_learnts_ *= 1.1;
}

//===----------------------------------------------------------------------===//
// Decision heap
//===----------------------------------------------------------------------===//

bool Solver::heap_less(std::uint32_t a, std::uint32_t b) const {
  if (activity_[a] != activity_[b])
    return activity_[a] > activity_[b];
  return rank_[a] < rank_[b];
}

void Solver::heap_insert(std::uint32_t v) {
  heap_pos_[v] = static_cast<std::int64_t>(heap_.size());
  heap_.push_back(v);
  heap_up(heap_.size() - 1);
}

std::uint32_t Solver::heap_pop() {
  const std::uint32_t top = heap_[0];
  heap_[0] = heap_.back();
  heap_pos_[heap_[0]] = 0;
  heap_.pop_back();
  heap_pos_[top] = -1;
  if (!heap_.empty())
    heap_down(0);
  return top;
}

void Solver::heap_up(std::size_t i) {
  const std::uint32_t v = heap_[i];
  while (i > 0) {
    const std::size_t parent = (i - 1) / 2;
    if (!heap_less(v, heap_[parent]))
      break;
    heap_[i] = heap_[parent];
    heap_pos_[heap_[i]] = static_cast<std::int64_t>(i);
    i = parent;
  }
  heap_[i] = v;
  heap_pos_[v] = static_cast<std::int64_t>(i);
}

void Solver::heap_down(std::size_t i) {
  const std::uint32_t v = heap_[i];
  for (;;) {
    std::size_t child = 2 * i + 1;
    if (child >= heap_.size())
      break;
    if (child + 1 < heap_.size() && heap_less(heap_[child + 1], heap_[child]))
      ++child;
    if (!heap_less(heap_[child], v))
      break;
    heap_[i] = heap_[child];
    heap_pos_[heap_[i]] = static_cast<std::int64_t>(i);
    i = child;
  }
  heap_[i] = v;
  heap_pos_[v] = static_cast<std::int64_t>(i);
}

Solver::LitCode Solver::pick_branch() {
  std::uint32_t next = ~std::uint32_t{0};
  if (cfg_.random_decision_freq > 0.0 && !heap_.empty()) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng_) < cfg_.random_decision_freq) {
      std::uniform_int_distribution<std::size_t> pick(0, heap_.size() - 1);
      const std::uint32_t v = heap_[pick(rng_)];
      if (assigns_[v] == Undef)
        next = v;
    }
  }
  while (next == ~std::uint32_t{0} || assigns_[next] != Undef) {
    if (heap_.empty())
      return kUndefLit;
    next = heap_pop();
  }
  return 2 * next + (saved_phase_[next] ? 0 : 1);
}

//===----------------------------------------------------------------------===//
// Search
//===----------------------------------------------------------------------===//

bool Solver::budget_exhausted() const {
  if (cfg_.conflict_budget > 0 && stats_.conflicts >= cfg_.conflict_budget)
    return true;
  if (cfg_.time_budget_ms > 0) {
    const auto elapsed = std::chrono::steady_clock::now() - started_;
    if (std::chrono::duration<double, std::milli>(elapsed).count() >=
        static_cast<double>(cfg_.time_budget_ms))
      return true;
  }
  return false;
}

void Solver::check_propagation_fixpoint() const {
  for (const auto& c : clauses_) {
    if (c.deleted)
      continue;
    std::size_t unassigned = 0;
    bool satisfied = false;
    for (LitCode l : c.lits) {
      if (value(l) == True)
        satisfied = true;
      else if (value(l) == Undef)
        ++unassigned;
    }
    if (!satisfied && unassigned <= 1)
      throw std::logic_error("propagation fixpoint left a unit or falsified clause");
  }
}

Solver::Value Solver::search(std::uint64_t max_conflicts,
                             const std::vector<LitCode>& assumptions) {
  std::uint64_t conflicts_here = 0;
  std::vector<LitCode> learnt;
  std::uint64_t ticks = 0;
  for (;;) {
    const ClauseRef confl = propagate();
    if (confl != kNoReason) {
      ++stats_.conflicts;
      ++conflicts_here;
      if (decision_level() == 0) {
        ok_ = false;
        return False;
      }
      std::uint32_t bt = 0;
      analyze(confl, learnt, bt);
      cancel_until(bt);
      if (cfg_.record_learnts) {
        std::vector<Lit> logged;
        for (LitCode l : learnt)
          logged.push_back(decode(l));
        learnt_log_.push_back(std::move(logged));
      }
      if (learnt.size() == 1) {
        enqueue(learnt[0], kNoReason);
      } else {
        clauses_.push_back(ClauseData{learnt, 0.0, true, false});
        const auto cr = static_cast<ClauseRef>(clauses_.size() - 1);
        learnts_.push_back(cr);
        attach(cr);
        bump_clause(clauses_[cr]);
        enqueue(learnt[0], cr);
      }
      var_inc_ /= cfg_.activity_decay;
      clause_inc_ /= kClauseDecay;
      if (budget_exhausted()) {
        cancel_until(0);
        return Undef;
      }
      continue;
    }

    if (cfg_.check_propagation)
      check_propagation_fixpoint();
    if (conflicts_here >= max_conflicts || ((++ticks & 255) == 0 && budget_exhausted())) {
      cancel_until(0);
      return Undef;
    }
    if (static_cast<double>(learnts_.size()) >=
        max_learnts_ + static_cast<double>(trail_.size()))
      reduce_db();

    LitCode next = kUndefLit;
    while (decision_level() < assumptions.size()) {
      const LitCode a = assumptions[decision_level()];
      if (value(a) == True) {
        trail_lim_.push_back(trail_.size());
      } else if (value(a) == False) {
        analyze_final(a);
        return False;
      } else {
        next = a;
        break;
      }
    }
    if (next == kUndefLit) {
      next = pick_branch();
      if (next == kUndefLit)
        return True;
      ++stats_.decisions;
      stats_.decision_hash = (stats_.decision_hash ^ next) * kFnvPrime;
    }
    trail_lim_.push_back(trail_.size());
    enqueue(next, kNoReason);
  }
}

Verdict Solver::solve(std::span<const Lit> assumptions) {
  started_ = std::chrono::steady_clock::now();
  stats_ = SolveStats{};
  failed_.clear();
  Verdict verdict;

  std::vector<LitCode> assumed;
  for (const Lit& a : assumptions) {
    ensure_vars(a.var);
    assumed.push_back(encode(a));
  }
  if (max_learnts_ == 0.0)
    max_learnts_ = std::max(2000.0, static_cast<double>(num_original_) / 3.0);

  Value status = ok_ ? Undef : False;
  for (std::uint64_t restart = 0; status == Undef; ++restart) {
    const auto budget =
        static_cast<std::uint64_t>(luby(2.0, restart) * static_cast<double>(cfg_.restart_base));
    status = search(budget, assumed);
    if (status == Undef) {
      if (budget_exhausted())
        break;
      ++stats_.restarts;
    }
  }

  if (status == True) {
    verdict.kind = VerdictKind::Sat;
    verdict.model.resize(num_vars());
    for (std::uint32_t v = 0; v < num_vars(); ++v)
      verdict.model[v] = assigns_[v] == True;
  } else if (status == False) {
    verdict.kind = VerdictKind::Unsat;
  } else {
    verdict.kind = VerdictKind::Halted;
  }
  cancel_until(0);
  stats_.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - started_)
                       .count();
  verdict.stats = stats_;
  return verdict;
}

} // namespace coreguide
