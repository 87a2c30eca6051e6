#include "coreguide/datagen.hpp"
#include "coreguide/error.hpp"
#include "coreguide/solver.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace coreguide;

namespace {

Cnf random_mixed(Rng& rng) {
  const auto n = static_cast<std::uint32_t>(std::uniform_int_distribution<int>(3, 20)(rng));
  const double ratio = std::uniform_real_distribution<double>(2.0, 7.0)(rng);
  const auto k = std::min<std::uint32_t>(n, 3);
  return gen_random_ksat(n, static_cast<std::size_t>(ratio * n), k, rng);
}

BranchSeed random_seed(std::uint32_t n, Rng& rng) {
  Prediction p;
  for (std::uint32_t i = 0; i < n; ++i)
    p.probs.push_back(std::uniform_real_distribution<double>(0.01, 0.99)(rng));
  return seed_from_prediction(p);
}

} // namespace

TEST(Solver, Examples) {
  EXPECT_EQ(solve(Cnf::from_ints(1, {{1}, {-1}})).kind, VerdictKind::Unsat);
  Verdict v = solve(Cnf::from_ints(2, {{1, 2}, {-1}}));
  ASSERT_EQ(v.kind, VerdictKind::Sat);
  EXPECT_EQ(v.model, (std::vector<bool>{false, true}));
  EXPECT_EQ(solve(Cnf::from_ints(3, {})).kind, VerdictKind::Sat);
  Cnf with_empty = Cnf::from_ints(2, {{1, 2}});
  with_empty.clauses.push_back(Clause{});
  EXPECT_EQ(solve(with_empty).kind, VerdictKind::Unsat);
}

TEST(Solver, AgreesWithBruteForce) {
  Rng rng(2024);
  for (int i = 0; i < 400; ++i) {
    Cnf c = random_mixed(rng);
    SolverConfig cfg;
    cfg.check_propagation = i % 4 == 0;
    Verdict v = solve(c, cfg);
    EXPECT_EQ(v.kind, brute_force_solve(c).kind) << write_dimacs(c);
    if (v.kind == VerdictKind::Sat)
      EXPECT_TRUE(verify_model(c, v.model));
  }
}

TEST(Solver, Pigeonhole) {
  for (std::uint32_t h = 1; h <= 5; ++h)
    EXPECT_EQ(solve(gen_pigeonhole(h)).kind, VerdictKind::Unsat) << h;
}

TEST(Solver, LearntClausesAreEntailed) {
  Rng rng(77);
  std::size_t learnts = 0;
  for (int i = 0; i < 60; ++i) {
    Cnf c = gen_random_ksat(12, 60, 3, rng);
    Solver s(SolverConfig{.record_learnts = true});
    s.ensure_vars(c.num_vars);
    for (const auto& cl : c.clauses)
      s.add_clause(cl.lits);
    s.solve();
    for (const auto& learnt : s.learnt_log()) {
      // c ∧ ¬learnt must be UNSAT.
      Cnf check = c;
      for (Lit l : learnt)
        check.clauses.push_back(Clause::make({~l}));
      EXPECT_EQ(brute_force_solve(check).kind, VerdictKind::Unsat);
      ++learnts;
    }
  }
  EXPECT_GT(learnts, 50u);
}

TEST(Solver, PropagationFixpointCheckHolds) {
  Rng rng(5);
  SolverConfig cfg;
  cfg.check_propagation = true;
  for (int i = 0; i < 50; ++i)
    EXPECT_NO_THROW(solve(gen_random_ksat(30, 128, 3, rng), cfg));
}

TEST(Solver, SeedingKeepsVerdicts) {
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    Cnf c = random_mixed(rng);
    const VerdictKind plain = solve(c).kind;
    for (int s = 0; s < 3; ++s)
      EXPECT_EQ(solve(c, {}, random_seed(c.num_vars, rng)).kind, plain);
  }
}

TEST(Solver, SeedLengthChecked) {
  BranchSeed seed;
  seed.order = {1};
  seed.scores = {0.5};
  EXPECT_THROW(solve(Cnf::from_ints(2, {{1, 2}}), {}, seed), Error);
}

TEST(Solver, SeedOrderDrivesFirstDecision) {
  // Unconstrained variables: the first decision takes the top of the queue,
  // with initial phase false.
  Cnf c = Cnf::from_ints(3, {{1, 2, 3}});
  Prediction p;
  p.probs = {0.1, 0.2, 0.9};
  Verdict v = solve(c, {}, seed_from_prediction(p));
  ASSERT_EQ(v.kind, VerdictKind::Sat);
  EXPECT_FALSE(v.model[2]);
  Solver s;
  s.ensure_vars(3);
  s.seed(seed_from_prediction(p));
  EXPECT_DOUBLE_EQ(s.activity(3), 0.9);
}

TEST(Solver, DeterministicStats) {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    Cnf c = gen_random_ksat(60, 256, 3, rng);
    BranchSeed seed = random_seed(60, rng);
    Verdict a = solve(c, {}, seed), b = solve(c, {}, seed);
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.stats.decisions, b.stats.decisions);
    EXPECT_EQ(a.stats.conflicts, b.stats.conflicts);
    EXPECT_EQ(a.stats.propagations, b.stats.propagations);
    EXPECT_EQ(a.stats.decision_hash, b.stats.decision_hash);
    EXPECT_EQ(a.model, b.model);
  }
}

TEST(Solver, ConflictBudgetHalts) {
  SolverConfig cfg;
  cfg.conflict_budget = 10;
  Verdict v = solve(gen_pigeonhole(7), cfg);
  EXPECT_EQ(v.kind, VerdictKind::Halted);
  EXPECT_LE(v.stats.conflicts, 11u);
}

TEST(Solver, TimeBudgetHalts) {
  SolverConfig cfg;
  cfg.time_budget_ms = 20;
  Verdict v = solve(gen_pigeonhole(10), cfg);
  EXPECT_EQ(v.kind, VerdictKind::Halted);
  EXPECT_LT(v.stats.wall_ms, 1000.0);
}

TEST(Solver, ConfigValidation) {
  SolverConfig cfg;
  cfg.activity_decay = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.activity_decay = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Solver, IncrementalAssumptions) {
  Solver s;
  s.ensure_vars(3);
  s.add_clause(std::vector<Lit>{{1, false}, {2, true}});
  s.add_clause(std::vector<Lit>{{2, false}, {3, true}});
  std::vector<Lit> assume{{1, true}, {3, false}};
  EXPECT_EQ(s.solve(assume).kind, VerdictKind::Unsat);
  EXPECT_FALSE(s.failed_assumptions().empty());
  std::vector<Lit> ok{{1, true}};
  Verdict v = s.solve(ok);
  ASSERT_EQ(v.kind, VerdictKind::Sat);
  EXPECT_TRUE(v.model[0] && v.model[1] && v.model[2]);
}

TEST(SeedFromPrediction, Examples) {
  Prediction p;
  p.probs = {0.9, 0.2, 0.7};
  BranchSeed s = seed_from_prediction(p);
  EXPECT_EQ(s.order, (std::vector<std::uint32_t>{1, 3, 2}));
  EXPECT_EQ(s.scores, p.probs);
  p.probs = {0.4, 0.4, 0.4, 0.4};
  EXPECT_EQ(seed_from_prediction(p).order, (std::vector<std::uint32_t>{1, 2, 3, 4}));
  p.probs = {0.5, 0.9};
  EXPECT_EQ(seed_from_prediction(p).order, (std::vector<std::uint32_t>{2, 1}));
}

TEST(VerifyModel, Examples) {
  EXPECT_FALSE(verify_model(Cnf::from_ints(1, {{1}}), {false}));
  EXPECT_TRUE(verify_model(Cnf::from_ints(1, {{-1}}), {false}));
  EXPECT_THROW(verify_model(Cnf::from_ints(2, {{1}}), {false}), Error);
}

TEST(VerdictRecord, Format) {
  Verdict v;
  v.kind = VerdictKind::Unsat;
  v.stats.decisions = 3;
  v.stats.propagations = 7;
  v.stats.conflicts = 2;
  v.stats.restarts = 1;
  v.stats.wall_ms = 1.5;
  EXPECT_EQ(verdict_record("a.cnf", v), "a.cnf,UNSAT,3,7,2,1,1.500");
}
