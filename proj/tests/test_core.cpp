#include "coreguide/datagen.hpp"
#include "coreguide/error.hpp"
#include "coreguide/solver.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace coreguide;

namespace {

bool includes(const std::vector<std::size_t>& big, const std::vector<std::size_t>& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

} // namespace

TEST(ExtractCore, ContradictionWithBystander) {
  Cnf c = Cnf::from_ints(3, {{1}, {-1}, {2, 3}});
  CoreResult r = extract_core(c);
  EXPECT_EQ(r.clauses, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.vars, (std::vector<std::uint32_t>{1}));
  EXPECT_EQ(r.clauses, brute_force_min_core(c));
}

TEST(ExtractCore, PigeonholeIsFullCore) {
  Cnf php = gen_pigeonhole(2);
  ASSERT_EQ(php.clauses.size(), 9u);
  for (bool minimize : {false, true}) {
    CoreResult r = extract_core(php, {}, CoreOptions{minimize});
    EXPECT_EQ(r.clauses.size(), 9u);
    EXPECT_EQ(r.vars.size(), 6u);
  }
  EXPECT_EQ(brute_force_min_core(php).size(), 9u);
}

TEST(ExtractCore, SatisfiableThrowsNotUnsat) {
  try {
    extract_core(Cnf::from_ints(2, {{1, 2}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotUnsat);
  }
}

TEST(ExtractCore, BudgetThrows) {
  SolverConfig cfg;
  cfg.conflict_budget = 5;
  try {
    extract_core(gen_pigeonhole(7), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BudgetExhausted);
  }
}

TEST(ExtractCore, PlantedCoreStaysInKernel) {
  Rng rng(12);
  for (int i = 0; i < 20; ++i) {
    GenSpec spec;
    spec.n_core_vars = 25;
    spec.n_pad_vars = 15;
    spec.clause_ratio = 8;
    PlantedInstance inst = gen_planted_core(spec, rng);
    CoreResult r = extract_core(inst.cnf);
    EXPECT_TRUE(includes(inst.kernel_clauses, r.clauses));
    EXPECT_TRUE(std::includes(inst.core_vars.begin(), inst.core_vars.end(), r.vars.begin(),
                              r.vars.end()));
    EXPECT_EQ(verify_core(inst.cnf, r.clauses), std::optional<bool>(true));
  }
}

TEST(ExtractCore, VerifiesAndMinimizationNeverGrows) {
  Rng rng(40);
  int unsat = 0;
  while (unsat < 60) {
    Cnf c = gen_random_ksat(8, 14, 2, rng);
    if (brute_force_solve(c).kind != VerdictKind::Unsat)
      continue;
    ++unsat;
    CoreResult plain = extract_core(c);
    CoreResult small = extract_core(c, {}, CoreOptions{true});
    EXPECT_EQ(verify_core(c, plain.clauses), std::optional<bool>(true));
    EXPECT_EQ(verify_core(c, small.clauses), std::optional<bool>(true));
    EXPECT_LE(small.clauses.size(), plain.clauses.size());
    // A deletion pass leaves a minimal core: dropping any clause makes it SAT.
    for (std::size_t drop : small.clauses) {
      std::vector<std::size_t> trial;
      for (std::size_t j : small.clauses)
        if (j != drop)
          trial.push_back(j);
      EXPECT_EQ(verify_core(c, trial), std::optional<bool>(false));
    }
    EXPECT_LE(brute_force_min_core(c).size(), small.clauses.size());
  }
}

TEST(VerifyCore, Examples) {
  Cnf c = Cnf::from_ints(1, {{1}, {-1}});
  EXPECT_EQ(verify_core(c, {0, 1}), std::optional<bool>(true));
  EXPECT_EQ(verify_core(c, {0}), std::optional<bool>(false));
}

TEST(VerifyCore, LargeCoreUsesSolverAndReportsBudget) {
  Cnf php = gen_pigeonhole(5); // 30 variables, beyond brute force
  std::vector<std::size_t> all(php.clauses.size());
  for (std::size_t j = 0; j < all.size(); ++j)
    all[j] = j;
  EXPECT_EQ(verify_core(php, all), std::optional<bool>(true));
  SolverConfig tight;
  tight.conflict_budget = 3;
  Cnf big = gen_pigeonhole(8);
  std::vector<std::size_t> every(big.clauses.size());
  for (std::size_t j = 0; j < every.size(); ++j)
    every[j] = j;
  EXPECT_EQ(verify_core(big, every, tight), std::nullopt);
}
