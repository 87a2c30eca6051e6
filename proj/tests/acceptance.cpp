// Acceptance harness: one PASS/FAIL line per criterion.
#include "coreguide/bench.hpp"
#include "coreguide/datagen.hpp"
#include "coreguide/error.hpp"
#include "coreguide/gradcheck.hpp"
#include "coreguide/graph.hpp"
#include "coreguide/labeling.hpp"
#include "coreguide/model.hpp"
#include "coreguide/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace coreguide;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string strf(const char* fmt, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Rng instance_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{seed, index};
  return Rng(seq);
}

// Random formula mixing clause widths 1..4 and ratios up to 8.
Cnf mixed_cnf(Rng& rng, std::uint32_t max_vars) {
  std::uniform_int_distribution<std::uint32_t> nv(1, max_vars);
  std::uniform_real_distribution<double> ratio(0.5, 8.0);
  const std::uint32_t n = nv(rng);
  const auto m = std::max<std::size_t>(1, std::llround(ratio(rng) * n));
  Cnf cnf;
  cnf.num_vars = n;
  std::discrete_distribution<int> width_mix({1, 3, 6, 2});
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t k = std::min<std::uint32_t>(width_mix(rng) + 1, n);
    Cnf one = gen_random_ksat(n, 1, k, rng);
    cnf.clauses.push_back(one.clauses[0]);
  }
  return cnf;
}

// 1
Outcome gradient_fidelity(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  GradCheckReport r = random_gradcheck(20240611);
  const double secs = seconds_since(t0);
  std::size_t checked = 0, skipped = 0;
  for (const auto& t : r.tensors) {
    checked += t.checked;
    skipped += t.skipped;
  }
  return {r.max_rel_error < 1e-4 && secs < 60,
          strf("max rel error %.3e (worst %s), %zu coordinates checked, %zu at ReLU kinks, %.1f s",
               r.max_rel_error, r.worst.c_str(), checked, skipped, secs)};
}

// 2
Outcome solver_correctness(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t agree = 0, unsat = 0, bad_models = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    Rng rng = instance_rng(2, i);
    Cnf cnf = mixed_cnf(rng, 20);
    Verdict got = solve(cnf);
    Verdict want = brute_force_solve(cnf);
    agree += got.kind == want.kind;
    unsat += want.kind == VerdictKind::Unsat;
    if (got.kind == VerdictKind::Sat && !verify_model(cnf, got.model))
      ++bad_models;
  }
  bool php_ok = true;
  for (std::uint32_t holes = 1; holes <= 3; ++holes) {
    Cnf php = gen_pigeonhole(holes);
    php_ok = php_ok && solve(php).kind == VerdictKind::Unsat &&
             brute_force_solve(php).kind == VerdictKind::Unsat;
  }
  const double secs = seconds_since(t0);
  return {agree == 1000 && bad_models == 0 && php_ok && secs < 300,
          strf("%zu/1000 agree (%zu UNSAT), %zu bad models, PHP(2,1)..PHP(4,3) %s, %.1f s", agree,
               unsat, bad_models, php_ok ? "UNSAT" : "WRONG", secs)};
}

// 3
Outcome seeding_completeness(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t mismatches = 0, halts = 0, unsat = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    Rng rng = instance_rng(3, i);
    std::uniform_int_distribution<std::uint32_t> nv(20, 120);
    std::uniform_real_distribution<double> ratio(3.0, 5.5);
    const std::uint32_t n = nv(rng);
    Cnf cnf = gen_random_ksat(n, std::llround(ratio(rng) * n), 3, rng);
    const VerdictKind base = solve(cnf).kind;
    unsat += base == VerdictKind::Unsat;
    halts += base == VerdictKind::Halted;
    std::uniform_real_distribution<double> u(0, 1);
    for (int s = 0; s < 5; ++s) {
      Prediction p;
      for (std::uint32_t v = 0; v < n; ++v)
        p.probs.push_back(u(rng));
      const VerdictKind seeded = solve(cnf, {}, seed_from_prediction(p)).kind;
      halts += seeded == VerdictKind::Halted;
      mismatches += seeded != base;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && halts == 0 && secs < 300,
          strf("%zu mismatches, %zu halts over 200x5 seeded runs (%zu UNSAT instances), %.1f s",
               mismatches, halts, unsat, secs)};
}

// 4
Outcome core_validity(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t verified = 0, bounded = 0, contains_min = 0, minimized_min = 0;
  // 100 instances inside the brute-force bounds, 100 planted ones beyond them.
  for (std::uint64_t i = 0; i < 200; ++i) {
    Rng rng = instance_rng(4, i);
    Cnf cnf;
    if (i < 100) {
      std::uniform_int_distribution<std::uint32_t> nv(3, 7);
      std::uniform_int_distribution<std::size_t> nm(8, kMinCoreMaxClauses);
      do {
        const std::uint32_t n = nv(rng);
        cnf = gen_random_ksat(n, nm(rng), std::uniform_int_distribution<std::uint32_t>(2, 3)(rng),
                              rng);
      } while (brute_force_solve(cnf).kind != VerdictKind::Unsat);
    } else {
      GenSpec spec;
      spec.n_core_vars = std::uniform_int_distribution<std::uint32_t>(20, 60)(rng);
      spec.n_pad_vars = std::uniform_int_distribution<std::uint32_t>(5, 40)(rng);
      cnf = gen_planted_core(spec, rng).cnf;
    }
    CoreResult core = extract_core(cnf);
    if (verify_core(cnf, core.clauses) == true)
      ++verified;
    if (cnf.num_vars <= kMinCoreMaxVars && cnf.clauses.size() <= kMinCoreMaxClauses) {
      ++bounded;
      const auto global = brute_force_min_core(cnf);
      const auto inside = brute_force_min_core(select_clauses(cnf, core.clauses));
      contains_min += inside.size() == global.size();
      // Reported alongside, not part of the verdict.
      CoreResult mus = extract_core(cnf, {}, {.minimize = true});
      minimized_min += mus.clauses.size() == global.size();
    }
  }
  const double secs = seconds_since(t0);
  return {verified == 200 && contains_min == bounded && secs < 600,
          strf("%zu/200 cores verified UNSAT, %zu/%zu contain a minimum-cardinality core "
               "(%zu/%zu after the deletion pass), %.1f s",
               verified, contains_min, bounded, minimized_min, bounded, secs)};
}

// 5
Outcome graph_equivalence(const fs::path&) {
  std::size_t weight_ok = 0, degree_ok = 0, flip_ok = 0, sums = 0;
  double worst_sum = 0;
  for (std::uint64_t i = 0; i < 500; ++i) {
    Rng rng = instance_rng(5, i);
    Cnf cnf = mixed_cnf(rng, 10);
    const std::uint32_t n = cnf.num_vars, nodes = 2 * n;
    std::vector<std::int64_t> expect(std::size_t(nodes) * nodes, 0);
    for (const auto& c : cnf.clauses) {
      if (c.tautological)
        continue;
      std::set<std::uint32_t> lits;
      for (auto l : c.lits)
        lits.insert(lit_node(l, n));
      for (auto a : lits)
        for (auto b : lits)
          if (a != b)
            ++expect[std::size_t(a) * nodes + b];
    }
    Wlig g = build_wlig(cnf);
    bool w = g.n_vars == n, d = true;
    for (std::uint32_t a = 0; a < nodes && w; ++a) {
      std::int64_t row = 0;
      for (std::uint32_t b = 0; b < nodes; ++b) {
        w = w && g.adjacency.weight(a, b) == expect[std::size_t(a) * nodes + b];
        row += expect[std::size_t(a) * nodes + b];
      }
      d = d && g.degrees[a] == row;
    }
    weight_ok += w;
    degree_ok += w && d;
    if (g.adjacency.total_weight() > 0) {
      NormAdj a = normalize_adjacency(g);
      worst_sum = std::max(worst_sum, std::abs(a.sum() - 1.0));
      ++sums;
    }
    Matrix h = Matrix::Random(nodes, 4);
    const Matrix once = flip_literals(h, n);
    bool partner = true;
    for (std::uint32_t v = 0; v < n; ++v)
      partner = partner && once.row(v) == h.row(v + n) && once.row(v + n) == h.row(v);
    flip_ok += partner && flip_literals(once, n) == h && flip(flip(h)) == h;
  }
  return {weight_ok == 500 && degree_ok == 500 && flip_ok == 500 && worst_sum <= 1e-12,
          strf("weights %zu/500, degrees %zu/500, flip involution %zu/500, max |sum-1| %.2e "
               "over %zu graphs",
               weight_ok, degree_ok, flip_ok, worst_sum, sums)};
}

// 6
Outcome focal_reduction(const fs::path&) {
  double worst = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng = instance_rng(6, i);
    const int len = std::uniform_int_distribution<int>(1, 64)(rng);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> p;
    std::vector<std::uint8_t> y;
    double ce = 0;
    for (int j = 0; j < len; ++j) {
      p.push_back(u(rng));
      y.push_back(u(rng) < 0.5);
      const double q = std::clamp(p.back(), 1e-7, 1 - 1e-7);
      ce -= y.back() ? std::log(q) : std::log1p(-q);
    }
    const double focal = focal_loss(p, y, 0.5, 0.0).loss;
    worst = std::max({worst, std::abs(focal - 0.5 * ce),
                      std::abs(focal - 0.5 * cross_entropy_loss(p, y).loss)});
  }
  return {worst <= 1e-12, strf("max |focal - 0.5 CE| = %.2e over 100 vectors", worst)};
}

DatasetManifest prepared_corpus(const fs::path& dir, CorpusPreset preset, std::size_t count,
                                double sat_fraction, std::uint64_t seed) {
  if (!fs::exists(dir / "manifest.json")) {
    fs::remove_all(dir);
    CorpusOptions opt;
    opt.preset = preset;
    opt.count = count;
    opt.sat_fraction = sat_fraction;
    opt.seed = seed;
    write_corpus(dir.string(), opt);
    return build_dataset(dir.string(), {}, seed);
  }
  DatasetManifest m = load_manifest((dir / "manifest.json").string());
  if (m.entries.size() + m.skipped.size() != count)
    throw Error(Errc::InvalidArgument, "stale corpus in " + dir.string());
  return m;
}

ModelConfig learning_config() {
  ModelConfig cfg;
  cfg.d = 16;
  cfg.layers = 3;
  cfg.hidden = 32;
  cfg.lr = 2e-3;
  cfg.epochs = 6;
  cfg.batch_size = 8;
  return cfg;
}

// 7
Outcome learning_signal(const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  DatasetManifest m = prepared_corpus(work / "lec", CorpusPreset::LecLike, 2500, 0.0, 7);
  auto train_set = load_split(m, Split::Train);
  auto test_set = load_split(m, Split::Test);
  double frac = 0;
  std::uint32_t lo = ~0u, hi = 0;
  for (const auto& x : train_set) {
    frac += std::count(x.labels.begin(), x.labels.end(), 1) / double(x.labels.size());
    lo = std::min(lo, x.cnf.num_vars);
    hi = std::max(hi, x.cnf.num_vars);
  }
  frac /= train_set.size();
  const ModelConfig cfg = learning_config();
  TrainResult r = train(to_training_set(train_set, cfg.graph), cfg, {},
                        {[](const EpochRecord& e) {
                          std::cerr << "  epoch " << e.epoch << " train_loss " << e.train_loss
                                    << "\n";
                        }});
  save_checkpoint(r.params, cfg, (work / "lec_model.ibnw").string());
  PredMetrics got = eval_prediction(r.params, cfg, test_set);
  std::vector<std::vector<std::uint8_t>> labels;
  for (const auto& x : test_set)
    labels.push_back(x.labels);
  PredMetrics maj = majority_baseline(labels);
  const double secs = seconds_since(t0);
  const double got_neg = got.neg_f1.value_or(0), maj_neg = maj.neg_f1.value_or(0);
  std::cerr << "  model    " << pred_metrics_text(got) << "  majority " << pred_metrics_text(maj);
  return {train_set.size() == 2000 && test_set.size() == 500 &&
              got.accuracy >= maj.accuracy + 0.05 && got_neg > maj_neg && secs <= 7200,
          strf("%zu/%zu train/test, n in [%u, %u], mean core fraction %.3f; Acc %.4f vs "
               "majority %.4f, Neg.F1 %.4f vs %.4f, Pos.F1 %.4f, %.0f s",
               train_set.size(), test_set.size(), lo, hi, frac, got.accuracy, maj.accuracy,
               got_neg, maj_neg, got.pos_f1.value_or(0), secs)};
}

std::vector<LoadedInstance> bench_hard_instances(std::uint64_t seed, std::size_t count) {
  std::vector<LoadedInstance> out;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = instance_rng(seed, i);
    PlantedInstance p = gen_planted_core(draw_preset_spec(CorpusPreset::BenchHard, rng), rng);
    LoadedInstance x;
    x.name = strf("hard_%05zu", i);
    x.labels = labels_from_vars(p.core_vars, p.cnf.num_vars, LabelSource::Planted).core;
    x.cnf = std::move(p.cnf);
    out.push_back(std::move(x));
  }
  return out;
}

// 8
Outcome guided_benefit(const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  auto xs = bench_hard_instances(8, 300);
  SolverConfig solver;
  solver.time_budget_ms = 60000;
  Guidance oracle;
  oracle.mode = SeedMode::Oracle;
  SpeedComparison c = run_speed_bench(xs, solver, oracle);
  write_speed_report(c, (work / "bench_oracle_").string(), "# acceptance oracle seeding");

  // Trained-model arm, reported only.
  ModelConfig cfg = learning_config();
  cfg.d = 8;
  cfg.hidden = 16;
  cfg.epochs = 4;
  auto train_xs = bench_hard_instances(80, 150);
  ModelParams params = train(to_training_set(train_xs, cfg.graph), cfg).params;
  Guidance model;
  model.mode = SeedMode::Model;
  model.params = &params;
  model.model_cfg = &cfg;
  SpeedComparison mc = run_speed_bench(xs, solver, model);
  write_speed_report(mc, (work / "bench_model_").string(), "# acceptance model seeding");
  const double secs = seconds_since(t0);

  const double base = c.baseline.median_conflicts, guided = c.guided->median_conflicts;
  std::cerr << speed_summary_text(c) << speed_summary_text(mc);
  return {base >= 1000 && guided <= base && c.baseline.halted_count == 0 && secs <= 1800,
          strf("baseline median conflicts %.0f, oracle-guided %.0f (A.RT %.1f -> %.1f ms); "
               "trained-model median %.0f, Imp. %+.1f ms (%+.1f%%); %.0f s",
               base, guided, c.baseline.avg_runtime_ms, c.guided->avg_runtime_ms,
               mc.guided->median_conflicts, mc.improvement_ms, mc.improvement_pct, secs)};
}

// 9
Outcome pipeline_overhead(const fs::path&) {
  ModelConfig cfg; // production-sized model
  ModelParams params = init_params(cfg, 9);
  double worst = 0;
  std::uint32_t worst_n = 0;
  std::size_t worst_m = 0;
  int runs = 0;
  for (std::uint32_t n : {500u, 1000u, 2500u, 5000u}) {
    for (double ratio : {4.26, 10.0}) {
      Rng rng = instance_rng(9, n);
      Cnf cnf = gen_random_ksat(n, std::llround(ratio * n), 3, rng);
      const auto t0 = std::chrono::steady_clock::now();
      Prediction p = predict(params, cfg, cnf);
      BranchSeed seed = seed_from_prediction(p);
      const double ms = seconds_since(t0) * 1000;
      ++runs;
      if (ms > worst) {
        worst = ms;
        worst_n = n;
        worst_m = cnf.clauses.size();
      }
      if (seed.order.size() != n)
        return {false, "seed does not cover every variable"};
    }
  }
  return {worst < 1500, strf("worst overhead %.1f ms (n=%u, m=%zu) over %d instances up to "
                             "5000 variables, d=%d L=%d",
                             worst, worst_n, worst_m, runs, cfg.d, cfg.layers)};
}

std::string strip_wall_columns(const std::string& csv) {
  std::istringstream in(csv);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#')
      continue;
    // wall_ms, overhead_ms, total_ms are the last three columns.
    for (int k = 0; k < 3; ++k)
      line.erase(line.rfind(','));
    out += line + "\n";
  }
  return out;
}

// 10
Outcome determinism(const fs::path& work) {
  auto run = [&](const fs::path& dir) {
    fs::remove_all(dir);
    CorpusOptions opt;
    opt.count = 24;
    opt.seed = 10;
    write_corpus(dir.string(), opt);
    DatasetManifest m = build_dataset(dir.string(), {}, 10);
    ModelConfig cfg;
    cfg.d = 6;
    cfg.hidden = 8;
    cfg.epochs = 3;
    auto train_set = load_split(m, Split::Train);
    ModelParams params = train(to_training_set(train_set, cfg.graph), cfg).params;
    std::string ckpt = serialize_checkpoint(params, cfg);
    Guidance g;
    g.mode = SeedMode::Model;
    g.params = &params;
    g.model_cfg = &cfg;
    SpeedComparison c = run_speed_bench(load_split(m, Split::Test), {}, g);
    std::string stats;
    for (const auto& x : train_set)
      stats += verdict_record(x.name, solve(x.cnf)) + "\n";
    return std::tuple{ckpt, strip_wall_columns(stats),
                      strip_wall_columns(run_csv(c.baseline, "#")) +
                          strip_wall_columns(run_csv(*c.guided, "#")),
                      manifest_to_json(m)};
  };
  auto [ck1, st1, csv1, man1] = run(work / "det_a");
  auto [ck2, st2, csv2, man2] = run(work / "det_b");
  std::string rebased = man2;
  // Manifests differ only by their directory.
  const std::string a = (work / "det_a").string(), b = (work / "det_b").string();
  for (auto pos = rebased.find(b); pos != std::string::npos; pos = rebased.find(b, pos))
    rebased.replace(pos, b.size(), a);
  const bool ok = ck1 == ck2 && st1 == st2 && csv1 == csv2 && man1 == rebased;
  return {ok, strf("checkpoint %s (%zu bytes), solver stats %s, bench CSVs %s, manifest %s",
                   ck1 == ck2 ? "identical" : "DIFFERENT", ck1.size(),
                   st1 == st2 ? "identical" : "DIFFERENT", csv1 == csv2 ? "identical" : "DIFFERENT",
                   man1 == rebased ? "identical" : "DIFFERENT")};
}

// 11
Outcome ablation_harness(const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  DatasetManifest m = prepared_corpus(work / "ablation", CorpusPreset::LecLike, 500, 0.2, 11);
  ModelConfig cfg = learning_config();
  cfg.d = 8;
  cfg.hidden = 16;
  cfg.epochs = 4;
  bool ok = true;
  std::string direction;
  nlohmann::json all = nlohmann::json::object();
  for (AblationAxis axis : {AblationAxis::Graph, AblationAxis::Supervision, AblationAxis::Loss}) {
    AblationResult r = run_ablation(m, axis, cfg);
    std::cerr << ablation_text(r);
    all[ablation_axis_name(axis)] = nlohmann::json::parse(ablation_json(r));
    ok = ok && r.arms.size() == ablation_arms(axis, cfg).size();
    for (const auto& arm : r.arms)
      ok = ok && arm.metrics.instances == r.arms[0].metrics.instances && arm.metrics.instances > 0;
    if (axis == AblationAxis::Graph && r.arms.size() == 2) {
      const auto& w = r.arms[0].metrics;
      const auto& l = r.arms[1].metrics;
      const auto wk = std::pair{w.accuracy, w.neg_f1.value_or(0)};
      const auto lk = std::pair{l.accuracy, l.neg_f1.value_or(0)};
      direction = strf("WLIG Acc %.4f / Neg.F1 %.4f vs LCG Acc %.4f / Neg.F1 %.4f: %s", wk.first,
                       wk.second, lk.first, lk.second,
                       wk == lk ? "tie" : wk > lk ? "WLIG ahead" : "LCG ahead");
    }
  }
  write_text_file((work / "ablation.json").string(), all.dump(2) + "\n");
  return {ok, strf("%zu labeled + %zu SAT instances, 7 arms over 3 axes; %s; %.0f s",
                   m.entries.size(), m.skipped.size(), direction.c_str(), seconds_since(t0))};
}

const std::map<int, std::pair<const char*, std::function<Outcome(const fs::path&)>>>
    kCriteria = {
        {1, {"gradient fidelity", gradient_fidelity}},
        {2, {"solver correctness", solver_correctness}},
        {3, {"seeding preserves completeness", seeding_completeness}},
        {4, {"core validity", core_validity}},
        {5, {"graph-encoding equivalence", graph_equivalence}},
        {6, {"focal-loss reduction", focal_reduction}},
        {7, {"learning signal", learning_signal}},
        {8, {"guided-solving benefit", guided_benefit}},
        {9, {"pipeline overhead", pipeline_overhead}},
        {10, {"determinism", determinism}},
        {11, {"ablation harness", ablation_harness}},
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"coreguide acceptance criteria"};
  std::vector<int> only;
  std::string work = "acceptance_work";
  app.add_option("--only", only, "criterion numbers to run")->check(CLI::Range(1, 11));
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(work);
  int failed = 0;
  for (const auto& [id, entry] : kCriteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
      continue;
    Outcome o;
    try {
      o = entry.second(work);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " " << entry.first
              << ": " << o.detail << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
