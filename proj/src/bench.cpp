#include "coreguide/bench.hpp"

#include "coreguide/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace coreguide {

using nlohmann::json;

namespace {

double median(std::vector<double> xs) {
  if (xs.empty())
    return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t k = xs.size() / 2;
  return xs.size() % 2 ? xs[k] : 0.5 * (xs[k - 1] + xs[k]);
}

double mean(const std::vector<double>& xs) {
  if (xs.empty())
    return 0.0;
  double s = 0.0;
  for (double x : xs)
    s += x;
  return s / static_cast<double>(xs.size());
}

std::optional<double> mean_defined(const std::vector<std::optional<double>>& xs) {
  double s = 0.0;
  std::size_t k = 0;
  for (const auto& x : xs)
    if (x) {
      s += *x;
      ++k;
    }
  if (k == 0)
    return std::nullopt;
  return s / static_cast<double>(k);
}

json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(); }

std::string opt_text(const std::optional<double>& x) {
  if (!x)
    return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *x);
  return buf;
}

std::string fmt(double x, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

} // namespace

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

std::optional<double> pos_f1(const Confusion& c) {
  if (c.tp + c.fn == 0)
    return std::nullopt;
  return 2.0 * c.tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

std::optional<double> neg_f1(const Confusion& c) {
  if (c.tn + c.fp == 0)
    return std::nullopt;
  return 2.0 * c.tn / static_cast<double>(2 * c.tn + c.fn + c.fp);
}

double accuracy(const Confusion& c) {
  return c.total() == 0 ? 0.0 : static_cast<double>(c.tp + c.tn) / c.total();
}

Confusion confusion(const std::vector<double>& probs, const std::vector<std::uint8_t>& labels,
                    double threshold) {
  if (probs.size() != labels.size())
    throw Error(Errc::LengthMismatch, "prediction and label lengths differ");
  Confusion c;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= threshold;
    if (labels[i])
      (pred ? c.tp : c.fn) += 1;
    else
      (pred ? c.fp : c.tn) += 1;
  }
  return c;
}

PredMetrics score_predictions(const std::vector<std::vector<double>>& probs,
                              const std::vector<std::vector<std::uint8_t>>& labels) {
  if (probs.size() != labels.size())
    throw Error(Errc::LengthMismatch, "prediction and label counts differ");
  if (probs.empty())
    throw Error(Errc::EmptyDataset, "no instances to score");
  PredMetrics m;
  std::vector<double> accs;
  std::vector<std::optional<double>> pf, nf;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    Confusion c = confusion(probs[i], labels[i]);
    m.pooled += c;
    accs.push_back(accuracy(c));
    pf.push_back(pos_f1(c));
    nf.push_back(neg_f1(c));
  }
  m.instances = probs.size();
  m.accuracy = accuracy(m.pooled);
  m.pos_f1 = pos_f1(m.pooled);
  m.neg_f1 = neg_f1(m.pooled);
  m.macro_accuracy = mean(accs);
  m.macro_pos_f1 = mean_defined(pf);
  m.macro_neg_f1 = mean_defined(nf);
  return m;
}

PredMetrics majority_baseline(const std::vector<std::vector<std::uint8_t>>& labels) {
  std::uint64_t pos = 0, total = 0;
  for (const auto& ls : labels) {
    total += ls.size();
    pos += static_cast<std::uint64_t>(std::count(ls.begin(), ls.end(), std::uint8_t{1}));
  }
  const double constant = 2 * pos >= total ? 1.0 : 0.0;
  std::vector<std::vector<double>> probs;
  for (const auto& ls : labels)
    probs.emplace_back(ls.size(), constant);
  return score_predictions(probs, labels);
}

PredMetrics eval_prediction(const ModelParams& params, const ModelConfig& cfg,
                            const std::vector<LoadedInstance>& test) {
  std::vector<std::vector<double>> probs;
  std::vector<std::vector<std::uint8_t>> labels;
  for (const auto& x : test) {
    if (!x.unsat)
      continue;
    probs.push_back(predict(params, cfg, x.cnf).probs);
    labels.push_back(x.labels);
  }
  if (probs.empty())
    throw Error(Errc::EmptyDataset, "test split has no labeled instances");
  return score_predictions(probs, labels);
}

void write_pr_curve(const std::string& path, const std::vector<std::vector<double>>& probs,
                    const std::vector<std::vector<std::uint8_t>>& labels,
                    const std::string& provenance) {
  std::ostringstream out;
  out << provenance << "\nthreshold,precision,recall\n";
  for (int t = 0; t <= 100; ++t) {
    const double th = t / 100.0;
    Confusion c;
    for (std::size_t i = 0; i < probs.size(); ++i)
      c += confusion(probs[i], labels[i], th);
    const double prec = c.tp + c.fp ? static_cast<double>(c.tp) / (c.tp + c.fp) : 1.0;
    const double rec = c.tp + c.fn ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    out << fmt(th, 2) << ',' << fmt(prec, 6) << ',' << fmt(rec, 6) << '\n';
  }
  write_text_file(path, out.str());
}

SeedMode parse_seed_mode(const std::string& s) {
  if (s == "none") return SeedMode::None;
  if (s == "model") return SeedMode::Model;
  if (s == "oracle") return SeedMode::Oracle;
  throw Error(Errc::InvalidArgument, "unknown seeding mode '" + s + "'");
}

const char* seed_mode_name(SeedMode m) {
  switch (m) {
  case SeedMode::None: return "none";
  case SeedMode::Model: return "model";
  case SeedMode::Oracle: return "oracle";
  }
  return "?";
}

double censored_runtime(const InstanceRun& r, std::uint64_t time_budget_ms) {
  if (r.kind == VerdictKind::Halted && time_budget_ms > 0)
    return std::max(static_cast<double>(time_budget_ms), r.total_ms);
  return r.total_ms;
}

SpeedMetrics summarize_runs(std::string arm, std::vector<InstanceRun> runs,
                            std::uint64_t time_budget_ms) {
  SpeedMetrics m;
  m.arm = std::move(arm);
  std::vector<double> rt, conf, dec;
  for (const auto& r : runs) {
    rt.push_back(censored_runtime(r, time_budget_ms));
    conf.push_back(static_cast<double>(r.stats.conflicts));
    dec.push_back(static_cast<double>(r.stats.decisions));
    if (r.kind == VerdictKind::Halted)
      ++m.halted_count;
  }
  m.avg_runtime_ms = mean(rt);
  m.halted_pct = runs.empty() ? 0.0 : 100.0 * m.halted_count / runs.size();
  m.median_conflicts = median(conf);
  m.mean_conflicts = mean(conf);
  m.median_decisions = median(dec);
  m.mean_decisions = mean(dec);
  m.runs = std::move(runs);
  return m;
}

SpeedComparison compare(const SpeedMetrics& baseline, const std::optional<SpeedMetrics>& guided) {
  SpeedComparison c;
  c.baseline = baseline;
  c.guided = guided;
  if (guided) {
    c.improvement_ms = baseline.avg_runtime_ms - guided->avg_runtime_ms;
    c.improvement_pct =
        baseline.avg_runtime_ms > 0 ? 100.0 * c.improvement_ms / baseline.avg_runtime_ms : 0.0;
  }
  return c;
}

Prediction oracle_prediction(const std::vector<std::uint8_t>& labels, double core, double other) {
  Prediction p;
  p.probs.reserve(labels.size());
  for (auto l : labels)
    p.probs.push_back(l ? core : other);
  return p;
}

SpeedComparison run_speed_bench(const std::vector<LoadedInstance>& instances,
                                const SolverConfig& cfg, const Guidance& guidance) {
  using clock = std::chrono::steady_clock;
  if (guidance.mode == SeedMode::Model && (!guidance.params || !guidance.model_cfg))
    throw Error(Errc::InvalidArgument, "model seeding needs a model");

  std::vector<InstanceRun> base;
  for (const auto& x : instances) {
    Verdict v = solve(x.cnf, cfg);
    InstanceRun r{x.name, v.kind, v.stats, 0.0, v.stats.wall_ms};
    base.push_back(std::move(r));
  }
  SpeedMetrics baseline = summarize_runs("baseline", std::move(base), cfg.time_budget_ms);
  if (guidance.mode == SeedMode::None)
    return compare(baseline, std::nullopt);

  std::vector<InstanceRun> guided;
  for (const auto& x : instances) {
    const auto t0 = clock::now();
    Prediction pred;
    if (guidance.mode == SeedMode::Model) {
      pred = predict(*guidance.params, *guidance.model_cfg, x.cnf);
    } else {
      if (x.labels.size() != x.cnf.num_vars)
        throw Error(Errc::LengthMismatch, x.name + ": oracle seeding needs labels");
      pred = oracle_prediction(x.labels, guidance.oracle_core, guidance.oracle_other);
    }
    BranchSeed seed = seed_from_prediction(pred);
    const double overhead =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    Verdict v = solve(x.cnf, cfg, seed);
    guided.push_back({x.name, v.kind, v.stats, overhead, overhead + v.stats.wall_ms});
  }
  return compare(baseline,
                 summarize_runs(std::string("guided-") + seed_mode_name(guidance.mode),
                                std::move(guided), cfg.time_budget_ms));
}

AblationAxis parse_ablation_axis(const std::string& s) {
  if (s == "graph") return AblationAxis::Graph;
  if (s == "supervision") return AblationAxis::Supervision;
  if (s == "loss") return AblationAxis::Loss;
  throw Error(Errc::InvalidArgument, "unknown ablation axis '" + s + "'");
}

const char* ablation_axis_name(AblationAxis a) {
  switch (a) {
  case AblationAxis::Graph: return "graph";
  case AblationAxis::Supervision: return "supervision";
  case AblationAxis::Loss: return "loss";
  }
  return "?";
}

std::vector<std::pair<std::string, ModelConfig>> ablation_arms(AblationAxis axis,
                                                               const ModelConfig& base) {
  std::vector<std::pair<std::string, ModelConfig>> arms;
  auto with = [&](const char* name, auto&& edit) {
    ModelConfig c = base;
    edit(c);
    arms.emplace_back(name, c);
  };
  switch (axis) {
  case AblationAxis::Graph:
    with("wlig", [](ModelConfig& c) { c.graph.kind = GraphKind::Wlig; });
    with("lcg", [](ModelConfig& c) { c.graph.kind = GraphKind::Lcg; });
    break;
  case AblationAxis::Supervision:
    with("core", [](ModelConfig& c) { c.target = TargetKind::Core; });
    with("satisfiability", [](ModelConfig& c) { c.target = TargetKind::Satisfiability; });
    break;
  case AblationAxis::Loss:
    with("focal", [](ModelConfig& c) { c.loss = LossKind::Focal; });
    with("ce", [](ModelConfig& c) { c.loss = LossKind::CrossEntropy; });
    with("kl", [](ModelConfig& c) { c.loss = LossKind::Kl; });
    break;
  }
  return arms;
}

AblationResult run_ablation(const DatasetManifest& manifest, AblationAxis axis,
                            const ModelConfig& base) {
  AblationResult result;
  result.axis = axis;
  const auto train_raw = load_split(manifest, Split::Train, axis == AblationAxis::Supervision);
  const auto test_raw = load_split(manifest, Split::Test, false);
  if (train_raw.empty() || test_raw.empty())
    throw Error(Errc::EmptyDataset, "ablation needs non-empty train and test splits");
  for (auto& [name, cfg] : ablation_arms(axis, base)) {
    std::vector<LoadedInstance> train_set;
    for (const auto& x : train_raw)
      if (x.unsat || cfg.target == TargetKind::Satisfiability)
        train_set.push_back(x);
    const auto data = to_training_set(train_set, cfg.graph);
    TrainResult tr = train(data, cfg);
    AblationArm arm;
    arm.name = name;
    arm.cfg = cfg;
    arm.metrics = eval_prediction(tr.params, cfg, test_raw);
    arm.final_train_loss = tr.history.empty() ? 0.0 : tr.history.back().train_loss;
    result.arms.push_back(std::move(arm));
  }
  return result;
}

std::string run_csv(const SpeedMetrics& m, const std::string& provenance) {
  std::ostringstream out;
  out << provenance << '\n' << kRunCsvHeader << '\n';
  for (const auto& r : m.runs)
    out << r.instance << ',' << verdict_name(r.kind) << ',' << r.stats.decisions << ','
        << r.stats.propagations << ',' << r.stats.conflicts << ',' << r.stats.restarts << ','
        << fmt(r.stats.wall_ms) << ',' << fmt(r.overhead_ms) << ',' << fmt(r.total_ms)
        << '\n';
  return out.str();
}

std::string scatter_csv(const SpeedMetrics& baseline, const SpeedMetrics& guided,
                        const std::string& provenance) {
  if (baseline.runs.size() != guided.runs.size())
    throw Error(Errc::LengthMismatch, "arms cover different instance sets");
  std::ostringstream out;
  out << provenance << '\n' << kScatterCsvHeader << '\n';
  for (std::size_t i = 0; i < baseline.runs.size(); ++i) {
    const auto& b = baseline.runs[i];
    const auto& g = guided.runs[i];
    out << b.instance << ',' << fmt(b.total_ms) << ',' << fmt(g.total_ms) << ','
        << b.stats.conflicts << ',' << g.stats.conflicts << '\n';
  }
  return out.str();
}

namespace {

json speed_json(const SpeedMetrics& m) {
  return {{"arm", m.arm},
          {"instances", m.runs.size()},
          {"avg_runtime_ms", m.avg_runtime_ms},
          {"halted", m.halted_count},
          {"halted_pct", m.halted_pct},
          {"median_conflicts", m.median_conflicts},
          {"mean_conflicts", m.mean_conflicts},
          {"median_decisions", m.median_decisions},
          {"mean_decisions", m.mean_decisions}};
}

std::string speed_line(const SpeedMetrics& m) {
  return m.arm + ": A.RT " + fmt(m.avg_runtime_ms) + " ms, halted " +
         std::to_string(m.halted_count) + " (" + fmt(m.halted_pct, 1) +
         "%), conflicts median " + fmt(m.median_conflicts, 1) + " mean " +
         fmt(m.mean_conflicts, 1) + ", decisions median " + fmt(m.median_decisions, 1) +
         " mean " + fmt(m.mean_decisions, 1) + "\n";
}

json metrics_json(const PredMetrics& m) {
  return {{"instances", m.instances},
          {"tp", m.pooled.tp},
          {"fp", m.pooled.fp},
          {"tn", m.pooled.tn},
          {"fn", m.pooled.fn},
          {"accuracy", m.accuracy},
          {"pos_f1", opt_json(m.pos_f1)},
          {"neg_f1", opt_json(m.neg_f1)},
          {"macro_accuracy", m.macro_accuracy},
          {"macro_pos_f1", opt_json(m.macro_pos_f1)},
          {"macro_neg_f1", opt_json(m.macro_neg_f1)}};
}

} // namespace

std::string speed_summary_text(const SpeedComparison& c) {
  std::string s = speed_line(c.baseline);
  if (c.guided) {
    s += speed_line(*c.guided);
    s += "Imp.: " + fmt(c.improvement_ms) + " ms (" + fmt(c.improvement_pct, 2) + "%)\n";
  }
  return s;
}

std::string speed_summary_json(const SpeedComparison& c) {
  json j = {{"baseline", speed_json(c.baseline)}};
  if (c.guided) {
    j["guided"] = speed_json(*c.guided);
    j["improvement_ms"] = c.improvement_ms;
    j["improvement_pct"] = c.improvement_pct;
  }
  return j.dump(2);
}

std::string pred_metrics_text(const PredMetrics& m) {
  return "instances " + std::to_string(m.instances) + "  Acc " + fmt(m.accuracy, 4) +
         "  Pos.F1 " + opt_text(m.pos_f1) + "  Neg.F1 " + opt_text(m.neg_f1) +
         "  (macro Acc " + fmt(m.macro_accuracy, 4) + " Pos.F1 " + opt_text(m.macro_pos_f1) +
         " Neg.F1 " + opt_text(m.macro_neg_f1) + ")  TP " + std::to_string(m.pooled.tp) +
         " FP " + std::to_string(m.pooled.fp) + " TN " + std::to_string(m.pooled.tn) +
         " FN " + std::to_string(m.pooled.fn) + "\n";
}

std::string pred_metrics_json(const PredMetrics& m) { return metrics_json(m).dump(2); }

std::string ablation_text(const AblationResult& r) {
  std::string s = std::string("axis ") + ablation_axis_name(r.axis) + "\n";
  for (const auto& a : r.arms)
    s += "  " + a.name + ": " + pred_metrics_text(a.metrics);
  return s;
}

std::string ablation_json(const AblationResult& r) {
  json j = {{"axis", ablation_axis_name(r.axis)}, {"arms", json::array()}};
  for (const auto& a : r.arms)
    j["arms"].push_back({{"name", a.name},
                         {"config", json::parse(model_config_to_json(a.cfg))},
                         {"final_train_loss", a.final_train_loss},
                         {"metrics", metrics_json(a.metrics)}});
  return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(Errc::Io, "cannot write " + path);
  out << content;
  if (!out)
    throw Error(Errc::Io, "write failed for " + path);
}

std::vector<std::string> write_speed_report(const SpeedComparison& c, const std::string& prefix,
                                            const std::string& provenance) {
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& content) {
    write_text_file(prefix + name, content);
    written.push_back(prefix + name);
  };
  put("baseline.csv", run_csv(c.baseline, provenance));
  if (c.guided) {
    put("guided.csv", run_csv(*c.guided, provenance));
    put("scatter.csv", scatter_csv(c.baseline, *c.guided, provenance));
  }
  put("summary.txt", provenance + "\n" + speed_summary_text(c));
  json summary = json::parse(speed_summary_json(c));
  summary["provenance"] = provenance;
  put("summary.json", summary.dump(2) + "\n");
  return written;
}

} // namespace coreguide
