// coreguide: generate, label, train, predict and solve with core-guided branching.

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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace cg = coreguide;
using nlohmann::json;

namespace {

// JSON config files: top-level keys set options of the subcommand that reads
// the file; nested objects address sub-subcommands.
class JsonConfig : public CLI::Config {
public:
  std::string to_config(const CLI::App* app, bool, bool, std::string) const override {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || opt->get_lnames().front() == "help" ||
          opt->get_lnames().front() == "config")
        continue;
      const std::string& name = opt->get_lnames().front();
      std::vector<std::string> vals = opt->results();
      if (vals.empty()) {
        if (opt->get_type_size() == 0)
          vals.push_back("false");
        else if (!opt->get_default_str().empty())
          vals.push_back(opt->get_default_str());
        else
          continue;
      }
      j[name] = vals.size() == 1 ? json(vals[0]) : json(vals);
    }
    return j.dump();
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config", e.what());
    }
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

private:
  static std::string scalar(const json& v) {
    if (v.is_string())
      return v.get<std::string>();
    if (v.is_boolean())
      return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        collect(value, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const auto& v : value)
          item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(value));
      items.push_back(std::move(item));
    }
  }
};

// Fills options not given on the command line from a JSON object; keys may
// also be nested under the subcommand name.
void apply_config(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw CLI::FileError::Missing(path);
  for (CLI::ConfigItem& item : JsonConfig().from_config(in)) {
    if (!item.parents.empty() && item.parents != std::vector<std::string>{sub->get_name()})
      throw CLI::ConfigError("unknown config key '" + item.fullname() + "'");
    std::replace(item.name.begin(), item.name.end(), '_', '-');
    CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config" || item.name == "help")
      throw CLI::ConfigError("unknown config key '" + item.fullname() + "'");
    if (opt->count() > 0)
      continue;
    for (const auto& v : item.inputs)
      opt->add_result(v);
    opt->run_callback();
  }
}

std::string provenance(const CLI::App* sub) {
  return std::string("# coreguide ") + sub->get_name() + " " +
         JsonConfig().to_config(sub, true, false, "");
}

const std::map<std::string, cg::GraphKind> kGraphKinds{{"wlig", cg::GraphKind::Wlig},
                                                      {"lcg", cg::GraphKind::Lcg}};
const std::map<std::string, cg::LossKind> kLossKinds{{"focal", cg::LossKind::Focal},
                                                    {"ce", cg::LossKind::CrossEntropy},
                                                    {"kl", cg::LossKind::Kl}};
const std::map<std::string, cg::TargetKind> kTargets{
    {"core", cg::TargetKind::Core}, {"satisfiability", cg::TargetKind::Satisfiability}};
const std::map<std::string, cg::Pairing> kPairings{{"half", cg::Pairing::Half},
                                                  {"mirror", cg::Pairing::Mirror}};
const std::map<std::string, cg::NormMode> kNorms{{"global", cg::NormMode::Global},
                                                {"row", cg::NormMode::Row}};
const std::map<std::string, cg::DegreeMode> kDegrees{{"weighted", cg::DegreeMode::Weighted},
                                                    {"simple", cg::DegreeMode::Simple}};
const std::map<std::string, cg::GenFamily> kFamilies{
    {"planted", cg::GenFamily::PlantedCore},
    {"pigeonhole", cg::GenFamily::Pigeonhole},
    {"random", cg::GenFamily::RandomKsat}};
const std::map<std::string, cg::KernelKind> kKernels{{"random", cg::KernelKind::RandomKcnf},
                                                    {"pigeonhole", cg::KernelKind::Pigeonhole}};
const std::map<std::string, cg::SeedMode> kSeedModes{{"none", cg::SeedMode::None},
                                                    {"model", cg::SeedMode::Model},
                                                    {"oracle", cg::SeedMode::Oracle}};
const std::map<std::string, cg::Split> kSplits{{"train", cg::Split::Train},
                                              {"test", cg::Split::Test}};

template <class T>
CLI::CheckedTransformer choice(const std::map<std::string, T>& m) {
  return CLI::CheckedTransformer(m, CLI::ignore_case);
}

void add_model_options(CLI::App* sub, cg::ModelConfig& cfg) {
  sub->add_option("--d", cfg.d, "Embedding half-width (nodes carry 2d)")->capture_default_str();
  sub->add_option("--layers", cfg.layers, "WGCN iterations")->capture_default_str();
  sub->add_option("--hidden", cfg.hidden, "Head hidden width")->capture_default_str();
  sub->add_flag("--shared-weights", cfg.shared_weights, "One weight set for all iterations");
  sub->add_option("--pairing", cfg.pairing, "Literal pairing in the head: half|mirror")
      ->transform(choice(kPairings))
      ->default_str("half");
  sub->add_option("--graph", cfg.graph.kind, "Graph construction: wlig|lcg")
      ->transform(choice(kGraphKinds))
      ->default_str("wlig");
  sub->add_option("--norm", cfg.graph.norm, "Adjacency normalization: global|row")
      ->transform(choice(kNorms))
      ->default_str("global");
  sub->add_option("--degree", cfg.graph.degree, "Degree feature: weighted|simple")
      ->transform(choice(kDegrees))
      ->default_str("weighted");
  sub->add_option("--loss", cfg.loss, "Loss: focal|ce|kl")
      ->transform(choice(kLossKinds))
      ->default_str("focal");
  sub->add_option("--target", cfg.target, "Supervision: core|satisfiability")
      ->transform(choice(kTargets))
      ->default_str("core");
  sub->add_option("--alpha", cfg.alpha, "Focal class weight")->capture_default_str();
  sub->add_option("--gamma", cfg.gamma, "Focal exponent")->capture_default_str();
  sub->add_option("--kl-smoothing", cfg.kl_smoothing, "Label smoothing of the KL target")
      ->capture_default_str();
  sub->add_option("--lr", cfg.lr, "Adam learning rate")->capture_default_str();
  sub->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--batch-size", cfg.batch_size, "Instances per batch")->capture_default_str();
  sub->add_option("--seed", cfg.seed, "Initialization and shuffling seed")->capture_default_str();
}

void add_solver_options(CLI::App* sub, cg::SolverConfig& cfg) {
  sub->add_option("--conflict-budget", cfg.conflict_budget, "Conflicts per solve (0 = none)")
      ->capture_default_str();
  sub->add_option("--time-budget-ms", cfg.time_budget_ms, "Wall time per solve (0 = none)")
      ->capture_default_str();
  sub->add_option("--decay", cfg.activity_decay, "VSIDS activity decay")->capture_default_str();
  sub->add_option("--restart-base", cfg.restart_base, "Conflicts per Luby unit")
      ->capture_default_str();
  sub->add_option("--solver-seed", cfg.seed, "Solver RNG seed")->capture_default_str();
  sub->add_option("--random-freq", cfg.random_decision_freq, "Random decision frequency")
      ->capture_default_str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw cg::Error(cg::Errc::Io, "cannot write " + path);
  return out;
}

struct GenArgs {
  std::string out;
  std::string preset;
  std::size_t count = 10;
  double sat_fraction = 0.0;
  cg::GenSpec spec;
};

int run_gen(const GenArgs& a, const CLI::App* sub) {
  if (!a.preset.empty()) {
    cg::CorpusOptions opt;
    opt.preset = cg::parse_corpus_preset(a.preset);
    opt.count = a.count;
    opt.sat_fraction = a.sat_fraction;
    opt.seed = a.spec.seed;
    auto paths = cg::write_corpus(a.out, opt);
    cg::write_text_file((std::filesystem::path(a.out) / "gen.provenance").string(),
                        provenance(sub) + "\n");
    std::cout << "wrote " << paths.size() << " instances to " << a.out << "\n";
    return 0;
  }
  cg::Rng rng(a.spec.seed);
  cg::Cnf cnf;
  std::vector<std::uint32_t> core;
  switch (a.spec.family) {
  case cg::GenFamily::PlantedCore: {
    auto inst = cg::gen_planted_core(a.spec, rng);
    cnf = std::move(inst.cnf);
    core = std::move(inst.core_vars);
    break;
  }
  case cg::GenFamily::Pigeonhole:
    cnf = cg::gen_pigeonhole(a.spec.holes);
    for (std::uint32_t v = 1; v <= cnf.num_vars; ++v)
      core.push_back(v);
    break;
  case cg::GenFamily::RandomKsat:
    a.spec.validate();
    cnf = cg::gen_random_ksat(a.spec.n_core_vars,
                              static_cast<std::size_t>(a.spec.clause_ratio * a.spec.n_core_vars + 0.5),
                              a.spec.k, rng);
    break;
  }
  cg::write_dimacs_file(cnf, a.out);
  if (a.spec.family != cg::GenFamily::RandomKsat) {
    std::filesystem::path labels(a.out);
    labels.replace_extension(".labels");
    cg::write_label_file(labels.string(), core);
  }
  std::cout << "wrote " << a.out << " (" << cnf.num_vars << " vars, " << cnf.clauses.size()
            << " clauses)\n";
  return 0;
}

void print_epoch(const cg::EpochRecord& r) {
  std::fprintf(stderr, "epoch %d train_loss %.6f", r.epoch, r.train_loss);
  if (r.val_loss == r.val_loss)
    std::fprintf(stderr, " val_loss %.6f", r.val_loss);
  std::fprintf(stderr, "\n");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"coreguide: UNSAT-core prediction and core-guided CDCL solving"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.require_subcommand(1);

  // gen
  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate instances");
  gen_cmd->add_option("--out", gen.out, "Output file, or directory with --preset")->required();
  gen_cmd->add_option("--preset", gen.preset, "Corpus preset: lec-like|comp-like|bench-hard");
  gen_cmd->add_option("--count", gen.count, "Corpus size")->capture_default_str();
  gen_cmd->add_option("--sat-fraction", gen.sat_fraction, "Share of satisfiable instances")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--family", gen.spec.family, "Single instance: planted|pigeonhole|random")
      ->transform(choice(kFamilies))
      ->default_str("planted");
  gen_cmd->add_option("--kernel", gen.spec.kernel, "Planted kernel: random|pigeonhole")
      ->transform(choice(kKernels))
      ->default_str("random");
  gen_cmd->add_option("--n-core", gen.spec.n_core_vars, "Kernel (or random k-SAT) variables")
      ->capture_default_str();
  gen_cmd->add_option("--n-pad", gen.spec.n_pad_vars, "Padding variables")->capture_default_str();
  gen_cmd->add_option("--k", gen.spec.k, "Literals per clause")->capture_default_str();
  gen_cmd->add_option("--ratio", gen.spec.clause_ratio, "Kernel clauses per variable")
      ->capture_default_str();
  gen_cmd->add_option("--pad-ratio", gen.spec.pad_clause_ratio, "Padding clauses per variable")
      ->capture_default_str();
  gen_cmd->add_option("--holes", gen.spec.holes, "Pigeonhole holes")->capture_default_str();
  gen_cmd->add_option("--seed", gen.spec.seed, "Generator seed")->capture_default_str();

  // label
  std::string label_dir;
  std::uint64_t split_seed = 1;
  cg::LabelConfig label_cfg;
  bool no_planted = false;
  auto* label_cmd = app.add_subcommand("label", "Label a corpus and write manifest.json");
  label_cmd->add_option("--dir", label_dir, "Instance directory")->required();
  label_cmd->add_option("--split-seed", split_seed, "Train/test split seed")
      ->capture_default_str();
  label_cmd->add_flag("--minimize", label_cfg.minimize, "Deletion pass over extracted cores");
  label_cmd->add_flag("--no-planted", no_planted, "Ignore planted .labels sidecars");
  label_cmd->add_option("--jobs", label_cfg.jobs, "Labeling threads")->capture_default_str();
  add_solver_options(label_cmd, label_cfg.solver);

  // encode
  std::string encode_cnf, encode_out;
  cg::GraphKind encode_kind = cg::GraphKind::Wlig;
  auto* encode_cmd = app.add_subcommand("encode", "Dump the graph of an instance");
  encode_cmd->add_option("--cnf", encode_cnf, "DIMACS input")->required();
  encode_cmd->add_option("--graph", encode_kind, "wlig|lcg")
      ->transform(choice(kGraphKinds))
      ->default_str("wlig");
  encode_cmd->add_option("--out", encode_out, "Edge-list output (default stdout)");

  // train
  std::string train_manifest, train_out, train_metrics;
  double val_fraction = 0.0;
  cg::ModelConfig train_cfg;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a manifest's train split");
  train_cmd->add_option("--manifest", train_manifest, "Dataset manifest")->required();
  train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
  train_cmd->add_option("--val-fraction", val_fraction,
                        "Share of the train split held out for model selection")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.5));
  train_cmd->add_option("--metrics", train_metrics, "Write test-split metrics JSON here");
  add_model_options(train_cmd, train_cfg);

  // predict
  std::string predict_model, predict_cnf, predict_out;
  auto* predict_cmd = app.add_subcommand("predict", "Per-variable core probabilities");
  predict_cmd->add_option("--model", predict_model, "Checkpoint")->required();
  predict_cmd->add_option("--cnf", predict_cnf, "DIMACS input")->required();
  predict_cmd->add_option("--out", predict_out, "Output file (default stdout)");

  // solve
  std::string solve_cnf, solve_model, solve_csv;
  cg::SolverConfig solve_cfg;
  auto* solve_cmd = app.add_subcommand("solve", "Solve an instance, optionally model-guided");
  solve_cmd->add_option("--cnf", solve_cnf, "DIMACS input")->required();
  solve_cmd->add_option("--seed-model", solve_model, "Checkpoint used to seed branching");
  solve_cmd->add_option("--csv", solve_csv, "Append the statistics record here (else stderr)");
  add_solver_options(solve_cmd, solve_cfg);

  // bench
  std::string bench_manifest, bench_model, bench_prefix;
  cg::SeedMode bench_mode = cg::SeedMode::None;
  cg::Split bench_split = cg::Split::Test;
  std::size_t bench_limit = 0;
  cg::SolverConfig bench_cfg;
  auto* bench_cmd = app.add_subcommand("bench", "Baseline vs guided solving on a manifest");
  bench_cmd->add_option("--manifest", bench_manifest, "Dataset manifest")->required();
  bench_cmd->add_option("--model", bench_model, "Checkpoint (implies --seeding model)");
  bench_cmd->add_option("--seeding", bench_mode, "none|model|oracle")
      ->transform(choice(kSeedModes))
      ->default_str("none");
  bench_cmd->add_option("--split", bench_split, "train|test")
      ->transform(choice(kSplits))
      ->default_str("test");
  bench_cmd->add_option("--limit", bench_limit, "Use at most this many instances (0 = all)")
      ->capture_default_str();
  bench_cmd->add_option("--out-prefix", bench_prefix, "Report path prefix")
      ->default_str("bench_");
  add_solver_options(bench_cmd, bench_cfg);

  // ablate
  std::string ablate_manifest, ablate_out;
  std::string ablate_axis = "all";
  cg::ModelConfig ablate_cfg;
  auto* ablate_cmd = app.add_subcommand("ablate", "Paired training runs along one axis");
  ablate_cmd->add_option("--manifest", ablate_manifest, "Dataset manifest")->required();
  ablate_cmd->add_option("--axis", ablate_axis, "graph|supervision|loss|all")
      ->capture_default_str()
      ->check(CLI::IsMember({"graph", "supervision", "loss", "all"}));
  ablate_cmd->add_option("--out", ablate_out, "Write JSON results here");
  add_model_options(ablate_cmd, ablate_cfg);

  // gradcheck
  std::uint64_t gc_seed = 1;
  cg::GradCheckOptions gc_opt;
  double gc_tol = 1e-4;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  gc_cmd->add_option("--seed", gc_seed, "Random seed")->capture_default_str();
  gc_cmd->add_option("--instances", gc_opt.instances, "Random instances")->capture_default_str();
  gc_cmd->add_option("--max-vars", gc_opt.max_vars, "Largest instance")->capture_default_str();
  gc_cmd->add_option("--max-d", gc_opt.max_d, "Largest embedding half-width")
      ->capture_default_str();
  gc_cmd->add_option("--max-layers", gc_opt.max_layers, "Most WGCN iterations")
      ->capture_default_str();
  gc_cmd->add_option("--step", gc_opt.step, "Central-difference step")->capture_default_str();
  gc_cmd->add_option("--tolerance", gc_tol, "Failure threshold on the relative error")
      ->capture_default_str();

  const std::vector<CLI::App*> subs = {gen_cmd,   label_cmd, encode_cmd, train_cmd, predict_cmd,
                                       solve_cmd, bench_cmd, ablate_cmd, gc_cmd};
  std::vector<std::string> config_paths(subs.size());
  // Required options may come from the config file, so they are checked after it.
  std::vector<std::vector<CLI::Option*>> required(subs.size());
  for (std::size_t i = 0; i < subs.size(); ++i) {
    for (CLI::Option* opt : subs[i]->get_options())
      if (opt->get_required()) {
        opt->required(false)->description(opt->get_description() + " (required)");
        required[i].push_back(opt);
      }
    subs[i]->add_option("--config", config_paths[i],
                        "JSON file with option values (flags override it)");
  }

  try {
    app.parse(argc, argv);
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (*subs[i] && !config_paths[i].empty())
        apply_config(subs[i], config_paths[i]);
    for (std::size_t i = 0; i < subs.size(); ++i)
      for (CLI::Option* opt : required[i])
        if (*subs[i] && opt->count() == 0)
          throw CLI::RequiredError(opt->get_name());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen_cmd)
      return run_gen(gen, gen_cmd);

    if (*label_cmd) {
      label_cfg.use_planted = !no_planted;
      auto m = cg::build_dataset(label_dir, label_cfg, split_seed);
      std::cout << "labeled " << m.entries.size() << " instances, skipped " << m.skipped.size()
                << " (train " << m.split_entries(cg::Split::Train).size() << ", test "
                << m.split_entries(cg::Split::Test).size() << ")\n";
      for (const auto& s : m.skipped)
        std::cout << "skip " << s.cnf << ": " << s.reason << "\n";
      return 0;
    }

    if (*encode_cmd) {
      cg::Cnf cnf = cg::read_dimacs_file(encode_cnf);
      std::ofstream file;
      std::ostream* out = &std::cout;
      if (!encode_out.empty()) {
        file = open_out(encode_out);
        out = &file;
      }
      *out << provenance(encode_cmd) << "\n";
      if (encode_kind == cg::GraphKind::Wlig)
        cg::dump_edge_list(cg::build_wlig(cnf), *out);
      else
        cg::dump_edge_list(cg::build_lcg(cnf), *out);
      return 0;
    }

    if (*train_cmd) {
      train_cfg.validate();
      const auto manifest = cg::load_manifest(train_manifest);
      const bool sat_target = train_cfg.target == cg::TargetKind::Satisfiability;
      auto train_raw = cg::load_split(manifest, cg::Split::Train, sat_target);
      if (train_raw.empty())
        throw cg::Error(cg::Errc::EmptyDataset, "train split is empty");
      auto all = cg::to_training_set(train_raw, train_cfg.graph);
      const auto n_val =
          static_cast<std::size_t>(val_fraction * static_cast<double>(all.size()) + 0.5);
      std::vector<cg::TrainingInstance> val(all.end() - static_cast<std::ptrdiff_t>(n_val),
                                            all.end());
      all.resize(all.size() - n_val);
      cg::TrainOptions opt;
      opt.on_epoch = print_epoch;
      auto result = cg::train(all, train_cfg, val, opt);
      cg::save_checkpoint(result.params, train_cfg, train_out);
      std::cout << "saved " << train_out << " (best epoch " << result.best_epoch << ")\n";
      const auto test = cg::load_split(manifest, cg::Split::Test);
      if (!test.empty()) {
        auto metrics = cg::eval_prediction(result.params, train_cfg, test);
        std::vector<std::vector<std::uint8_t>> labels;
        for (const auto& x : test)
          labels.push_back(x.labels);
        std::cout << "test      " << cg::pred_metrics_text(metrics);
        std::cout << "majority  " << cg::pred_metrics_text(cg::majority_baseline(labels));
        if (!train_metrics.empty()) {
          json j = json::parse(cg::pred_metrics_json(metrics));
          j["provenance"] = provenance(train_cmd);
          cg::write_text_file(train_metrics, j.dump(2) + "\n");
        }
      }
      return 0;
    }

    if (*predict_cmd) {
      auto ckpt = cg::load_checkpoint(predict_model);
      cg::Cnf cnf = cg::read_dimacs_file(predict_cnf);
      cg::Prediction p = cg::predict(ckpt.params, ckpt.config, cnf);
      std::ofstream file;
      std::ostream* out = &std::cout;
      if (!predict_out.empty()) {
        file = open_out(predict_out);
        out = &file;
      }
      *out << provenance(predict_cmd) << "\n";
      char buf[64];
      std::snprintf(buf, sizeof buf, "# elapsed_ms %.3f", p.elapsed_ms);
      *out << buf << (p.uniform_fallback ? " uniform-fallback" : "") << "\n";
      for (std::size_t i = 0; i < p.probs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu %.6f\n", i + 1, p.probs[i]);
        *out << buf;
      }
      return 0;
    }

    if (*solve_cmd) {
      solve_cfg.validate();
      cg::Cnf cnf = cg::read_dimacs_file(solve_cnf);
      cnf.name = std::filesystem::path(solve_cnf).filename().string();
      std::optional<cg::BranchSeed> seed;
      double overhead_ms = 0.0;
      if (!solve_model.empty()) {
        auto ckpt = cg::load_checkpoint(solve_model);
        const auto t0 = std::chrono::steady_clock::now();
        seed = cg::seed_from_prediction(cg::predict(ckpt.params, ckpt.config, cnf));
        overhead_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
      }
      cg::Verdict v = cg::solve(cnf, solve_cfg, seed);
      std::cout << cg::verdict_name(v.kind) << "\n";
      if (v.kind == cg::VerdictKind::Sat) {
        std::cout << "v";
        for (std::size_t i = 0; i < v.model.size(); ++i)
          std::cout << ' ' << (v.model[i] ? "" : "-") << (i + 1);
        std::cout << " 0\n";
      }
      char extra[64];
      std::snprintf(extra, sizeof extra, ",%.3f,%.3f", overhead_ms, overhead_ms + v.stats.wall_ms);
      const std::string record = cg::verdict_record(cnf.name, v) + extra;
      if (solve_csv.empty()) {
        std::cerr << cg::kRunCsvHeader << "\n" << record << "\n";
      } else {
        const bool fresh = !std::filesystem::exists(solve_csv);
        std::ofstream out(solve_csv, std::ios::app);
        if (!out)
          throw cg::Error(cg::Errc::Io, "cannot write " + solve_csv);
        if (fresh)
          out << provenance(solve_cmd) << "\n" << cg::kRunCsvHeader << "\n";
        out << record << "\n";
      }
      return 0;
    }

    if (*bench_cmd) {
      bench_cfg.validate();
      const auto manifest = cg::load_manifest(bench_manifest);
      auto instances = cg::load_split(manifest, bench_split);
      if (bench_limit > 0 && instances.size() > bench_limit)
        instances.resize(bench_limit);
      cg::Guidance g;
      std::optional<cg::Checkpoint> ckpt;
      if (!bench_model.empty()) {
        ckpt = cg::load_checkpoint(bench_model);
        if (bench_mode == cg::SeedMode::None)
          bench_mode = cg::SeedMode::Model;
        g.params = &ckpt->params;
        g.model_cfg = &ckpt->config;
      }
      g.mode = bench_mode;
      auto cmp = cg::run_speed_bench(instances, bench_cfg, g);
      for (const auto& path : cg::write_speed_report(cmp, bench_prefix, provenance(bench_cmd)))
        std::cerr << "wrote " << path << "\n";
      std::cout << cg::speed_summary_text(cmp);
      return 0;
    }

    if (*ablate_cmd) {
      ablate_cfg.validate();
      const auto manifest = cg::load_manifest(ablate_manifest);
      std::vector<cg::AblationAxis> axes;
      if (ablate_axis == "all")
        axes = {cg::AblationAxis::Graph, cg::AblationAxis::Supervision, cg::AblationAxis::Loss};
      else
        axes = {cg::parse_ablation_axis(ablate_axis)};
      json all = {{"provenance", provenance(ablate_cmd)}, {"axes", json::array()}};
      for (auto axis : axes) {
        auto r = cg::run_ablation(manifest, axis, ablate_cfg);
        std::cout << cg::ablation_text(r);
        all["axes"].push_back(json::parse(cg::ablation_json(r)));
      }
      if (!ablate_out.empty())
        cg::write_text_file(ablate_out, all.dump(2) + "\n");
      return 0;
    }

    if (*gc_cmd) {
      auto r = cg::random_gradcheck(gc_seed, gc_opt);
      for (const auto& t : r.tensors)
        std::printf("%-20s max_rel_error %.3e  checked %zu  skipped %zu\n", t.name.c_str(),
                    t.max_rel_error, t.checked, t.skipped);
      std::printf("max relative error %.3e (%s)\n", r.max_rel_error, r.worst.c_str());
      return r.max_rel_error < gc_tol ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
