#include "coreguide/labeling.hpp"

#include "coreguide/datagen.hpp"
#include "coreguide/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <mutex>
#include <set>
#include <thread>

namespace coreguide {

namespace fs = std::filesystem;
using nlohmann::json;

const char* label_source_name(LabelSource s) {
  return s == LabelSource::Planted ? "planted" : "oracle";
}

const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

namespace {

LabelSource parse_label_source(const std::string& s) {
  if (s == "planted") return LabelSource::Planted;
  if (s == "oracle") return LabelSource::Oracle;
  throw Error(Errc::Io, "manifest: unknown label source '" + s + "'");
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw Error(Errc::Io, "manifest: unknown split '" + s + "'");
}

VerdictKind parse_verdict(const std::string& s) {
  if (s == "SAT") return VerdictKind::Sat;
  if (s == "UNSAT") return VerdictKind::Unsat;
  if (s == "HALTED") return VerdictKind::Halted;
  throw Error(Errc::Io, "manifest: unknown verdict '" + s + "'");
}

std::string sidecar(const fs::path& cnf, const char* ext) {
  fs::path p = cnf;
  p.replace_extension(ext);
  return p.string();
}

} // namespace

std::size_t VarLabels::positives() const {
  return static_cast<std::size_t>(std::count(core.begin(), core.end(), std::uint8_t{1}));
}

VarLabels labels_from_vars(const std::vector<std::uint32_t>& vars, std::uint32_t num_vars,
                           LabelSource source) {
  VarLabels out;
  out.source = source;
  out.core.assign(num_vars, 0);
  for (std::uint32_t v : vars) {
    if (v < 1 || v > num_vars)
      throw Error(Errc::VarOutOfRange,
                  "label variable " + std::to_string(v) + " outside 1.." +
                      std::to_string(num_vars));
    out.core[v - 1] = 1;
  }
  return out;
}

std::vector<std::uint32_t> vars_from_labels(const VarLabels& labels) {
  std::vector<std::uint32_t> vars;
  for (std::size_t i = 0; i < labels.core.size(); ++i)
    if (labels.core[i])
      vars.push_back(static_cast<std::uint32_t>(i + 1));
  return vars;
}

LabelOutcome label_instance(const Cnf& cnf, const LabelConfig& cfg) {
  LabelOutcome out;
  CoreResult core;
  try {
    core = extract_core(cnf, cfg.solver, CoreOptions{cfg.minimize});
  } catch (const Error& e) {
    if (e.code() == Errc::NotUnsat) {
      out.verdict = VerdictKind::Sat;
      out.reason = "satisfiable";
      return out;
    }
    if (e.code() == Errc::BudgetExhausted) {
      out.verdict = VerdictKind::Halted;
      out.reason = "budget exhausted";
      return out;
    }
    throw;
  }
  out.verdict = VerdictKind::Unsat;
  if (cfg.verify) {
    auto ok = verify_core(cnf, core.clauses, cfg.solver);
    if (!ok || !*ok) {
      out.reason = ok ? "extracted core failed verification" : "core verification halted";
      return out;
    }
  }
  out.labels = labels_from_vars(core.vars, cnf.num_vars, LabelSource::Oracle);
  return out;
}

std::string DatasetManifest::resolve(const std::string& rel) const {
  if (base_dir.empty() || fs::path(rel).is_absolute())
    return rel;
  return (fs::path(base_dir) / rel).string();
}

std::vector<const ManifestEntry*> DatasetManifest::split_entries(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == s)
      out.push_back(&e);
  return out;
}

std::size_t train_count(std::size_t n) {
  return static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
}

DatasetManifest build_dataset(const std::string& instance_dir, const LabelConfig& cfg,
                              std::uint64_t split_seed) {
  if (!fs::is_directory(instance_dir))
    throw Error(Errc::Io, "not a directory: " + instance_dir);
  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(instance_dir))
    if (de.is_regular_file() && de.path().extension() == ".cnf")
      files.push_back(de.path());
  std::sort(files.begin(), files.end());

  // Split is decided on the file list so it does not depend on labeling outcomes.
  std::vector<std::size_t> order(files.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(split_seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Split> split(files.size(), Split::Test);
  const std::size_t n_train = train_count(files.size());
  for (std::size_t i = 0; i < n_train; ++i)
    split[order[i]] = Split::Train;

  DatasetManifest m;
  m.split_seed = split_seed;
  m.base_dir = instance_dir;
  json echo = {{"minimize", cfg.minimize},
               {"use_planted", cfg.use_planted},
               {"verify", cfg.verify},
               {"conflict_budget", cfg.solver.conflict_budget},
               {"time_budget_ms", cfg.solver.time_budget_ms}};
  m.config = echo.dump();

  struct Outcome {
    std::optional<ManifestEntry> entry;
    std::optional<SkipRecord> skip;
  };
  std::vector<Outcome> outcomes(files.size());
  auto process = [&](std::size_t i) {
    const fs::path& path = files[i];
    const std::string rel = path.filename().string();
    Outcome& out = outcomes[i];
    Cnf cnf;
    try {
      cnf = read_dimacs_file(path.string());
    } catch (const Error& e) {
      out.skip = SkipRecord{rel, std::string("unreadable: ") + e.what(), std::nullopt,
                            split[i], 0, 0};
      return;
    }
    ManifestEntry entry;
    entry.cnf = rel;
    entry.split = split[i];
    entry.n_vars = cnf.num_vars;
    entry.n_clauses = cnf.clauses.size();
    entry.verdict = VerdictKind::Unsat;

    const std::string planted = sidecar(path, ".labels");
    const std::string cached = sidecar(path, ".core");
    if (cfg.use_planted && fs::exists(planted)) {
      labels_from_vars(read_label_file(planted), cnf.num_vars, LabelSource::Planted);
      entry.labels = fs::path(planted).filename().string();
      entry.label_source = LabelSource::Planted;
    } else if (fs::exists(cached)) {
      labels_from_vars(read_label_file(cached), cnf.num_vars, LabelSource::Oracle);
      entry.labels = fs::path(cached).filename().string();
      entry.label_source = LabelSource::Oracle;
    } else {
      LabelOutcome lo = label_instance(cnf, cfg);
      if (!lo.labels) {
        out.skip = SkipRecord{rel, lo.reason, lo.verdict, split[i], cnf.num_vars,
                              cnf.clauses.size()};
        return;
      }
      write_label_file(cached, vars_from_labels(*lo.labels));
      entry.labels = fs::path(cached).filename().string();
      entry.label_source = LabelSource::Oracle;
    }
    out.entry = std::move(entry);
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(files.size())));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < files.size(); ++i)
      process(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < jobs; ++t)
      workers.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < files.size();) {
          try {
            process(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure)
              failure = std::current_exception();
          }
        }
      });
    for (auto& w : workers)
      w.join();
    if (failure)
      std::rethrow_exception(failure);
  }
  for (auto& o : outcomes) {
    if (o.entry)
      m.entries.push_back(std::move(*o.entry));
    if (o.skip)
      m.skipped.push_back(std::move(*o.skip));
  }
  save_manifest(m, (fs::path(instance_dir) / "manifest.json").string());
  return m;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["split_seed"] = m.split_seed;
  j["config"] = json::parse(m.config.empty() ? "{}" : m.config);
  j["entries"] = json::array();
  for (const auto& e : m.entries)
    j["entries"].push_back({{"cnf", e.cnf},
                            {"labels", e.labels},
                            {"label_source", label_source_name(e.label_source)},
                            {"split", split_name(e.split)},
                            {"n_vars", e.n_vars},
                            {"n_clauses", e.n_clauses},
                            {"verdict", verdict_name(e.verdict)}});
  j["skipped"] = json::array();
  for (const auto& s : m.skipped)
    j["skipped"].push_back({{"cnf", s.cnf},
                            {"reason", s.reason},
                            {"verdict", s.verdict ? json(verdict_name(*s.verdict)) : json()},
                            {"split", split_name(s.split)},
                            {"n_vars", s.n_vars},
                            {"n_clauses", s.n_clauses}});
  return j.dump(2);
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::set<std::string> seen;
  for (const auto& e : m.entries)
    if (!seen.insert(e.cnf).second)
      throw Error(Errc::InvalidArgument, "manifest lists " + e.cnf + " twice");
  std::ofstream out(path);
  if (!out)
    throw Error(Errc::Io, "cannot write " + path);
  out << manifest_to_json(m) << '\n';
  if (!out)
    throw Error(Errc::Io, "write failed for " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::Io, "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::Io, path + ": " + e.what());
  }
  DatasetManifest m;
  m.base_dir = fs::path(path).parent_path().string();
  try {
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.config = j.value("config", json::object()).dump();
    for (const auto& e : j.at("entries")) {
      ManifestEntry x;
      x.cnf = e.at("cnf").get<std::string>();
      x.labels = e.at("labels").get<std::string>();
      x.label_source = parse_label_source(e.at("label_source").get<std::string>());
      x.split = parse_split(e.at("split").get<std::string>());
      x.n_vars = e.at("n_vars").get<std::uint32_t>();
      x.n_clauses = e.at("n_clauses").get<std::size_t>();
      x.verdict = parse_verdict(e.at("verdict").get<std::string>());
      m.entries.push_back(std::move(x));
    }
    for (const auto& s : j.value("skipped", json::array())) {
      SkipRecord r;
      r.cnf = s.at("cnf").get<std::string>();
      r.reason = s.value("reason", "");
      if (s.contains("verdict") && !s["verdict"].is_null())
        r.verdict = parse_verdict(s["verdict"].get<std::string>());
      r.split = parse_split(s.value("split", "train"));
      r.n_vars = s.value("n_vars", 0u);
      r.n_clauses = s.value("n_clauses", std::size_t{0});
      m.skipped.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::Io, path + ": " + e.what());
  }
  return m;
}

std::vector<LoadedInstance> load_split(const DatasetManifest& m, Split s, bool include_sat) {
  std::vector<LoadedInstance> out;
  for (const ManifestEntry* e : m.split_entries(s)) {
    LoadedInstance x;
    x.name = e->cnf;
    x.cnf = read_dimacs_file(m.resolve(e->cnf));
    x.labels = labels_from_vars(read_label_file(m.resolve(e->labels)), x.cnf.num_vars,
                                e->label_source)
                   .core;
    x.unsat = true;
    out.push_back(std::move(x));
  }
  if (include_sat)
    for (const auto& r : m.skipped)
      if (r.split == s && r.verdict == VerdictKind::Sat) {
        LoadedInstance x;
        x.name = r.cnf;
        x.cnf = read_dimacs_file(m.resolve(r.cnf));
        x.unsat = false;
        out.push_back(std::move(x));
      }
  return out;
}

std::vector<TrainingInstance> to_training_set(const std::vector<LoadedInstance>& xs,
                                              const GraphOptions& graph) {
  std::vector<TrainingInstance> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    auto labels = x.labels;
    if (labels.empty())
      labels.assign(x.cnf.num_vars, 0);
    out.push_back(make_training_instance(x.cnf, std::move(labels), graph, x.unsat));
    out.back().name = x.name;
  }
  return out;
}

} // namespace coreguide
