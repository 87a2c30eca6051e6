#include "coreguide/error.hpp"
#include "coreguide/model.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace coreguide {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

//===----------------------------------------------------------------------===//
// Enum names
//===----------------------------------------------------------------------===//

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
  case LossKind::Focal: return "focal";
  case LossKind::CrossEntropy: return "cross_entropy";
  case LossKind::Kl: return "kl";
  }
  return "?";
}

const char* target_kind_name(TargetKind kind) {
  return kind == TargetKind::Core ? "core" : "satisfiability";
}

const char* graph_kind_name(GraphKind kind) {
  return kind == GraphKind::Wlig ? "wlig" : "lcg";
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "focal") return LossKind::Focal;
  if (s == "cross_entropy" || s == "ce") return LossKind::CrossEntropy;
  if (s == "kl") return LossKind::Kl;
  throw Error(Errc::InvalidArgument, "unknown loss '" + s + "'");
}

TargetKind parse_target_kind(const std::string& s) {
  if (s == "core") return TargetKind::Core;
  if (s == "satisfiability" || s == "sat") return TargetKind::Satisfiability;
  throw Error(Errc::InvalidArgument, "unknown target '" + s + "'");
}

GraphKind parse_graph_kind(const std::string& s) {
  if (s == "wlig") return GraphKind::Wlig;
  if (s == "lcg") return GraphKind::Lcg;
  throw Error(Errc::InvalidArgument, "unknown graph '" + s + "'");
}

//===----------------------------------------------------------------------===//
// Config JSON
//===----------------------------------------------------------------------===//

std::string model_config_to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["d"] = cfg.d;
  j["layers"] = cfg.layers;
  j["hidden"] = cfg.hidden;
  j["shared_weights"] = cfg.shared_weights;
  j["pairing"] = cfg.pairing == Pairing::Half ? "half" : "mirror";
  j["graph"] = graph_kind_name(cfg.graph.kind);
  j["degree"] = cfg.graph.degree == DegreeMode::Weighted ? "weighted" : "simple";
  j["norm"] = cfg.graph.norm == NormMode::Global ? "global" : "row";
  j["alpha"] = cfg.alpha;
  j["gamma"] = cfg.gamma;
  j["loss"] = loss_kind_name(cfg.loss);
  j["target"] = target_kind_name(cfg.target);
  j["kl_smoothing"] = cfg.kl_smoothing;
  j["lr"] = cfg.lr;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("model config JSON: ") + e.what());
  }
  ModelConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key))
      j.at(key).get_to(field);
  };
  try {
    get("d", cfg.d);
    get("layers", cfg.layers);
    get("hidden", cfg.hidden);
    get("shared_weights", cfg.shared_weights);
    get("alpha", cfg.alpha);
    get("gamma", cfg.gamma);
    get("kl_smoothing", cfg.kl_smoothing);
    get("lr", cfg.lr);
    get("epochs", cfg.epochs);
    get("batch_size", cfg.batch_size);
    get("seed", cfg.seed);
    if (j.contains("pairing"))
      cfg.pairing = j["pairing"] == "mirror" ? Pairing::Mirror : Pairing::Half;
    if (j.contains("graph"))
      cfg.graph.kind = parse_graph_kind(j["graph"].get<std::string>());
    if (j.contains("degree"))
      cfg.graph.degree = j["degree"] == "simple" ? DegreeMode::Simple : DegreeMode::Weighted;
    if (j.contains("norm"))
      cfg.graph.norm = j["norm"] == "row" ? NormMode::Row : NormMode::Global;
    if (j.contains("loss"))
      cfg.loss = parse_loss_kind(j["loss"].get<std::string>());
    if (j.contains("target"))
      cfg.target = parse_target_kind(j["target"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("model config JSON: ") + e.what());
  }
  return cfg;
}

//===----------------------------------------------------------------------===//
// Binary format
//===----------------------------------------------------------------------===//

namespace {

constexpr char kMagic[4] = {'I', 'B', 'N', 'W'};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool at_end() const { return pos_ == bytes_.size(); }

  template <typename T>
  T get(Errc on_short, const char* what) {
    T value;
    need(sizeof(T), on_short, what);
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string take(std::size_t n, Errc on_short, const char* what) {
    need(n, on_short, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

private:
  void need(std::size_t n, Errc code, const char* what) const {
    if (bytes_.size() - pos_ < n)
      throw Error(code, std::string("unexpected end of checkpoint in ") + what);
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

} // namespace

std::string serialize_checkpoint(const ModelParams& params, const ModelConfig& cfg) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string json = model_config_to_json(cfg);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(json.size()));
  out += json;
  params.for_each([&](const std::string& name, const Matrix& m) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    const bool is_bias = name.ends_with(".bias");
    put<std::uint8_t>(out, is_bias ? 1 : 2);
    if (is_bias) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    } else {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    }
    for (Eigen::Index i = 0; i < m.size(); ++i)
      put<double>(out, m.data()[i]);
  });
  return out;
}

void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::string& path) {
  const std::string bytes = serialize_checkpoint(params, cfg);
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(Errc::Io, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw Error(Errc::Io, "write failed for " + path);
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(4, Errc::BadMagic, "magic") != std::string(kMagic, 4))
    throw Error(Errc::BadMagic, "not a checkpoint file");
  const auto version = in.get<std::uint32_t>(Errc::TruncatedTensor, "version");
  if (version != kCheckpointVersion)
    throw Error(Errc::VersionMismatch, "checkpoint version " + std::to_string(version) +
                                           ", expected " +
                                           std::to_string(kCheckpointVersion));
  const auto json_len = in.get<std::uint32_t>(Errc::TruncatedTensor, "config length");
  Checkpoint ck;
  ck.config = model_config_from_json(in.take(json_len, Errc::TruncatedTensor, "config"));
  ck.config.validate();
  ck.params = ModelParams::zeros_like(ck.config);

  std::map<std::string, Matrix*> expected;
  ck.params.for_each([&](const std::string& name, Matrix& m) { expected[name] = &m; });
  std::size_t loaded = 0;
  while (!in.at_end()) {
    const auto name_len = in.get<std::uint16_t>(Errc::TruncatedTensor, "tensor name");
    const std::string name = in.take(name_len, Errc::TruncatedTensor, "tensor name");
    const auto rank = in.get<std::uint8_t>(Errc::TruncatedTensor, "tensor rank");
    std::vector<std::uint32_t> dims(rank);
    for (auto& dim : dims)
      dim = in.get<std::uint32_t>(Errc::TruncatedTensor, "tensor dims");
    auto it = expected.find(name);
    if (it == expected.end())
      throw Error(Errc::ShapeMismatch, "unexpected tensor '" + name + "'");
    Matrix& m = *it->second;
    const bool shape_ok =
        rank == 1 ? (m.rows() == 1 && dims[0] == m.cols())
                  : (rank == 2 && dims[0] == m.rows() && dims[1] == m.cols());
    if (!shape_ok)
      throw Error(Errc::ShapeMismatch, "tensor '" + name + "' does not match config");
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = in.get<double>(Errc::TruncatedTensor, name.c_str());
    ++loaded;
  }
  if (loaded != expected.size())
    throw Error(Errc::TruncatedTensor, "checkpoint holds " + std::to_string(loaded) +
                                           " of " + std::to_string(expected.size()) +
                                           " tensors");
  return ck;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(Errc::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

} // namespace coreguide
