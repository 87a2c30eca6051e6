#include "coreguide/model.hpp"

#include "coreguide/error.hpp"
#include "forward.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <random>

namespace coreguide {

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(Errc::InvalidArgument, "model config: " + what);
  };
  if (d < 1)
    fail("d must be >= 1");
  if (layers < 1)
    fail("layers must be >= 1");
  if (hidden < 1)
    fail("hidden must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    fail("alpha must lie in (0,1)");
  if (!(gamma >= 0.0))
    fail("gamma must be >= 0");
  if (!(lr >= 0.0))
    fail("lr must be >= 0");
  if (epochs < 0 || batch_size < 1)
    fail("epochs >= 0 and batch_size >= 1 required");
  if (!(kl_smoothing >= 0.0 && kl_smoothing < 0.5))
    fail("kl_smoothing must lie in [0,0.5)");
}

void ModelParams::for_each(
    const std::function<void(const std::string&, Matrix&)>& fn) {
  fn("init.weight", init.weight);
  fn("init.bias", init.bias);
  for (std::size_t l = 0; l < conv.size(); ++l) {
    fn("conv." + std::to_string(l) + ".weight", conv[l].weight);
    fn("conv." + std::to_string(l) + ".bias", conv[l].bias);
  }
  fn("head.hidden.weight", hidden.weight);
  fn("head.hidden.bias", hidden.bias);
  fn("head.output.weight", output.weight);
  fn("head.output.bias", output.bias);
}

void ModelParams::for_each(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each(
      [&](const std::string& name, Matrix& m) { fn(name, m); });
}

namespace {

Affine zero_affine(int in, int out) {
  return Affine{Matrix::Zero(in, out), Matrix::Zero(1, out)};
}

} // namespace

ModelParams ModelParams::zeros_like(const ModelConfig& cfg) {
  ModelParams p;
  p.init = zero_affine(2, 2 * cfg.d);
  for (int l = 0; l < cfg.conv_count(); ++l)
    p.conv.push_back(zero_affine(4 * cfg.d, 2 * cfg.d));
  p.hidden = zero_affine(4 * cfg.d, cfg.hidden);
  p.output = zero_affine(cfg.hidden, 2);
  return p;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  std::vector<const Matrix*> lhs, rhs;
  a.for_each([&](const std::string&, const Matrix& m) { lhs.push_back(&m); });
  b.for_each([&](const std::string&, const Matrix& m) { rhs.push_back(&m); });
  if (lhs.size() != rhs.size())
    return false;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    if (lhs[i]->rows() != rhs[i]->rows() || lhs[i]->cols() != rhs[i]->cols())
      return false;
    if (*lhs[i] != *rhs[i])
      return false;
  }
  return true;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelParams p = ModelParams::zeros_like(cfg);
  std::mt19937_64 rng(seed);
  p.for_each([&](const std::string& name, Matrix& m) {
    if (name.ends_with(".bias"))
      return;
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = dist(rng);
  });
  return p;
}

//===----------------------------------------------------------------------===//
// Forward pass
//===----------------------------------------------------------------------===//

namespace detail {

Matrix features_matrix(const std::vector<NodeFeature>& features) {
  Matrix x(static_cast<Eigen::Index>(features.size()), 2);
  for (std::size_t i = 0; i < features.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = features[i][0];
    x(static_cast<Eigen::Index>(i), 1) = features[i][1];
  }
  return x;
}

std::uint32_t partner_row(Pairing pairing, std::uint32_t var, std::uint32_t n_vars) {
  return pairing == Pairing::Half ? n_vars + var : 2 * n_vars - 1 - var;
}

std::size_t conv_index(const ModelConfig& cfg, int layer) {
  return cfg.shared_weights ? 0 : static_cast<std::size_t>(layer);
}

void check_finite(const Matrix& m, const char* name) {
  if (!m.allFinite())
    throw Error(Errc::NumericalOverflow, std::string("non-finite values in ") + name);
}

Matrix sparse_multiply_transposed(const NormAdj& adj, const Matrix& h) {
  Matrix out = Matrix::Zero(adj.num_nodes, h.cols());
  for (std::uint32_t i = 0; i < adj.num_nodes; ++i)
    for (auto k = adj.row_offsets[i]; k < adj.row_offsets[i + 1]; ++k)
      out.row(adj.cols[k]) += adj.values[k] * h.row(i);
  return out;
}

ForwardTrace run_forward(const ModelParams& params, const ModelConfig& cfg,
                         const GraphInput& graph) {
  const auto n_nodes = static_cast<Eigen::Index>(graph.num_nodes());
  if (static_cast<Eigen::Index>(graph.features.size()) != n_nodes ||
      graph.num_nodes() < 2 * graph.n_vars)
    throw Error(Errc::DimensionMismatch, "graph features do not match adjacency");
  if (params.conv.size() != static_cast<std::size_t>(cfg.conv_count()))
    throw Error(Errc::DimensionMismatch, "parameter layer count does not match config");

  ForwardTrace t;
  t.features = features_matrix(graph.features);
  t.h.push_back(embed_nodes(params, graph.features));
  check_finite(t.h[0], "init");
  const Eigen::Index width = t.h[0].cols();
  for (int l = 0; l < cfg.layers; ++l) {
    const Matrix& h = t.h.back();
    Matrix input(n_nodes, 2 * width);
    input.leftCols(width) = sparse_multiply(graph.adjacency, h);
    input.rightCols(width) = flip_literals(h, graph.n_vars);
    const Affine& a = params.conv[conv_index(cfg, l)];
    Matrix pre = input * a.weight;
    pre.rowwise() += a.bias.row(0);
    check_finite(pre, "conv");
    t.h.push_back(pre.cwiseMax(0.0));
    t.inputs.push_back(std::move(input));
    t.pre.push_back(std::move(pre));
  }
  return t;
}

void run_head(const ModelParams& params, const ModelConfig& cfg,
              std::uint32_t n_vars, ForwardTrace& t) {
  const Matrix& h = t.h.back();
  const Eigen::Index width = h.cols();
  t.pair_in.resize(n_vars, 2 * width);
  for (std::uint32_t v = 0; v < n_vars; ++v) {
    t.pair_in.row(v).head(width) = h.row(v);
    t.pair_in.row(v).tail(width) = h.row(partner_row(cfg.pairing, v, n_vars));
  }
  t.hid_pre = t.pair_in * params.hidden.weight;
  t.hid_pre.rowwise() += params.hidden.bias.row(0);
  check_finite(t.hid_pre, "head.hidden");
  t.hid = t.hid_pre.cwiseMax(0.0);
  t.logits = t.hid * params.output.weight;
  t.logits.rowwise() += params.output.bias.row(0);
  check_finite(t.logits, "head.output");
}

} // namespace detail

Matrix embed_nodes(const ModelParams& params,
                   const std::vector<NodeFeature>& features) {
  Matrix h = detail::features_matrix(features) * params.init.weight;
  h.rowwise() += params.init.bias.row(0);
  return h;
}

Matrix flip(const Matrix& h) {
  if (h.rows() % 2 != 0)
    throw Error(Errc::OddNodeCount, "flip needs an even row count, got " +
                                        std::to_string(h.rows()));
  return flip_literals(h, static_cast<std::uint32_t>(h.rows() / 2));
}

Matrix flip_literals(const Matrix& h, std::uint32_t n_vars) {
  const Eigen::Index n = n_vars;
  if (h.rows() < 2 * n)
    throw Error(Errc::DimensionMismatch, "fewer rows than literal nodes");
  Matrix out(h.rows(), h.cols());
  out.topRows(n) = h.middleRows(n, n);
  out.middleRows(n, n) = h.topRows(n);
  out.bottomRows(h.rows() - 2 * n) = h.bottomRows(h.rows() - 2 * n);
  return out;
}

Matrix sparse_multiply(const NormAdj& adj, const Matrix& h) {
  if (h.rows() != static_cast<Eigen::Index>(adj.num_nodes))
    throw Error(Errc::DimensionMismatch, "adjacency is " +
                                             std::to_string(adj.num_nodes) +
                                             " nodes, embeddings have " +
                                             std::to_string(h.rows()) + " rows");
  Matrix out = Matrix::Zero(h.rows(), h.cols());
  for (std::uint32_t i = 0; i < adj.num_nodes; ++i)
    for (auto k = adj.row_offsets[i]; k < adj.row_offsets[i + 1]; ++k)
      out.row(i) += adj.values[k] * h.row(adj.cols[k]);
  return out;
}

Matrix wgcn_forward(const ModelParams& params, const ModelConfig& cfg,
                    const NormAdj& adj, const Matrix& h0, std::uint32_t n_vars) {
  if (h0.rows() != static_cast<Eigen::Index>(adj.num_nodes) ||
      h0.cols() != 2 * cfg.d)
    throw Error(Errc::DimensionMismatch, "H0 shape does not match adjacency/config");
  Matrix h = h0;
  for (int l = 0; l < cfg.layers; ++l) {
    Matrix input(h.rows(), 2 * h.cols());
    input.leftCols(h.cols()) = sparse_multiply(adj, h);
    input.rightCols(h.cols()) = flip_literals(h, n_vars);
    const Affine& a = params.conv[detail::conv_index(cfg, l)];
    Matrix pre = input * a.weight;
    pre.rowwise() += a.bias.row(0);
    h = pre.cwiseMax(0.0);
  }
  return h;
}

double core_probability(double core_logit, double not_core_logit) {
  const double diff = core_logit - not_core_logit;
  if (diff >= 0.0)
    return 1.0 / (1.0 + std::exp(-diff));
  const double e = std::exp(diff);
  return e / (1.0 + e);
}

Matrix head_logits(const ModelParams& params, const ModelConfig& cfg,
                   const Matrix& h, std::uint32_t n_vars) {
  detail::ForwardTrace t;
  t.h.push_back(h);
  detail::run_head(params, cfg, n_vars, t);
  return t.logits;
}

Prediction head_forward(const ModelParams& params, const ModelConfig& cfg,
                        const Matrix& h, std::uint32_t n_vars) {
  Matrix logits = head_logits(params, cfg, h, n_vars);
  Prediction p;
  p.probs.resize(n_vars);
  for (std::uint32_t v = 0; v < n_vars; ++v)
    p.probs[v] = core_probability(logits(v, 0), logits(v, 1));
  return p;
}

//===----------------------------------------------------------------------===//
// Losses
//===----------------------------------------------------------------------===//

namespace {

void check_lengths(const std::vector<double>& probs,
                   const std::vector<std::uint8_t>& labels) {
  if (probs.size() != labels.size())
    throw Error(Errc::LengthMismatch, std::to_string(probs.size()) +
                                          " predictions vs " +
                                          std::to_string(labels.size()) + " labels");
}

// Clamped probability; `active` is false when the clamp bites.
double clamp_prob(double p, bool& active) {
  if (p < kProbEpsilon) {
    active = false;
    return kProbEpsilon;
  }
  if (p > 1.0 - kProbEpsilon) {
    active = false;
    return 1.0 - kProbEpsilon;
  }
  active = true;
  return p;
}

} // namespace

LossResult focal_loss(const std::vector<double>& probs,
                      const std::vector<std::uint8_t>& labels, double alpha,
                      double gamma) {
  check_lengths(probs, labels);
  LossResult r;
  r.grad.assign(probs.size(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    bool active = true;
    const double p = clamp_prob(probs[i], active);
    double g = 0.0;
    if (labels[i]) {
      const double q = 1.0 - p;
      const double w = std::pow(q, gamma);
      r.loss += -alpha * w * std::log(p);
      const double dw = gamma == 0.0 ? 0.0 : -gamma * std::pow(q, gamma - 1.0);
      g = -alpha * (dw * std::log(p) + w / p);
    } else {
      const double w = std::pow(p, gamma);
      r.loss += -(1.0 - alpha) * w * std::log1p(-p);
      const double dw = gamma == 0.0 ? 0.0 : gamma * std::pow(p, gamma - 1.0);
      g = -(1.0 - alpha) * (dw * std::log1p(-p) - w / (1.0 - p));
    }
    r.grad[i] = active ? g : 0.0;
  }
  return r;
}

LossResult cross_entropy_loss(const std::vector<double>& probs,
                              const std::vector<std::uint8_t>& labels) {
  check_lengths(probs, labels);
  LossResult r;
  r.grad.assign(probs.size(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    bool active = true;
    const double p = clamp_prob(probs[i], active);
    if (labels[i]) {
      r.loss += -std::log(p);
      r.grad[i] = active ? -1.0 / p : 0.0;
    } else {
      r.loss += -std::log1p(-p);
      r.grad[i] = active ? 1.0 / (1.0 - p) : 0.0;
    }
  }
  return r;
}

LossResult kl_loss(const std::vector<double>& probs,
                   const std::vector<std::uint8_t>& labels, double smoothing) {
  check_lengths(probs, labels);
  auto xlogx_over = [](double q, double p) {
    return q == 0.0 ? 0.0 : q * std::log(q / p);
  };
  LossResult r;
  r.grad.assign(probs.size(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    bool active = true;
    const double p = clamp_prob(probs[i], active);
    const double q = labels[i] ? 1.0 - smoothing : smoothing;
    r.loss += xlogx_over(q, p) + xlogx_over(1.0 - q, 1.0 - p);
    r.grad[i] = active ? -q / p + (1.0 - q) / (1.0 - p) : 0.0;
  }
  return r;
}

LossResult compute_loss(const ModelConfig& cfg, const std::vector<double>& probs,
                        const std::vector<std::uint8_t>& labels) {
  switch (cfg.loss) {
  case LossKind::Focal: return focal_loss(probs, labels, cfg.alpha, cfg.gamma);
  case LossKind::CrossEntropy: return cross_entropy_loss(probs, labels);
  case LossKind::Kl: return kl_loss(probs, labels, cfg.kl_smoothing);
  }
  throw Error(Errc::InvalidArgument, "unknown loss kind");
}

//===----------------------------------------------------------------------===//
// Inference
//===----------------------------------------------------------------------===//

TrainingInstance make_training_instance(const Cnf& cnf,
                                        std::vector<std::uint8_t> labels,
                                        const GraphOptions& graph, bool unsat) {
  if (labels.size() != cnf.num_vars)
    throw Error(Errc::LengthMismatch, "labels do not cover every variable");
  TrainingInstance t;
  t.name = cnf.name;
  t.graph = encode_graph(cnf, graph);
  t.labels = std::move(labels);
  t.unsat = unsat;
  return t;
}

Prediction infer(const ModelParams& params, const ModelConfig& cfg,
                 const GraphInput& graph) {
  detail::ForwardTrace t = detail::run_forward(params, cfg, graph);
  detail::run_head(params, cfg, graph.n_vars, t);
  Prediction p;
  p.probs.resize(graph.n_vars);
  for (std::uint32_t v = 0; v < graph.n_vars; ++v)
    p.probs[v] = core_probability(t.logits(v, 0), t.logits(v, 1));
  return p;
}

Prediction predict(const ModelParams& params, const ModelConfig& cfg,
                   const Cnf& cnf) {
  const auto start = std::chrono::steady_clock::now();
  GraphInput graph = encode_graph(cnf, cfg.graph);
  Prediction p;
  if (graph.edgeless) {
    std::clog << "predict: " << (cnf.name.empty() ? "<instance>" : cnf.name)
              << " has no edges, using uniform 0.5\n";
    p.probs.assign(cnf.num_vars, 0.5);
    p.uniform_fallback = true;
  } else {
    p = infer(params, cfg, graph);
  }
  p.elapsed_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  return p;
}

} // namespace coreguide
