#pragma once

#include "coreguide/cnf.hpp"
#include "coreguide/graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace coreguide {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class LossKind { Focal, CrossEntropy, Kl };
enum class TargetKind { Core, Satisfiability };
enum class Pairing { Half, Mirror };

struct ModelConfig {
  int d = 32;      // node embedding width is 2d
  int layers = 3;  // WGCN iterations
  int hidden = 64; // MLP hidden width
  bool shared_weights = false;
  Pairing pairing = Pairing::Half;
  GraphOptions graph;

  double alpha = 0.25;
  double gamma = 2.0;
  LossKind loss = LossKind::Focal;
  TargetKind target = TargetKind::Core;
  double kl_smoothing = 0.1;

  double lr = 1e-3;
  int epochs = 50;
  int batch_size = 8;
  std::uint64_t seed = 1;

  void validate() const;
  int conv_count() const { return shared_weights ? 1 : layers; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// y = x · weight + bias, weight stored (in × out), bias (1 × out).
struct Affine {
  Matrix weight;
  Matrix bias;
};

struct ModelParams {
  Affine init;              // 2 → 2d
  std::vector<Affine> conv; // 4d → 2d, one per iteration or one shared
  Affine hidden;            // 4d → hidden
  Affine output;            // hidden → 2 (channel 0 = core)

  /// Visits tensors in checkpoint order with their names.
  void for_each(const std::function<void(const std::string&, Matrix&)>& fn);
  void for_each(const std::function<void(const std::string&, const Matrix&)>& fn) const;

  static ModelParams zeros_like(const ModelConfig& cfg);
  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

struct Prediction {
  std::vector<double> probs; // P(variable in core)
  double elapsed_ms = 0.0;   // graph build + inference, filled by predict()
  bool uniform_fallback = false;

  double not_core(std::size_t i) const { return 1.0 - probs[i]; }
};

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

Matrix embed_nodes(const ModelParams& params, const std::vector<NodeFeature>& features);

/// Swaps the two row halves; N must be even.
Matrix flip(const Matrix& h);
/// Swaps rows [0,n) with [n,2n) and keeps any trailing rows in place.
Matrix flip_literals(const Matrix& h, std::uint32_t n_vars);

Matrix sparse_multiply(const NormAdj& adj, const Matrix& h);

Matrix wgcn_forward(const ModelParams& params, const ModelConfig& cfg,
                    const NormAdj& adj, const Matrix& h0, std::uint32_t n_vars);
inline Matrix wgcn_forward(const ModelParams& params, const ModelConfig& cfg,
                           const NormAdj& adj, const Matrix& h0) {
  return wgcn_forward(params, cfg, adj, h0,
                      static_cast<std::uint32_t>(h0.rows() / 2));
}

/// Per-variable 2-way logits (n × 2) from the final node embeddings.
Matrix head_logits(const ModelParams& params, const ModelConfig& cfg,
                   const Matrix& h, std::uint32_t n_vars);
Prediction head_forward(const ModelParams& params, const ModelConfig& cfg,
                        const Matrix& h, std::uint32_t n_vars);

/// Core-channel softmax probability of a logit pair.
double core_probability(double core_logit, double not_core_logit);

inline constexpr double kProbEpsilon = 1e-7;

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad; // ∂loss/∂p_i
};

/// Summed focal loss over variables. Probabilities are clamped to
/// [ε, 1−ε]; the gradient is zero where the clamp is active.
LossResult focal_loss(const std::vector<double>& probs,
                      const std::vector<std::uint8_t>& labels, double alpha,
                      double gamma);
LossResult cross_entropy_loss(const std::vector<double>& probs,
                              const std::vector<std::uint8_t>& labels);
LossResult kl_loss(const std::vector<double>& probs,
                   const std::vector<std::uint8_t>& labels, double smoothing);
LossResult compute_loss(const ModelConfig& cfg, const std::vector<double>& probs,
                        const std::vector<std::uint8_t>& labels);

/// One graph-encoded, labeled instance.
struct TrainingInstance {
  std::string name;
  GraphInput graph;
  std::vector<std::uint8_t> labels; // per-variable core membership
  bool unsat = true;                // graph-level label for the satisfiability target
};

TrainingInstance make_training_instance(const Cnf& cnf,
                                        std::vector<std::uint8_t> labels,
                                        const GraphOptions& graph,
                                        bool unsat = true);

struct LossAndGrads {
  double loss = 0.0;
  ModelParams grads;
};

/// Loss of one instance and its gradient with respect to every tensor.
LossAndGrads forward_backward(const ModelParams& params,
                              const TrainingInstance& instance,
                              const ModelConfig& cfg);

/// Loss only; shares the forward path with forward_backward.
double instance_loss(const ModelParams& params, const TrainingInstance& instance,
                     const ModelConfig& cfg);

/// Variable probabilities for a prepared graph (no timing, no fallback).
Prediction infer(const ModelParams& params, const ModelConfig& cfg,
                 const GraphInput& graph);

/// Full pipeline from a formula; edgeless graphs give a uniform 0.5.
Prediction predict(const ModelParams& params, const ModelConfig& cfg,
                   const Cnf& cnf);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0; // NaN without a validation set
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

struct TrainOptions {
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Adam over mini-batches; each batch gradient is the mean of per-instance
/// summed losses. Returns the parameters with the lowest validation loss (the
/// final parameters when no validation set is given).
TrainResult train(const std::vector<TrainingInstance>& dataset,
                  const ModelConfig& cfg,
                  const std::vector<TrainingInstance>& validation = {},
                  const TrainOptions& options = {});

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::string& path);
std::string serialize_checkpoint(const ModelParams& params, const ModelConfig& cfg);

struct Checkpoint {
  ModelParams params;
  ModelConfig config;
};

Checkpoint load_checkpoint(const std::string& path);
Checkpoint deserialize_checkpoint(const std::string& bytes);

// Config <-> JSON text helpers, shared with the CLI and manifests.
std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

const char* loss_kind_name(LossKind kind);
const char* target_kind_name(TargetKind kind);
LossKind parse_loss_kind(const std::string& s);
TargetKind parse_target_kind(const std::string& s);
const char* graph_kind_name(GraphKind kind);
GraphKind parse_graph_kind(const std::string& s);

} // namespace coreguide
