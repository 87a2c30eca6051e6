#include "coreguide/error.hpp"
#include "coreguide/model.hpp"
#include "forward.hpp"

namespace coreguide {

namespace {

struct HeadLoss {
  double loss = 0.0;
  Matrix dlogits; // n × 2
};

// dp/dz_core = p(1-p) and dp/dz_not = -p(1-p) for the two-way softmax.
HeadLoss loss_from_logits(const ModelConfig& cfg, const Matrix& logits,
                          const TrainingInstance& instance) {
  const auto n = logits.rows();
  HeadLoss out;
  out.dlogits = Matrix::Zero(n, 2);
  if (cfg.target == TargetKind::Core) {
    std::vector<double> probs(static_cast<std::size_t>(n));
    for (Eigen::Index v = 0; v < n; ++v)
      probs[static_cast<std::size_t>(v)] = core_probability(logits(v, 0), logits(v, 1));
    LossResult r = compute_loss(cfg, probs, instance.labels);
    out.loss = r.loss;
    for (Eigen::Index v = 0; v < n; ++v) {
      const double p = probs[static_cast<std::size_t>(v)];
      const double g = r.grad[static_cast<std::size_t>(v)] * p * (1.0 - p);
      out.dlogits(v, 0) = g;
      out.dlogits(v, 1) = -g;
    }
    return out;
  }
  // Graph-level target: mean-pooled logits, channel 0 = UNSAT.
  const Eigen::RowVectorXd pooled = logits.colwise().mean();
  const double p = core_probability(pooled(0), pooled(1));
  LossResult r = compute_loss(cfg, {p}, {static_cast<std::uint8_t>(instance.unsat)});
  out.loss = r.loss;
  const double g = r.grad[0] * p * (1.0 - p) / static_cast<double>(n);
  out.dlogits.col(0).setConstant(g);
  out.dlogits.col(1).setConstant(-g);
  return out;
}

Matrix relu_mask(const Matrix& grad, const Matrix& pre) {
  return (pre.array() > 0.0).select(grad, 0.0);
}

void accumulate_affine(Affine& grad, const Matrix& input, const Matrix& dout) {
  grad.weight.noalias() += input.transpose() * dout;
  grad.bias += dout.colwise().sum();
}

} // namespace

double instance_loss(const ModelParams& params, const TrainingInstance& instance,
                     const ModelConfig& cfg) {
  if (instance.labels.size() != instance.graph.n_vars)
    throw Error(Errc::LengthMismatch, "labels do not match variable count");
  detail::ForwardTrace t = detail::run_forward(params, cfg, instance.graph);
  detail::run_head(params, cfg, instance.graph.n_vars, t);
  return loss_from_logits(cfg, t.logits, instance).loss;
}

LossAndGrads forward_backward(const ModelParams& params,
                              const TrainingInstance& instance,
                              const ModelConfig& cfg) {
  const std::uint32_t n_vars = instance.graph.n_vars;
  if (instance.labels.size() != n_vars)
    throw Error(Errc::LengthMismatch, "labels do not match variable count");
  detail::ForwardTrace t = detail::run_forward(params, cfg, instance.graph);
  detail::run_head(params, cfg, n_vars, t);
  HeadLoss head = loss_from_logits(cfg, t.logits, instance);

  LossAndGrads out;
  out.loss = head.loss;
  ModelParams& g = out.grads;
  g = ModelParams::zeros_like(cfg);

  // MLP head.
  accumulate_affine(g.output, t.hid, head.dlogits);
  Matrix dhid = relu_mask(head.dlogits * params.output.weight.transpose(), t.hid_pre);
  accumulate_affine(g.hidden, t.pair_in, dhid);
  Matrix dpair = dhid * params.hidden.weight.transpose();
  detail::check_finite(dpair, "grad.head");

  const Matrix& h_last = t.h.back();
  const Eigen::Index width = h_last.cols();
  Matrix dh = Matrix::Zero(h_last.rows(), width);
  for (std::uint32_t v = 0; v < n_vars; ++v) {
    dh.row(v) += dpair.row(v).head(width);
    dh.row(detail::partner_row(cfg.pairing, v, n_vars)) += dpair.row(v).tail(width);
  }

  // WGCN iterations, last to first.
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const auto idx = detail::conv_index(cfg, l);
    Matrix dpre = relu_mask(dh, t.pre[static_cast<std::size_t>(l)]);
    accumulate_affine(g.conv[idx], t.inputs[static_cast<std::size_t>(l)], dpre);
    Matrix dinput = dpre * params.conv[idx].weight.transpose();
    dh = detail::sparse_multiply_transposed(instance.graph.adjacency,
                                            dinput.leftCols(width)) +
         flip_literals(dinput.rightCols(width), n_vars);
    detail::check_finite(dh, "grad.conv");
  }

  accumulate_affine(g.init, t.features, dh);
  return out;
}

} // namespace coreguide
