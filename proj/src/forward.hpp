#pragma once

#include "coreguide/model.hpp"

#include <vector>

namespace coreguide::detail {

/// Every intermediate of one forward pass, kept for the backward pass.
struct ForwardTrace {
  Matrix features;            // N × 2
  std::vector<Matrix> inputs; // per layer: [A'H | Flip(H)], N × 4d
  std::vector<Matrix> pre;    // per layer: affine output before ReLU
  std::vector<Matrix> h;      // h[0] = H⁰, h[l+1] = ReLU(pre[l])
  Matrix pair_in;             // n × 4d
  Matrix hid_pre;             // n × hidden
  Matrix hid;
  Matrix logits;              // n × 2
};

Matrix features_matrix(const std::vector<NodeFeature>& features);

std::uint32_t partner_row(Pairing pairing, std::uint32_t var, std::uint32_t n_vars);

std::size_t conv_index(const ModelConfig& cfg, int layer);

ForwardTrace run_forward(const ModelParams& params, const ModelConfig& cfg,
                         const GraphInput& graph);

void run_head(const ModelParams& params, const ModelConfig& cfg,
              std::uint32_t n_vars, ForwardTrace& trace);

void check_finite(const Matrix& m, const char* name);

Matrix sparse_multiply_transposed(const NormAdj& adj, const Matrix& h);

} // namespace coreguide::detail
