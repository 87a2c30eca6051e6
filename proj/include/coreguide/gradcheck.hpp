#pragma once

#include "coreguide/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace coreguide {

struct TensorCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0; // coordinates where a ReLU flips inside the stencil
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
  std::string worst;
};

/// Compares analytic gradients with central differences,
/// rel = |a − f| / max(|a|, |f|, floor).
GradCheckReport gradient_check(const ModelParams& params, const TrainingInstance& instance,
                               const ModelConfig& cfg, double step = 1e-4,
                               double floor = 1e-6);

struct GradCheckOptions {
  int instances = 20;
  std::uint32_t max_vars = 6;
  int max_d = 3;
  int max_layers = 2;
  double step = 1e-4;
};

/// Random small instances and configurations drawn from seed; the report
/// aggregates the worst error per tensor over all of them.
GradCheckReport random_gradcheck(std::uint64_t seed, const GradCheckOptions& options = {});

} // namespace coreguide
