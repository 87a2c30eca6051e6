#include "coreguide/gradcheck.hpp"

#include "coreguide/datagen.hpp"
#include "forward.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace coreguide {

namespace {

std::vector<std::uint8_t> relu_pattern(const ModelParams& params, const ModelConfig& cfg,
                                       const GraphInput& graph) {
  detail::ForwardTrace t = detail::run_forward(params, cfg, graph);
  detail::run_head(params, cfg, graph.n_vars, t);
  std::vector<std::uint8_t> bits;
  auto add = [&](const Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i)
      bits.push_back(m.data()[i] > 0.0);
  };
  for (const auto& p : t.pre)
    add(p);
  add(t.hid_pre);
  return bits;
}

} // namespace

GradCheckReport gradient_check(const ModelParams& params, const TrainingInstance& instance,
                               const ModelConfig& cfg, double step, double floor) {
  const LossAndGrads analytic = forward_backward(params, instance, cfg);
  const auto base_pattern = relu_pattern(params, cfg, instance.graph);

  std::vector<std::pair<std::string, const Matrix*>> grads;
  analytic.grads.for_each(
      [&](const std::string& name, const Matrix& g) { grads.emplace_back(name, &g); });

  GradCheckReport report;
  ModelParams probe = params;
  std::size_t t = 0;
  probe.for_each([&](const std::string& name, Matrix& w) {
    const Matrix& g = *grads[t++].second;
    TensorCheck tc;
    tc.name = name;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double orig = w.data()[i];
      w.data()[i] = orig + step;
      const double up = instance_loss(probe, instance, cfg);
      const bool same_up = relu_pattern(probe, cfg, instance.graph) == base_pattern;
      w.data()[i] = orig - step;
      const double down = instance_loss(probe, instance, cfg);
      const bool same_down = relu_pattern(probe, cfg, instance.graph) == base_pattern;
      w.data()[i] = orig;
      if (!same_up || !same_down) {
        ++tc.skipped;
        continue;
      }
      const double fd = (up - down) / (2.0 * step);
      const double a = g.data()[i];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor});
      tc.max_rel_error = std::max(tc.max_rel_error, rel);
      ++tc.checked;
    }
    if (tc.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = tc.max_rel_error;
      report.worst = name;
    }
    report.tensors.push_back(std::move(tc));
  });
  return report;
}

GradCheckReport random_gradcheck(std::uint64_t seed, const GradCheckOptions& options) {
  Rng rng(seed);
  auto uniform_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> noise(-0.1, 0.1);

  std::map<std::string, TensorCheck> worst;
  std::vector<std::string> order;
  GradCheckReport total;
  for (int it = 0; it < options.instances; ++it) {
    ModelConfig cfg;
    cfg.d = uniform_int(1, options.max_d);
    cfg.layers = uniform_int(1, options.max_layers);
    cfg.hidden = uniform_int(2, 5);
    cfg.shared_weights = coin(rng);
    cfg.pairing = coin(rng) ? Pairing::Half : Pairing::Mirror;
    cfg.graph.kind = uniform_int(0, 3) == 0 ? GraphKind::Lcg : GraphKind::Wlig;
    cfg.loss = static_cast<LossKind>(uniform_int(0, 2));
    cfg.target = uniform_int(0, 3) == 0 ? TargetKind::Satisfiability : TargetKind::Core;
    cfg.alpha = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
    cfg.gamma = std::uniform_real_distribution<double>(0.0, 3.0)(rng);

    TrainingInstance inst;
    for (;;) {
      const auto n = static_cast<std::uint32_t>(uniform_int(2, static_cast<int>(options.max_vars)));
      const auto m = static_cast<std::size_t>(uniform_int(1, 8));
      const auto k = static_cast<std::uint32_t>(uniform_int(2, std::min<int>(3, static_cast<int>(n))));
      Cnf cnf = gen_random_ksat(n, m, k, rng);
      std::vector<std::uint8_t> labels(n);
      for (auto& l : labels)
        l = coin(rng);
      inst = make_training_instance(cnf, labels, cfg.graph, coin(rng));
      if (!inst.graph.edgeless)
        break;
    }

    ModelParams params = init_params(cfg, rng());
    params.for_each([&](const std::string& name, Matrix& w) {
      if (name.size() >= 4 && name.compare(name.size() - 4, 4, "bias") == 0)
        for (Eigen::Index i = 0; i < w.size(); ++i)
          w.data()[i] = noise(rng);
    });

    GradCheckReport r = gradient_check(params, inst, cfg, options.step);
    for (auto& tc : r.tensors) {
      auto [pos, fresh] = worst.try_emplace(tc.name, tc);
      if (fresh) {
        order.push_back(tc.name);
        continue;
      }
      pos->second.max_rel_error = std::max(pos->second.max_rel_error, tc.max_rel_error);
      pos->second.checked += tc.checked;
      pos->second.skipped += tc.skipped;
    }
  }
  for (const auto& name : order) {
    const TensorCheck& tc = worst[name];
    if (tc.max_rel_error >= total.max_rel_error) {
      total.max_rel_error = tc.max_rel_error;
      total.worst = name;
    }
    total.tensors.push_back(tc);
  }
  return total;
}

} // namespace coreguide
