#include "coreguide/error.hpp"
#include "coreguide/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

namespace coreguide {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

std::vector<Matrix*> tensors(ModelParams& p) {
  std::vector<Matrix*> out;
  p.for_each([&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

class Adam {
public:
  Adam(ModelParams& params, double lr) : params_(tensors(params)), lr_(lr) {
    for (Matrix* m : params_) {
      first_.push_back(Matrix::Zero(m->rows(), m->cols()));
      second_.push_back(Matrix::Zero(m->rows(), m->cols()));
    }
  }

  void step(ModelParams& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    auto g = tensors(grads);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      first_[i] = kBeta1 * first_[i] + (1.0 - kBeta1) * *g[i];
      second_[i] = kBeta2 * second_[i] + (1.0 - kBeta2) * g[i]->cwiseAbs2();
      params_[i]->array() -= lr_ * (first_[i].array() / c1) /
                             ((second_[i].array() / c2).sqrt() + kAdamEps);
    }
  }

private:
  std::vector<Matrix*> params_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  double lr_;
  std::uint64_t t_ = 0;
};

void add_scaled(ModelParams& acc, ModelParams& delta, double scale) {
  auto a = tensors(acc);
  auto d = tensors(delta);
  for (std::size_t i = 0; i < a.size(); ++i)
    *a[i] += scale * *d[i];
}

double mean_loss(const ModelParams& params, const std::vector<TrainingInstance>& set,
                 const ModelConfig& cfg) {
  double total = 0.0;
  for (const auto& inst : set)
    total += instance_loss(params, inst, cfg);
  return total / static_cast<double>(set.size());
}

} // namespace

TrainResult train(const std::vector<TrainingInstance>& dataset,
                  const ModelConfig& cfg,
                  const std::vector<TrainingInstance>& validation,
                  const TrainOptions& options) {
  cfg.validate();
  if (dataset.empty())
    throw Error(Errc::EmptyDataset, "training set is empty");
  if (cfg.loss == LossKind::Focal && cfg.target == TargetKind::Core) {
    bool any_positive = std::any_of(dataset.begin(), dataset.end(), [](const auto& t) {
      return std::any_of(t.labels.begin(), t.labels.end(), [](auto y) { return y != 0; });
    });
    if (!any_positive)
      std::clog << "train: warning: no positive labels in the training set\n";
  }

  TrainResult result;
  ModelParams params = init_params(cfg, cfg.seed);
  Adam adam(params, cfg.lr);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best_val = std::numeric_limits<double>::infinity();
  result.params = params;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      ModelParams batch = ModelParams::zeros_like(cfg);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        LossAndGrads lg = forward_backward(params, dataset[order[k]], cfg);
        epoch_loss += lg.loss;
        add_scaled(batch, lg.grads, scale);
      }
      adam.step(batch);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(dataset.size());
    rec.val_loss = std::numeric_limits<double>::quiet_NaN();
    if (!validation.empty()) {
      rec.val_loss = mean_loss(params, validation, cfg);
      if (rec.val_loss < best_val) {
        best_val = rec.val_loss;
        result.params = params;
        result.best_epoch = epoch;
      }
    }
    result.history.push_back(rec);
    if (options.on_epoch)
      options.on_epoch(rec);
  }
  if (validation.empty()) {
    result.params = params;
    result.best_epoch = cfg.epochs;
  }
  return result;
}

} // namespace coreguide
