#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "peps/config.hpp"
#include "peps/metrics.hpp"
#include "peps/model.hpp"
#include "peps/optim.hpp"
#include "peps/signals.hpp"

namespace peps {

struct TrainConfig {
  LossKind loss = LossKind::l1;
  double base_lr = 0.01;
  double grid_lr = -1.0;  // < 0: grids share base_lr
  bool cosine = false;
  double lr_min = 0.0;
  std::size_t batch_size = 4096;
  std::size_t epochs = 2;
  std::size_t batches_per_epoch = 1000;
  std::uint64_t seed = 1;
  std::size_t log_every = 50;
  std::size_t eval_every = 0;  // 0: no periodic full evaluation

  static TrainConfig from(const ExperimentConfig& c) {
    TrainConfig t;
    t.loss = parse_loss(c.loss);
    t.base_lr = c.base_lr;
    t.grid_lr = c.grid_lr;
    t.cosine = c.schedule == "cosine";
    t.lr_min = c.lr_min;
    t.batch_size = c.batch_size;
    t.epochs = c.epochs;
    t.batches_per_epoch = c.batches_per_epoch;
    t.seed = c.seed;
    t.log_every = c.log_every;
    t.eval_every = c.eval_every;
    return t;
  }

  std::size_t total_steps() const { return epochs * batches_per_epoch; }
};

struct MetricRow {
  std::size_t step;
  double loss;
  double lr;
  double metric;  // NaN when not evaluated at this row
};

struct TrainResult {
  std::vector<MetricRow> log;
  double final_loss = 0.0;
  std::size_t steps = 0;
};

/// Quality of the current model against the full signal. Images report
/// psnr/ssim/lsd/lpsd, texture sets additionally per-layer psnr, volumes
/// report iou and mape.
struct EvalReport {
  std::vector<std::pair<std::string, double>> entries;

  double get(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return v;
    throw std::invalid_argument("eval report has no entry '" + key + "'");
  }

  std::string csv() const {
    std::string header, row;
    for (const auto& [k, v] : entries) {
      if (!header.empty()) {
        header += ",";
        row += ",";
      }
      header += k;
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.10g", v);
      row += buf;
    }
    return header + "\n" + row + "\n";
  }
};

inline EvalReport evaluate(Model& model, const SignalDataset& data) {
  EvalReport rep;
  switch (data.task()) {
    case SignalDataset::Task::image: {
      const ImageSignal& gt = *data.image();
      ImageSignal pred = model.reconstruct_image(gt.width, gt.height);
      rep.entries.emplace_back("psnr", psnr(pred.values, gt.values));
      rep.entries.emplace_back(
          "ssim", ssim(pred.values, gt.values, gt.width, gt.height));
      rep.entries.emplace_back(
          "lsd", lsd(pred.values, gt.values, gt.width, gt.height));
      rep.entries.emplace_back(
          "lpsd", lpsd(pred.values, gt.values, gt.width, gt.height));
      return rep;
    }
    case SignalDataset::Task::texture_set: {
      const TextureSet& set = *data.textures();
      double sum_psnr = 0, sum_ssim = 0, sum_lsd = 0, sum_lpsd = 0;
      std::vector<std::pair<std::string, double>> per_layer;
      for (std::size_t l = 0; l < set.layers.size(); ++l) {
        const ImageSignal& gt = set.layers[l].image;
        ImageSignal pred =
            model.reconstruct_layer(gt.width, gt.height, l);
        const double p = psnr(pred.values, gt.values);
        sum_psnr += p;
        sum_ssim += ssim(pred.values, gt.values, gt.width, gt.height);
        sum_lsd += lsd(pred.values, gt.values, gt.width, gt.height);
        sum_lpsd += lpsd(pred.values, gt.values, gt.width, gt.height);
        per_layer.emplace_back("psnr_" + set.layers[l].name, p);
      }
      const double n = static_cast<double>(set.layers.size());
      rep.entries.emplace_back("psnr", sum_psnr / n);
      rep.entries.emplace_back("ssim", sum_ssim / n);
      rep.entries.emplace_back("lsd", sum_lsd / n);
      rep.entries.emplace_back("lpsd", sum_lpsd / n);
      for (auto& e : per_layer) rep.entries.push_back(std::move(e));
      return rep;
    }
    case SignalDataset::Task::sdf: {
      const SdfVolume& gt = *data.volume();
      SdfVolume pred = model.reconstruct_volume(gt.resolution);
      rep.entries.emplace_back("iou", sdf_iou(pred.values, gt.values));
      rep.entries.emplace_back(
          "mape", loss_value(LossKind::mape, pred.values, gt.values));
      return rep;
    }
  }
  return rep;
}

namespace detail {

inline double quick_metric(Model& model, const SignalDataset& data) {
  if (data.task() == SignalDataset::Task::sdf) {
    SdfVolume pred = model.reconstruct_volume(data.volume()->resolution);
    return sdf_iou(pred.values, data.volume()->values);
  }
  if (data.task() == SignalDataset::Task::image) {
    const ImageSignal& gt = *data.image();
    ImageSignal pred = model.reconstruct_image(gt.width, gt.height);
    return psnr(pred.values, gt.values);
  }
  // Texture sets: PSNR over all channels of all layers at pixel centers.
  const TextureSet& set = *data.textures();
  const std::size_t w = set.width(), h = set.height();
  const std::size_t vd = data.value_dim();
  std::vector<double> coords(w * h * 2);
  std::vector<double> gt_all(w * h * vd);
  for (std::size_t pix = 0; pix < w * h; ++pix) {
    coords[pix * 2] = (static_cast<double>(pix % w) + 0.5) / w;
    coords[pix * 2 + 1] = (static_cast<double>(pix / w) + 0.5) / h;
    data.sample_ground_truth(
        std::span<const double>(coords.data() + pix * 2, 2),
        std::span<double>(gt_all.data() + pix * vd, vd));
  }
  std::vector<double> pred;
  pred.reserve(w * h * vd);
  for (std::size_t start = 0; start < w * h; start += 4096) {
    const std::size_t n = std::min<std::size_t>(4096, w * h - start);
    auto vals = model.predict(
        std::span<const double>(coords.data() + start * 2, n * 2), n);
    for (double v : vals) pred.push_back(std::clamp(v, 0.0, 1.0));
  }
  return psnr(pred, gt_all);
}

}  // namespace detail

/// Runs the optimization loop: per step draws a batch, builds a fresh
/// tape, backpropagates and applies one (optionally dual-rate) Adam
/// update. A non-finite loss aborts with step diagnostics.
inline TrainResult train(Model& model, const SignalDataset& data,
                         const TrainConfig& cfg) {
  if (model.mlp.cfg.output_dim != data.value_dim())
    throw config_error("train: model output dim " +
                       std::to_string(model.mlp.cfg.output_dim) +
                       " does not match signal value dim " +
                       std::to_string(data.value_dim()));
  Rng rng(cfg.seed);
  AdamGroup grid_group, mlp_group;
  grid_group.params = model.grid_params();
  mlp_group.params = model.mlp_params();
  grid_group.lr = cfg.grid_lr >= 0.0 ? cfg.grid_lr : cfg.base_lr;
  mlp_group.lr = cfg.base_lr;
  grid_group.init();
  mlp_group.init();

  const std::size_t total = cfg.total_steps();
  TrainResult res;
  std::vector<double> coords, values;
  for (std::size_t step = 0; step < total; ++step) {
    data.sample_batch(rng, cfg.batch_size, coords, values);
    grid_group.zero_grad();
    mlp_group.zero_grad();
    Tape t;
    Val out = model.forward(t, coords, cfg.batch_size);
    Val loss = ad::loss_node(t, cfg.loss, out, values);
    const double loss_now = t.node(loss).val[0];
    const double lr_mlp =
        cfg.cosine ? cosine_lr(static_cast<long>(step),
                               static_cast<long>(total), mlp_group.lr,
                               cfg.lr_min)
                   : mlp_group.lr;
    const double lr_grid =
        cfg.cosine ? cosine_lr(static_cast<long>(step),
                               static_cast<long>(total), grid_group.lr,
                               cfg.lr_min)
                   : grid_group.lr;
    if (!std::isfinite(loss_now)) {
      double gn = 0.0, mn = 0.0;
      for (ParamTensor* p : grid_group.params)
        for (double g : p->grad) gn += g * g;
      for (ParamTensor* p : mlp_group.params)
        for (double g : p->grad) mn += g * g;
      throw numeric_error(
          "training aborted: non-finite loss at step " +
          std::to_string(step) + " (lr_mlp=" + std::to_string(lr_mlp) +
          ", lr_grid=" + std::to_string(lr_grid) +
          ", |grad_grid|=" + std::to_string(std::sqrt(gn)) +
          ", |grad_mlp|=" + std::to_string(std::sqrt(mn)) + ")");
    }
    try {
      tape_backward(t, loss);
    } catch (const numeric_error& e) {
      throw numeric_error("training aborted at step " + std::to_string(step) +
                          ": " + e.what());
    }
    grid_group.step(lr_grid);
    mlp_group.step(lr_mlp);

    const bool last = step + 1 == total;
    const bool eval_now =
        cfg.eval_every > 0 && (step % cfg.eval_every == 0 || last);
    if (eval_now || (cfg.log_every > 0 && (step % cfg.log_every == 0 || last))) {
      MetricRow row{step, loss_now, lr_mlp,
                    std::numeric_limits<double>::quiet_NaN()};
      if (eval_now) row.metric = detail::quick_metric(model, data);
      res.log.push_back(row);
    }
    res.final_loss = loss_now;
  }
  res.steps = total;
  return res;
}

inline std::string metric_log_csv(const TrainResult& res,
                                  const std::string& metric_name) {
  std::string out = "step,loss,lr," + metric_name + "\n";
  char buf[128];
  for (const auto& row : res.log) {
    if (std::isnan(row.metric))
      std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,\n", row.step, row.loss,
                    row.lr);
    else
      std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g\n", row.step,
                    row.loss, row.lr, row.metric);
    out += buf;
  }
  return out;
}

}  // namespace peps
