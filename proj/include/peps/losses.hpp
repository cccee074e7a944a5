#pragma once

#include <cmath>
#include <span>
#include <string>

#include "peps/tape.hpp"

namespace peps {

enum class LossKind { l1, l2, mape };

inline const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::l1: return "l1";
    case LossKind::l2: return "l2";
    case LossKind::mape: return "mape";
  }
  return "?";
}

/// Denominator guard for MAPE: |gt| below this is clamped up (the SDF
/// ground truth crosses zero at the surface).
inline constexpr double kMapeGuard = 1e-6;

inline double loss_value(LossKind kind, std::span<const double> pred,
                         std::span<const double> gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("loss_value: length mismatch");
  if (pred.empty()) throw std::invalid_argument("loss_value: empty vectors");
  const double n = static_cast<double>(pred.size());
  double acc = 0.0;
  switch (kind) {
    case LossKind::l1:
      for (std::size_t i = 0; i < pred.size(); ++i)
        acc += std::fabs(pred[i] - gt[i]);
      return acc / n;
    case LossKind::l2:
      for (std::size_t i = 0; i < pred.size(); ++i)
        acc += (pred[i] - gt[i]) * (pred[i] - gt[i]);
      return acc / n;
    case LossKind::mape:
      for (std::size_t i = 0; i < pred.size(); ++i)
        acc += std::fabs(gt[i] - pred[i]) /
               std::max(std::fabs(gt[i]), kMapeGuard);
      return 100.0 * acc / n;
  }
  throw std::invalid_argument("loss_value: unknown loss kind");
}

namespace ad {

/// Tape node matching loss_value over a batched prediction.
inline Val loss_node(Tape& t, LossKind kind, Val pred,
                     std::span<const double> gt) {
  const std::size_t rows = t.node(pred).rows;
  const std::size_t cols = t.node(pred).cols;
  if (rows * cols != gt.size())
    throw config_error("loss_node: prediction/ground-truth size mismatch");
  Val gtv = constant(t, rows, cols, gt);
  Val err = sub(t, pred, gtv);
  switch (kind) {
    case LossKind::l1:
      return reduce_mean(t, abs(t, err));
    case LossKind::l2:
      return reduce_mean(t, square(t, err));
    case LossKind::mape: {
      std::vector<double> w(gt.size());
      const double scale = 100.0 / static_cast<double>(gt.size());
      for (std::size_t i = 0; i < gt.size(); ++i)
        w[i] = scale / std::max(std::fabs(gt[i]), kMapeGuard);
      Val weights = constant(t, rows, cols, w);
      return reduce_sum(t, hadamard(t, abs(t, err), weights));
    }
  }
  throw config_error("loss_node: unknown loss kind");
}

}  // namespace ad

}  // namespace peps
