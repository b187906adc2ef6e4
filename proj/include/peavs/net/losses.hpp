#pragma once

#include <span>
#include <vector>

namespace peavs::net {

struct LossWithGrad {
  double value = 0.0;
  std::vector<double> grad;
};

// (1/2N) sum[y D^2 + (1-y) max(0, m-D)^2]; grad is with respect to each D.
LossWithGrad contrastive_loss(std::span<const double> distances, std::span<const int> labels, double margin);

// Concordance correlation with population moments. Identical constant inputs give 1.
double ccc(std::span<const double> x, std::span<const double> y);

// 1 - ccc(truth, predicted); grad is with respect to the predictions.
LossWithGrad ccc_loss(std::span<const double> truth, std::span<const double> predicted);

}  // namespace peavs::net
