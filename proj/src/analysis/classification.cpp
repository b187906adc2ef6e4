#include <algorithm>
#include <cmath>

#include "peavs/analysis.hpp"

namespace peavs::analysis {

double bin_upper_edge(int bin) { return kScaleMax * static_cast<double>(bin) / static_cast<double>(kBinCount); }

int bin_score(double score) {
  if (std::isnan(score) || score <= bin_upper_edge(1)) return 1;
  if (score > bin_upper_edge(kBinCount - 1)) return kBinCount;
  int k = static_cast<int>(std::ceil(score * kBinCount / kScaleMax));
  k = std::clamp(k, 1, kBinCount);
  while (k > 1 && score <= bin_upper_edge(k - 1)) --k;
  while (k < kBinCount && score > bin_upper_edge(k)) ++k;
  return k;
}

double ConfusionMatrix::accuracy() const {
  if (total() <= 0) throw Error(Errc::EmptyInput, "empty confusion matrix");
  return static_cast<double>(tp + tn) / static_cast<double>(total());
}

BinaryEval binary_sync_eval(const ConfusionMatrix& m) {
  if (m.tp < 0 || m.fn < 0 || m.fp < 0 || m.tn < 0) throw Error(Errc::InvalidConfig, "negative confusion count");
  return {m, m.accuracy()};
}

BinaryEval binary_sync_eval(const std::vector<bool>& predicted_positive, const std::vector<bool>& truth_positive) {
  if (predicted_positive.size() != truth_positive.size()) {
    throw Error(Errc::LabelMismatch, std::to_string(predicted_positive.size()) + " predictions vs " +
                                         std::to_string(truth_positive.size()) + " labels");
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truth_positive.size(); ++i) {
    if (truth_positive[i]) {
      (predicted_positive[i] ? m.tp : m.fn)++;
    } else {
      (predicted_positive[i] ? m.fp : m.tn)++;
    }
  }
  return binary_sync_eval(m);
}

bool peavs_positive(double score) { return bin_score(score) == kBinCount; }

bool sync_truth(const std::optional<distort::DistortionSpec>& spec) {
  if (!spec) return true;
  if (spec->kind != distort::Kind::AudioShift) return false;
  return std::abs(spec->level) <= 0.125 + 1e-12;
}

}  // namespace peavs::analysis
