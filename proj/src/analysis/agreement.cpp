#include "peavs/analysis.hpp"

namespace peavs::analysis {

double krippendorff_alpha(std::span<const std::vector<double>> units) {
  std::vector<double> pooled;
  double observed = 0.0;
  std::size_t pairable_units = 0;
  for (const auto& u : units) {
    if (u.size() < 2) continue;
    ++pairable_units;
    double within = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = i + 1; j < u.size(); ++j) within += 2.0 * (u[i] - u[j]) * (u[i] - u[j]);
    }
    observed += within / static_cast<double>(u.size() - 1);
    pooled.insert(pooled.end(), u.begin(), u.end());
  }
  if (pairable_units < 2) throw Error(Errc::InsufficientData, "alpha needs at least two units with two ratings");
  const auto n = static_cast<double>(pooled.size());
  const double d_o = observed / n;
  if (d_o == 0.0) return 1.0;

  // Sum over ordered pairs of (a - b)^2 = 2 n sum(v^2) - 2 (sum v)^2.
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : pooled) {
    s1 += v;
    s2 += v * v;
  }
  const double d_e = (2.0 * n * s2 - 2.0 * s1 * s1) / (n * (n - 1.0));
  return 1.0 - d_o / d_e;
}

}  // namespace peavs::analysis
