#include <algorithm>

#include "peavs/error.hpp"
#include "peavs/net/losses.hpp"

namespace peavs::net {

namespace {

struct Moments {
  double mx = 0, my = 0, vx = 0, vy = 0, cov = 0;
};

Moments moments(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  Moments m;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m.mx += x[i];
    m.my += y[i];
  }
  m.mx /= n;
  m.my /= n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - m.mx;
    const double dy = y[i] - m.my;
    m.vx += dx * dx;
    m.vy += dy * dy;
    m.cov += dx * dy;
  }
  m.vx /= n;
  m.vy /= n;
  m.cov /= n;
  return m;
}

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::ShapeMismatch, "ccc inputs differ in length");
  if (x.size() < 2) throw Error(Errc::EmptyBatch, "ccc needs at least two values");
}

}  // namespace

LossWithGrad contrastive_loss(std::span<const double> distances, std::span<const int> labels, double margin) {
  if (distances.empty()) throw Error(Errc::EmptyBatch, "contrastive loss over an empty batch");
  if (distances.size() != labels.size()) throw Error(Errc::ShapeMismatch, "distances and labels differ in length");
  if (!(margin > 0.0)) throw Error(Errc::InvalidConfig, "margin must be positive");
  const auto n = static_cast<double>(distances.size());
  LossWithGrad out;
  out.grad.resize(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const double d = distances[i];
    if (!(d >= 0.0)) throw Error(Errc::InvalidConfig, "negative distance");
    if (labels[i] == 1) {
      out.value += d * d;
      out.grad[i] = d / n;
    } else {
      const double h = std::max(0.0, margin - d);
      out.value += h * h;
      out.grad[i] = -h / n;
    }
  }
  out.value /= 2.0 * n;
  return out;
}

double ccc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  if (std::equal(x.begin(), x.end(), y.begin()) && std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
    return 1.0;
  }
  const Moments m = moments(x, y);
  const double den = m.vx + m.vy + (m.mx - m.my) * (m.mx - m.my);
  if (den == 0.0) throw Error(Errc::DegenerateBatch, "ccc denominator is zero");
  return 2.0 * m.cov / den;
}

LossWithGrad ccc_loss(std::span<const double> truth, std::span<const double> predicted) {
  check_pair(truth, predicted);
  const Moments m = moments(truth, predicted);
  if (m.vx == 0.0) throw Error(Errc::DegenerateBatch, "target scores have zero variance");
  const double num = 2.0 * m.cov;
  const double gap = m.mx - m.my;
  const double den = m.vx + m.vy + gap * gap;
  const auto n = static_cast<double>(truth.size());
  LossWithGrad out;
  out.value = 1.0 - num / den;
  out.grad.resize(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double dnum = 2.0 * (truth[i] - m.mx) / n;
    const double dden = 2.0 * (predicted[i] - m.my) / n - 2.0 * gap / n;
    out.grad[i] = -(dnum * den - num * dden) / (den * den);
  }
  return out;
}

}  // namespace peavs::net
