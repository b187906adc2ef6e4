#pragma once

// Reference implementations used only by tests. They avoid the library's numerical
// code paths: plain loops, cyclic Jacobi rotations, literal coincidence matrices.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace peavs::oracle {

struct Eig {
  std::vector<double> values;
  Eigen::MatrixXd vectors;  // columns
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
inline Eig jacobi_eigen(Eigen::MatrixXd a, int sweeps = 100) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  Eig out;
  out.vectors = v;
  for (Eigen::Index i = 0; i < n; ++i) out.values.push_back(a(i, i));
  return out;
}

inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  const Eig e = jacobi_eigen(m);
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = std::sqrt(std::max(0.0, e.values[static_cast<std::size_t>(i)]));
    out += s * e.vectors.col(i) * e.vectors.col(i).transpose();
  }
  return out;
}

inline double frechet(const Eigen::VectorXd& mu_a, const Eigen::MatrixXd& sa, const Eigen::VectorXd& mu_b,
                      const Eigen::MatrixXd& sb) {
  const Eigen::MatrixXd ra = psd_sqrt(sa);
  const Eigen::MatrixXd m = ra * sb * ra;
  const Eig e = jacobi_eigen(0.5 * (m + m.transpose()));
  double tr_sqrt = 0.0;
  for (double l : e.values) tr_sqrt += std::sqrt(std::max(0.0, l));
  return std::max(0.0, (mu_a - mu_b).squaredNorm() + sa.trace() + sb.trace() - 2.0 * tr_sqrt);
}

inline double frechet_diagonal(const Eigen::VectorXd& mu_a, const Eigen::VectorXd& va, const Eigen::VectorXd& mu_b,
                               const Eigen::VectorXd& vb) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < mu_a.size(); ++i) {
    d += (mu_a(i) - mu_b(i)) * (mu_a(i) - mu_b(i));
    d += (std::sqrt(va(i)) - std::sqrt(vb(i))) * (std::sqrt(va(i)) - std::sqrt(vb(i)));
  }
  return d;
}

// Krippendorff's alpha (interval) through an explicit value-by-value coincidence matrix.
inline double krippendorff_literal(const std::vector<std::vector<double>>& units) {
  std::vector<double> values;
  for (const auto& u : units)
    if (u.size() >= 2) values.insert(values.end(), u.begin(), u.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const std::size_t v = values.size();
  auto idx = [&](double x) {
    return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), x) - values.begin());
  };
  std::vector<std::vector<double>> o(v, std::vector<double>(v, 0.0));
  for (const auto& u : units) {
    if (u.size() < 2) continue;
    const double w = 1.0 / static_cast<double>(u.size() - 1);
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < u.size(); ++j)
        if (i != j) o[idx(u[i])][idx(u[j])] += w;
  }
  std::vector<double> nc(v, 0.0);
  double n = 0.0;
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) nc[c] += o[c][k];
    n += nc[c];
  }
  double d_o = 0.0, d_e = 0.0;
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) {
      const double delta = (values[c] - values[k]) * (values[c] - values[k]);
      d_o += o[c][k] * delta;
      d_e += nc[c] * nc[k] * delta;
    }
  }
  d_o /= n;
  d_e /= n * (n - 1.0);
  if (d_o == 0.0) return 1.0;
  return 1.0 - d_o / d_e;
}

// Direct evaluation of the disagreement rules, written as a lookup over the sorted triple.
inline int disagreement_class(int a, int b, int c) {
  int s[3] = {a, b, c};
  std::sort(s, s + 3);
  const bool distinct = s[0] != s[1] && s[1] != s[2];
  if (!distinct) return 0;
  return (s[2] - s[0] >= 3) ? 2 : 1;
}

inline double central_difference(const std::function<double()>& f, double& x, double h) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace peavs::oracle
