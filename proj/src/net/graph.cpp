#include <cmath>

#include "peavs/error.hpp"
#include "peavs/net/graph.hpp"
#include "peavs/rng.hpp"

namespace peavs::net {

Graph::Graph(bool track_grad, bool train, std::uint64_t dropout_seed)
    : track_(track_grad), train_(train), seed_(dropout_seed) {
  nodes_.reserve(256);
}

Graph::Id Graph::push(Mat value, std::function<void()> back) {
  nodes_.push_back({std::move(value), Mat(), track_ ? std::move(back) : std::function<void()>()});
  return nodes_.size() - 1;
}

Mat& Graph::grad_of(Id id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
  return n.grad;
}

namespace {

Mat& param_grad(const Parameter& p) {
  if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
  return p.grad;
}

}  // namespace

double Graph::uniform() { return counter_uniform(seed_, counter_++); }

Graph::Id Graph::constant(Mat value) { return push(std::move(value)); }

Graph::Id Graph::linear(Id x, const Parameter& w, const Parameter& b) {
  if (value(x).cols() != w.value.rows()) {
    throw Error(Errc::ShapeMismatch, w.name + " expects " + std::to_string(w.value.rows()) + " inputs, got " +
                                         std::to_string(value(x).cols()));
  }
  Mat y = value(x) * w.value;
  y.rowwise() += b.value.row(0);
  const Id out = push(std::move(y));
  nodes_[out].back = track_ ? std::function<void()>([this, x, out, &w, &b] {
    const Mat& dy = nodes_[out].grad;
    param_grad(w).noalias() += value(x).transpose() * dy;
    param_grad(b) += dy.colwise().sum();
    grad_of(x).noalias() += dy * w.value.transpose();
  })
                            : std::function<void()>();
  return out;
}

Graph::Id Graph::unfold(Id x, int kernel) {
  if (kernel == 1) return x;
  const Mat& in = value(x);
  const Eigen::Index n = in.rows();
  const Eigen::Index d = in.cols();
  const int half = kernel / 2;
  Mat y = Mat::Zero(n, d * kernel);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (int j = 0; j < kernel; ++j) {
      const Eigen::Index s = t + j - half;
      if (s >= 0 && s < n) y.block(t, j * d, 1, d) = in.row(s);
    }
  }
  const Id out = push(std::move(y));
  if (track_) {
    nodes_[out].back = [this, x, out, kernel, half, n, d] {
      const Mat& dy = nodes_[out].grad;
      Mat& dx = grad_of(x);
      for (Eigen::Index t = 0; t < n; ++t) {
        for (int j = 0; j < kernel; ++j) {
          const Eigen::Index s = t + j - half;
          if (s >= 0 && s < n) dx.row(s) += dy.block(t, j * d, 1, d);
        }
      }
    };
  }
  return out;
}

Graph::Id Graph::layer_norm(Id x, const Parameter& gain, const Parameter& bias, double eps) {
  const Mat& in = value(x);
  const auto d = static_cast<double>(in.cols());
  const Eigen::VectorXd mean = in.rowwise().mean();
  Mat xhat = in.colwise() - mean;
  const Eigen::VectorXd inv_std = ((xhat.array().square().rowwise().sum() / d) + eps).rsqrt().matrix();
  xhat = inv_std.asDiagonal() * xhat;
  Mat y = xhat.array().rowwise() * gain.value.row(0).array();
  y.rowwise() += bias.value.row(0);
  const Id out = push(std::move(y));
  if (track_) {
    nodes_[out].back = [this, x, out, &gain, &bias, xhat = std::move(xhat), inv_std, d] {
      const Mat& dy = nodes_[out].grad;
      param_grad(gain) += (dy.array() * xhat.array()).colwise().sum().matrix();
      param_grad(bias) += dy.colwise().sum();
      const Mat dxhat = dy.array().rowwise() * gain.value.row(0).array();
      const Eigen::VectorXd m1 = dxhat.rowwise().sum() / d;
      const Eigen::VectorXd m2 = (dxhat.array() * xhat.array()).rowwise().sum().matrix() / d;
      Mat dx = dxhat.colwise() - m1;
      dx -= m2.asDiagonal() * xhat;
      grad_of(x) += inv_std.asDiagonal() * dx;
    };
  }
  return out;
}

Graph::Id Graph::attention(Id q, Id k, Id v, int heads, double dropout) {
  const Mat& Q = value(q);
  const Mat& K = value(k);
  const Mat& V = value(v);
  if (Q.cols() != K.cols() || K.cols() != V.cols() || K.rows() != V.rows() || Q.cols() % heads != 0) {
    throw Error(Errc::ShapeMismatch, "attention operands disagree in shape");
  }
  const Eigen::Index dk = Q.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const bool drop = train_ && dropout > 0.0;
  std::vector<Mat> probs(static_cast<std::size_t>(heads));
  std::vector<Mat> masks(drop ? static_cast<std::size_t>(heads) : 0);
  Mat y(Q.rows(), Q.cols());
  for (int h = 0; h < heads; ++h) {
    Mat s = (Q.middleCols(h * dk, dk) * K.middleCols(h * dk, dk).transpose()) * scale;
    const Eigen::VectorXd mx = s.rowwise().maxCoeff();
    s = (s.colwise() - mx).array().exp().matrix();
    const Eigen::VectorXd z = s.rowwise().sum();
    s = z.cwiseInverse().asDiagonal() * s;
    Mat used = s;
    if (drop) {
      Mat m(s.rows(), s.cols());
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform() < dropout ? 0.0 : 1.0 / (1.0 - dropout);
      used = used.cwiseProduct(m);
      masks[static_cast<std::size_t>(h)] = std::move(m);
    }
    y.middleCols(h * dk, dk) = used * V.middleCols(h * dk, dk);
    probs[static_cast<std::size_t>(h)] = std::move(s);
  }
  const Id out = push(std::move(y));
  if (track_) {
    nodes_[out].back = [this, q, k, v, out, heads, dk, scale, drop, probs = std::move(probs), masks = std::move(masks)] {
      const Mat& dy = nodes_[out].grad;
      const Mat& Q = value(q);
      const Mat& K = value(k);
      const Mat& V = value(v);
      Mat dq = Mat::Zero(Q.rows(), Q.cols());
      Mat dkm = Mat::Zero(K.rows(), K.cols());
      Mat dv = Mat::Zero(V.rows(), V.cols());
      for (int h = 0; h < heads; ++h) {
        const auto hs = static_cast<std::size_t>(h);
        const Mat& p = probs[hs];
        const Mat used = drop ? Mat(p.cwiseProduct(masks[hs])) : p;
        const auto dyh = dy.middleCols(h * dk, dk);
        dv.middleCols(h * dk, dk) += used.transpose() * dyh;
        Mat dp = dyh * V.middleCols(h * dk, dk).transpose();
        if (drop) dp = dp.cwiseProduct(masks[hs]);
        const Eigen::VectorXd rs = dp.cwiseProduct(p).rowwise().sum();
        const Mat ds = p.cwiseProduct(dp.colwise() - rs) * scale;
        dq.middleCols(h * dk, dk) += ds * K.middleCols(h * dk, dk);
        dkm.middleCols(h * dk, dk) += ds.transpose() * Q.middleCols(h * dk, dk);
      }
      grad_of(q) += dq;
      grad_of(k) += dkm;
      grad_of(v) += dv;
    };
  }
  return out;
}

Graph::Id Graph::relu(Id x) {
  const Id out = push(value(x).cwiseMax(0.0));
  if (track_) {
    nodes_[out].back = [this, x, out] {
      grad_of(x) += (value(x).array() > 0.0).select(nodes_[out].grad, 0.0);
    };
  }
  return out;
}

Graph::Id Graph::dropout(Id x, double p) {
  if (!train_ || p <= 0.0) return x;
  Mat m(value(x).rows(), value(x).cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform() < p ? 0.0 : 1.0 / (1.0 - p);
  const Id out = push(value(x).cwiseProduct(m));
  if (track_) {
    nodes_[out].back = [this, x, out, m = std::move(m)] { grad_of(x) += nodes_[out].grad.cwiseProduct(m); };
  }
  return out;
}

Graph::Id Graph::add(Id a, Id b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw Error(Errc::ShapeMismatch, "add of mismatched shapes");
  }
  const Id out = push(value(a) + value(b));
  if (track_) {
    nodes_[out].back = [this, a, b, out] {
      grad_of(a) += nodes_[out].grad;
      grad_of(b) += nodes_[out].grad;
    };
  }
  return out;
}

Graph::Id Graph::mean_rows(Id x) {
  const Id out = push(value(x).colwise().mean());
  if (track_) {
    nodes_[out].back = [this, x, out] {
      const auto n = static_cast<double>(value(x).rows());
      grad_of(x).rowwise() += nodes_[out].grad.row(0) / n;
    };
  }
  return out;
}

Graph::Id Graph::concat_cols(Id a, Id b) {
  Mat y(value(a).rows(), value(a).cols() + value(b).cols());
  y << value(a), value(b);
  const Id out = push(std::move(y));
  if (track_) {
    nodes_[out].back = [this, a, b, out] {
      const Mat& dy = nodes_[out].grad;
      grad_of(a) += dy.leftCols(value(a).cols());
      grad_of(b) += dy.rightCols(value(b).cols());
    };
  }
  return out;
}

Graph::Id Graph::l2_distance(Id a, Id b) {
  const Mat diff = value(a) - value(b);
  const double dist = diff.norm();
  const Id out = push(Mat::Constant(1, 1, dist));
  if (track_) {
    nodes_[out].back = [this, a, b, out, diff, dist] {
      if (dist == 0.0) return;
      const Mat g = diff * (nodes_[out].grad(0, 0) / dist);
      grad_of(a) += g;
      grad_of(b) -= g;
    };
  }
  return out;
}

void Graph::seed_grad(Id id, const Mat& grad) { grad_of(id) += grad; }

void Graph::backward() {
  if (!track_) throw Error(Errc::InvalidConfig, "backward on a graph built without gradient tracking");
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (nodes_[i].back && nodes_[i].grad.size() != 0) nodes_[i].back();
  }
}

}  // namespace peavs::net
