#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace peavs::net {

using Mat = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Mat value;
  // Written only by graphs built with gradient tracking.
  mutable Mat grad;

  void zero_grad() const { grad.setZero(value.rows(), value.cols()); }
};

// Reverse-mode tape over row-major sequences (rows = time steps).
class Graph {
 public:
  using Id = std::size_t;

  Graph(bool track_grad, bool train, std::uint64_t dropout_seed = 0);

  Id constant(Mat value);
  // x (N x in) * W (in x out) + b (1 x out)
  Id linear(Id x, const Parameter& w, const Parameter& b);
  // Zero-padded "same" unfold: row t becomes [x(t - k/2) ... x(t + k/2)].
  Id unfold(Id x, int kernel);
  Id layer_norm(Id x, const Parameter& gain, const Parameter& bias, double eps = 1e-5);
  // Scaled dot-product attention split over `heads` column groups.
  Id attention(Id q, Id k, Id v, int heads, double dropout);
  Id relu(Id x);
  Id dropout(Id x, double p);
  Id add(Id a, Id b);
  Id mean_rows(Id x);
  Id concat_cols(Id a, Id b);
  Id l2_distance(Id a, Id b);

  const Mat& value(Id id) const { return nodes_[id].value; }
  bool tracking() const { return track_; }
  bool training() const { return train_; }

  void seed_grad(Id id, const Mat& grad);
  void backward();

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void()> back;
  };

  Id push(Mat value, std::function<void()> back = {});
  Mat& grad_of(Id id);
  double uniform();

  std::vector<Node> nodes_;
  bool track_;
  bool train_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace peavs::net
