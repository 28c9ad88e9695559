#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ibg::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

// Lightweight handle into a tape node. Values and gradients live on the tape;
// a default-constructed Tensor is invalid until assigned.
class Tensor {
 public:
  Tensor() = default;
  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  int id() const { return id_; }

  const Shape& shape() const;
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t numel() const;
  const std::vector<double>& value() const;
  const std::vector<double>& grad() const;  // zeros until backward touches it
  double item() const;                      // single-element tensors only

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode tape over f64 tensors of rank 1 or 2 (row-major). One tape per
// thread of execution; independent tapes may run in parallel.
//
// backward() accumulates: calling it twice without zero_grad() doubles every
// gradient. Elementwise ops require identical shapes; the only broadcasts are
// the explicit scalar ops (scale, add_scalar) and add_rowvec.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor leaf(Shape shape, std::vector<double> data);
  Tensor zeros(Shape shape);

  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor transpose(const Tensor& a);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double c);
  Tensor add_scalar(const Tensor& a, double c);
  Tensor add_rowvec(const Tensor& m, const Tensor& row);
  Tensor tanh(const Tensor& a);
  Tensor relu(const Tensor& a);
  Tensor exp(const Tensor& a);
  Tensor sum(const Tensor& a);
  Tensor softmax_rows(const Tensor& a);
  Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels);
  Tensor gaussian_kl(const Tensor& mu, const Tensor& log_sigma);
  Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids);

  void backward(const Tensor& root);
  void zero_grad();
  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    leaf, matmul, transpose, add, sub, mul, scale, add_scalar, add_rowvec,
    tanh, relu, exp, sum, softmax_rows, cross_entropy, gaussian_kl, gather_rows,
  };

  struct Node {
    Op op = Op::leaf;
    int in0 = -1, in1 = -1;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;            // persistent, accumulated
    std::vector<double> aux;             // cached values for the backward rule
    std::vector<std::size_t> indices;    // labels / gathered row ids
    double c = 0.0;
  };

  friend class Tensor;
  Tensor push(Node node);
  const Node& node(const Tensor& t) const;
  Node& node(const Tensor& t);
  void check_same_shape(const Tensor& a, const Tensor& b, const char* op) const;
  void backward_node(int i, std::vector<std::vector<double>>& tg);

  std::vector<Node> nodes_;
  std::vector<double> empty_grad_;
};

}  // namespace ibg::ad
