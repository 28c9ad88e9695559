#include "ibg/autodiff.hpp"

#include <cmath>
#include <limits>

#include "ibg/errors.hpp"

namespace ibg::ad {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return shape.empty() ? 0 : n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

// rank-1 tensors act as a single row wherever 2-d semantics are needed
std::size_t shape_rows(const Shape& s) { return s.size() == 2 ? s[0] : 1; }
std::size_t shape_cols(const Shape& s) { return s.size() == 2 ? s[1] : s.at(0); }

}  // namespace

const Shape& Tensor::shape() const { return tape_->node(*this).shape; }
std::size_t Tensor::rows() const { return shape_rows(shape()); }
std::size_t Tensor::cols() const { return shape_cols(shape()); }
std::size_t Tensor::numel() const { return shape_numel(shape()); }
const std::vector<double>& Tensor::value() const { return tape_->node(*this).value; }

const std::vector<double>& Tensor::grad() const {
  const auto& n = tape_->node(*this);
  if (n.grad.empty()) {
    auto& g = const_cast<Tape::Node&>(n).grad;
    g.assign(n.value.size(), 0.0);
  }
  return n.grad;
}

double Tensor::item() const {
  const auto& v = value();
  if (v.size() != 1) {
    throw ContractError("item() requires a single-element tensor, got shape " + shape_str(shape()));
  }
  return v[0];
}

Tensor Tape::push(Node nd) {
  nodes_.push_back(std::move(nd));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

const Tape::Node& Tape::node(const Tensor& t) const {
  if (!t.valid() || t.tape_ != this) throw ContractError("tensor does not belong to this tape");
  return nodes_[static_cast<std::size_t>(t.id_)];
}

Tape::Node& Tape::node(const Tensor& t) {
  if (!t.valid() || t.tape_ != this) throw ContractError("tensor does not belong to this tape");
  return nodes_[static_cast<std::size_t>(t.id_)];
}

void Tape::check_same_shape(const Tensor& a, const Tensor& b, const char* op) const {
  if (node(a).shape != node(b).shape) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(node(a).shape) +
                         " vs " + shape_str(node(b).shape));
  }
}

Tensor Tape::leaf(Shape shape, std::vector<double> data) {
  std::size_t n = shape_numel(shape);
  if (n == 0) throw DimensionError("leaf: empty shape");
  if (data.size() != n) {
    throw DimensionError("leaf: data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw ContractError("leaf: non-finite element rejected");
  }
  Node nd;
  nd.op = Op::leaf;
  nd.shape = std::move(shape);
  nd.value = std::move(data);
  return push(std::move(nd));
}

Tensor Tape::zeros(Shape shape) {
  std::size_t n = shape_numel(shape);
  return leaf(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.shape.size() != 2 || nb.shape.size() != 2) {
    throw DimensionError("matmul: rank-2 required, got " + shape_str(na.shape) + " and " +
                         shape_str(nb.shape));
  }
  std::size_t m = na.shape[0], k = na.shape[1], k2 = nb.shape[0], n = nb.shape[1];
  if (k != k2) {
    throw DimensionError("matmul: inner extents differ, " + shape_str(na.shape) + " x " +
                         shape_str(nb.shape));
  }
  Node nd;
  nd.op = Op::matmul;
  nd.in0 = a.id();
  nd.in1 = b.id();
  nd.shape = {m, n};
  nd.value.assign(m * n, 0.0);
  const double* A = na.value.data();
  const double* B = nb.value.data();
  double* C = nd.value.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double av = A[i * k + p];
      const double* brow = B + p * n;
      double* crow = C + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return push(std::move(nd));
}

Tensor Tape::transpose(const Tensor& a) {
  const Node& na = node(a);
  if (na.shape.size() != 2) throw DimensionError("transpose: rank-2 required");
  std::size_t m = na.shape[0], n = na.shape[1];
  Node nd;
  nd.op = Op::transpose;
  nd.in0 = a.id();
  nd.shape = {n, m};
  nd.value.assign(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) nd.value[j * m + i] = na.value[i * n + j];
  return push(std::move(nd));
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Node nd;
  nd.op = Op::add;
  nd.in0 = a.id();
  nd.in1 = b.id();
  nd.shape = node(a).shape;
  nd.value = node(a).value;
  const auto& bv = node(b).value;
  for (std::size_t i = 0; i < nd.value.size(); ++i) nd.value[i] += bv[i];
  return push(std::move(nd));
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Node nd;
  nd.op = Op::sub;
  nd.in0 = a.id();
  nd.in1 = b.id();
  nd.shape = node(a).shape;
  nd.value = node(a).value;
  const auto& bv = node(b).value;
  for (std::size_t i = 0; i < nd.value.size(); ++i) nd.value[i] -= bv[i];
  return push(std::move(nd));
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Node nd;
  nd.op = Op::mul;
  nd.in0 = a.id();
  nd.in1 = b.id();
  nd.shape = node(a).shape;
  nd.value = node(a).value;
  const auto& bv = node(b).value;
  for (std::size_t i = 0; i < nd.value.size(); ++i) nd.value[i] *= bv[i];
  return push(std::move(nd));
}

Tensor Tape::scale(const Tensor& a, double c) {
  Node nd;
  nd.op = Op::scale;
  nd.in0 = a.id();
  nd.shape = node(a).shape;
  nd.c = c;
  nd.value = node(a).value;
  for (auto& v : nd.value) v *= c;
  return push(std::move(nd));
}

Tensor Tape::add_scalar(const Tensor& a, double c) {
  Node nd;
  nd.op = Op::add_scalar;
  nd.in0 = a.id();
  nd.shape = node(a).shape;
  nd.c = c;
  nd.value = node(a).value;
  for (auto& v : nd.value) v += c;
  return push(std::move(nd));
}

Tensor Tape::add_rowvec(const Tensor& m, const Tensor& row) {
  const Node& nm = node(m);
  const Node& nr = node(row);
  std::size_t cols = shape_cols(nm.shape);
  if (nr.value.size() != cols) {
    throw DimensionError("add_rowvec: row length " + shape_str(nr.shape) +
                         " does not match matrix " + shape_str(nm.shape));
  }
  Node nd;
  nd.op = Op::add_rowvec;
  nd.in0 = m.id();
  nd.in1 = row.id();
  nd.shape = nm.shape;
  nd.value = nm.value;
  std::size_t rows = shape_rows(nm.shape);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) nd.value[i * cols + j] += nr.value[j];
  return push(std::move(nd));
}

Tensor Tape::tanh(const Tensor& a) {
  Node nd;
  nd.op = Op::tanh;
  nd.in0 = a.id();
  nd.shape = node(a).shape;
  nd.value = node(a).value;
  for (auto& v : nd.value) v = std::tanh(v);
  return push(std::move(nd));
}

Tensor Tape::relu(const Tensor& a) {
  Node nd;
  nd.op = Op::relu;
  nd.in0 = a.id();
  nd.shape = node(a).shape;
  nd.value = node(a).value;
  for (auto& v : nd.value) v = v > 0.0 ? v : 0.0;
  return push(std::move(nd));
}

Tensor Tape::exp(const Tensor& a) {
  Node nd;
  nd.op = Op::exp;
  nd.in0 = a.id();
  nd.shape = node(a).shape;
  nd.value = node(a).value;
  for (auto& v : nd.value) v = std::exp(v);
  return push(std::move(nd));
}

Tensor Tape::sum(const Tensor& a) {
  Node nd;
  nd.op = Op::sum;
  nd.in0 = a.id();
  nd.shape = {1};
  double s = 0.0;
  for (double v : node(a).value) s += v;
  nd.value = {s};
  return push(std::move(nd));
}

Tensor Tape::softmax_rows(const Tensor& a) {
  const Node& na = node(a);
  std::size_t rows = shape_rows(na.shape);
  std::size_t cols = shape_cols(na.shape);
  Node nd;
  nd.op = Op::softmax_rows;
  nd.in0 = a.id();
  nd.shape = na.shape;
  nd.value.assign(rows * cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* in = na.value.data() + i * cols;
    double* out = nd.value.data() + i * cols;
    double mx = in[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      out[j] = std::exp(in[j] - mx);
      denom += out[j];
    }
    for (std::size_t j = 0; j < cols; ++j) out[j] /= denom;
  }
  return push(std::move(nd));
}

Tensor Tape::cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels) {
  const Node& nl = node(logits);
  std::size_t m = shape_rows(nl.shape);
  std::size_t c = shape_cols(nl.shape);
  if (labels.size() != m) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(m) + " rows");
  }
  for (std::size_t lab : labels) {
    if (lab >= c) {
      throw IndexError("cross_entropy: label " + std::to_string(lab) + " out of range [0, " +
                       std::to_string(c) + ")");
    }
  }
  Node nd;
  nd.op = Op::cross_entropy;
  nd.in0 = logits.id();
  nd.shape = {1};
  nd.indices = labels;
  nd.aux.assign(m * c, 0.0);  // softmax cache for the backward rule
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* in = nl.value.data() + i * c;
    double* p = nd.aux.data() + i * c;
    double mx = in[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, in[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      p[j] = std::exp(in[j] - mx);
      denom += p[j];
    }
    for (std::size_t j = 0; j < c; ++j) p[j] /= denom;
    // -log p[label] via log-sum-exp, stable for saturated logits
    total += std::log(denom) + mx - in[labels[i]];
  }
  nd.value = {total / static_cast<double>(m)};
  return push(std::move(nd));
}

Tensor Tape::gaussian_kl(const Tensor& mu, const Tensor& log_sigma) {
  check_same_shape(mu, log_sigma, "gaussian_kl");
  const Node& nm = node(mu);
  const Node& ns = node(log_sigma);
  std::size_t rows = shape_rows(nm.shape);
  std::size_t cols = shape_cols(nm.shape);
  Node nd;
  nd.op = Op::gaussian_kl;
  nd.in0 = mu.id();
  nd.in1 = log_sigma.id();
  nd.shape = {1};
  // mean over rows (tokens), sum over columns (dimensions)
  double total = 0.0;
  for (std::size_t i = 0; i < rows * cols; ++i) {
    double m = nm.value[i];
    double ls = ns.value[i];
    total += 0.5 * (m * m + std::exp(2.0 * ls) - 2.0 * ls - 1.0);
  }
  nd.value = {total / static_cast<double>(rows)};
  return push(std::move(nd));
}

Tensor Tape::gather_rows(const Tensor& table, const std::vector<std::size_t>& ids) {
  const Node& nt = node(table);
  if (nt.shape.size() != 2) throw DimensionError("gather_rows: rank-2 table required");
  if (ids.empty()) throw ContractError("gather_rows: at least one row id required");
  std::size_t v = nt.shape[0], d = nt.shape[1];
  for (std::size_t id : ids) {
    if (id >= v) {
      throw IndexError("gather_rows: row " + std::to_string(id) + " out of range [0, " +
                       std::to_string(v) + ")");
    }
  }
  Node nd;
  nd.op = Op::gather_rows;
  nd.in0 = table.id();
  nd.shape = {ids.size(), d};
  nd.indices = ids;
  nd.value.resize(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double* src = nt.value.data() + ids[i] * d;
    std::copy(src, src + d, nd.value.data() + i * d);
  }
  return push(std::move(nd));
}

void Tape::backward_node(int i, std::vector<std::vector<double>>& tg) {
  Node& nd = nodes_[static_cast<std::size_t>(i)];
  const std::vector<double>& g = tg[static_cast<std::size_t>(i)];
  auto touch = [&](int in) -> std::vector<double>& {
    auto& buf = tg[static_cast<std::size_t>(in)];
    if (buf.empty()) buf.assign(nodes_[static_cast<std::size_t>(in)].value.size(), 0.0);
    return buf;
  };
  switch (nd.op) {
    case Op::leaf:
      break;
    case Op::matmul: {
      const Node& na = nodes_[static_cast<std::size_t>(nd.in0)];
      const Node& nb = nodes_[static_cast<std::size_t>(nd.in1)];
      std::size_t m = na.shape[0], k = na.shape[1], n = nb.shape[1];
      auto& da = touch(nd.in0);
      auto& db = touch(nd.in1);
      // dA += G * B^T, dB += A^T * G
      for (std::size_t i2 = 0; i2 < m; ++i2) {
        for (std::size_t j = 0; j < n; ++j) {
          double gv = g[i2 * n + j];
          if (gv == 0.0) continue;
          const double* brow = nb.value.data() + j;  // column j of B, stride n
          for (std::size_t p = 0; p < k; ++p) da[i2 * k + p] += gv * brow[p * n];
        }
      }
      for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t i2 = 0; i2 < m; ++i2) {
          double av = na.value[i2 * k + p];
          if (av == 0.0) continue;
          const double* grow = g.data() + i2 * n;
          double* dbrow = db.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * grow[j];
        }
      }
      break;
    }
    case Op::transpose: {
      const Node& na = nodes_[static_cast<std::size_t>(nd.in0)];
      std::size_t m = na.shape[0], n = na.shape[1];
      auto& da = touch(nd.in0);
      for (std::size_t i2 = 0; i2 < m; ++i2)
        for (std::size_t j = 0; j < n; ++j) da[i2 * n + j] += g[j * m + i2];
      break;
    }
    case Op::add: {
      auto& da = touch(nd.in0);
      auto& db = touch(nd.in1);
      for (std::size_t i2 = 0; i2 < g.size(); ++i2) {
        da[i2] += g[i2];
        db[i2] += g[i2];
      }
      break;
    }
    case Op::sub: {
      auto& da = touch(nd.in0);
      auto& db = touch(nd.in1);
      for (std::size_t i2 = 0; i2 < g.size(); ++i2) {
        da[i2] += g[i2];
        db[i2] -= g[i2];
      }
      break;
    }
    case Op::mul: {
      const Node& na = nodes_[static_cast<std::size_t>(nd.in0)];
      const Node& nb = nodes_[static_cast<std::size_t>(nd.in1)];
      auto& da = touch(nd.in0);
      auto& db = touch(nd.in1);
      for (std::size_t i2 = 0; i2 < g.size(); ++i2) {
        da[i2] += g[i2] * nb.value[i2];
        db[i2] += g[i2] * na.value[i2];
      }
      break;
    }
    case Op::scale: {
      auto& da = touch(nd.in0);
      for (std::size_t i2 = 0; i2 < g.size(); ++i2) da[i2] += g[i2] * nd.c;
      break;
    }
    case Op::add_scalar: {
      auto& da = touch(nd.in0);
      for (std::size_t i2 = 0; i2 < g.size(); ++i2) da[i2] += g[i2];
      break;
    }
    case Op::add_rowvec: {
      const Node& nm = nodes_[static_cast<std::size_t>(nd.in0)];
      std::size_t rows = shape_rows(nm.shape), cols = shape_cols(nm.shape);
      auto& dm = touch(nd.in0);
      auto& dr = touch(nd.in1);
      for (std::size_t i2 = 0; i2 < rows; ++i2) {
        for (std::size_t j = 0; j < cols; ++j) {
          double gv = g[i2 * cols + j];
          dm[i2 * cols + j] += gv;
          dr[j] += gv;
        }
      }
      break;
    }
    case Op::tanh: {
      auto& da = touch(nd.in0);
      for (std::size_t i2 = 0; i2 < g.size(); ++i2) {
        double y = nd.value[i2];
        da[i2] += g[i2] * (1.0 - y * y);
      }
      break;
    }
    case Op::relu: {
      const Node& na = nodes_[static_cast<std::size_t>(nd.in0)];
      auto& da = touch(nd.in0);
      for (std::size_t i2 = 0; i2 < g.size(); ++i2) {
        if (na.value[i2] > 0.0) da[i2] += g[i2];
      }
      break;
    }
    case Op::exp: {
      auto& da = touch(nd.in0);
      for (std::size_t i2 = 0; i2 < g.size(); ++i2) da[i2] += g[i2] * nd.value[i2];
      break;
    }
    case Op::sum: {
      auto& da = touch(nd.in0);
      for (auto& v : da) v += g[0];
      break;
    }
    case Op::softmax_rows: {
      std::size_t rows = shape_rows(nd.shape), cols = shape_cols(nd.shape);
      auto& da = touch(nd.in0);
      for (std::size_t i2 = 0; i2 < rows; ++i2) {
        const double* y = nd.value.data() + i2 * cols;
        const double* gr = g.data() + i2 * cols;
        double dot = 0.0;
        for (std::size_t j = 0; j < cols; ++j) dot += y[j] * gr[j];
        for (std::size_t j = 0; j < cols; ++j) da[i2 * cols + j] += y[j] * (gr[j] - dot);
      }
      break;
    }
    case Op::cross_entropy: {
      const Node& nl = nodes_[static_cast<std::size_t>(nd.in0)];
      std::size_t m = shape_rows(nl.shape), c = shape_cols(nl.shape);
      auto& dl = touch(nd.in0);
      double gs = g[0] / static_cast<double>(m);
      for (std::size_t i2 = 0; i2 < m; ++i2) {
        const double* p = nd.aux.data() + i2 * c;
        for (std::size_t j = 0; j < c; ++j) {
          double delta = (j == nd.indices[i2]) ? 1.0 : 0.0;
          dl[i2 * c + j] += gs * (p[j] - delta);
        }
      }
      break;
    }
    case Op::gaussian_kl: {
      const Node& nm = nodes_[static_cast<std::size_t>(nd.in0)];
      const Node& ns = nodes_[static_cast<std::size_t>(nd.in1)];
      std::size_t rows = shape_rows(nm.shape);
      auto& dm = touch(nd.in0);
      auto& ds = touch(nd.in1);
      double gs = g[0] / static_cast<double>(rows);
      for (std::size_t i2 = 0; i2 < nm.value.size(); ++i2) {
        dm[i2] += gs * nm.value[i2];
        ds[i2] += gs * (std::exp(2.0 * ns.value[i2]) - 1.0);
      }
      break;
    }
    case Op::gather_rows: {
      const Node& nt = nodes_[static_cast<std::size_t>(nd.in0)];
      std::size_t d = nt.shape[1];
      auto& dt = touch(nd.in0);
      for (std::size_t i2 = 0; i2 < nd.indices.size(); ++i2) {
        const double* gr = g.data() + i2 * d;
        double* row = dt.data() + nd.indices[i2] * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += gr[j];
      }
      break;
    }
  }
}

void Tape::backward(const Tensor& root) {
  const Node& rn = node(root);
  if (rn.value.size() != 1) {
    throw ContractError("backward: root must be scalar, got shape " + shape_str(rn.shape));
  }
  int rid = root.id();
  // reachability over inputs so each node is visited at most once
  std::vector<char> reach(nodes_.size(), 0);
  std::vector<int> stack = {rid};
  reach[static_cast<std::size_t>(rid)] = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    const Node& nd = nodes_[static_cast<std::size_t>(i)];
    for (int in : {nd.in0, nd.in1}) {
      if (in >= 0 && !reach[static_cast<std::size_t>(in)]) {
        reach[static_cast<std::size_t>(in)] = 1;
        stack.push_back(in);
      }
    }
  }
  // fresh buffers per call; accumulated into persistent grads afterwards, so
  // repeated backward() calls add up exactly
  std::vector<std::vector<double>> tg(nodes_.size());
  tg[static_cast<std::size_t>(rid)] = {1.0};
  for (int i = rid; i >= 0; --i) {
    if (!reach[static_cast<std::size_t>(i)] || tg[static_cast<std::size_t>(i)].empty()) continue;
    backward_node(i, tg);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (tg[i].empty()) continue;
    Node& nd = nodes_[i];
    if (nd.grad.empty()) nd.grad.assign(nd.value.size(), 0.0);
    for (std::size_t j = 0; j < tg[i].size(); ++j) nd.grad[j] += tg[i][j];
  }
}

void Tape::zero_grad() {
  for (auto& nd : nodes_) nd.grad.clear();
}

}  // namespace ibg::ad
