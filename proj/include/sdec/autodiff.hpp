#pragma once

// Reverse-mode differentiation over dense double vectors and matrices.
//
// A Tape records every node created during one forward pass. Nodes are
// appended in creation order, so parents always precede children and a
// reverse sweep over indices is a valid reverse topological order.
// Matrices are stored row-major; a vector is a matrix with one column.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdec {

/// Dense row-major array with an explicit shape. Used for model parameters
/// that live outside a tape.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 1;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Tensor(std::size_t r, std::size_t c, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool operator==(const Tensor&) const = default;
};

class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string& op, const std::string& detail);
  const std::string& op() const { return op_; }

 private:
  std::string op_;
};

class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& op, const std::string& detail);
  const std::string& op() const { return op_; }

 private:
  std::string op_;
};

/// Misuse of a tape: backward twice, non-scalar root, stale handle.
class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid until the tape is cleared.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  std::span<const double> value() const;
  std::span<const double> grad() const;
  double scalar() const;
  std::size_t size() const;
  std::size_t rows() const;
  std::size_t cols() const;
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

struct Node {
  std::vector<double> value;
  std::vector<double> grad;
  std::size_t rows = 0;
  std::size_t cols = 1;
  std::vector<std::uint32_t> parents;
  const char* op = "leaf";
  bool requires_grad = false;
  // Adds this node's adjoint into its parents' adjoints.
  std::function<void(Tape&, std::uint32_t)> backprop;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(std::vector<double> values, std::size_t rows, std::size_t cols = 1);
  Var constant(std::initializer_list<double> values);
  Var constant(const Tensor& t);
  Var scalar(double v) { return constant({v}); }

  /// Leaf that receives a gradient on backward.
  Var variable(std::vector<double> values, std::size_t rows, std::size_t cols = 1);
  Var variable(std::initializer_list<double> values);
  Var variable(const Tensor& t);

  /// Fills grad of every node reachable from `root`. The root must be a
  /// scalar. A tape supports exactly one backward pass per forward.
  void backward(Var root);

  /// Frees all nodes and re-arms the tape for a new forward pass.
  void clear();

  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

  Node& node(std::uint32_t id) { return nodes_[id]; }
  const Node& node(std::uint32_t id) const { return nodes_[id]; }

  /// Appends an op result. Validates finiteness and drops the backprop
  /// closure when no parent requires a gradient.
  Var push(Node&& n);

 private:
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

namespace ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var neg(Var a);
Var scale(Var a, double k);
Var scale(Var a, Var k);  // k is a scalar node
Var add_scalar(Var a, double k);

/// W (r x c) times x (c) -> r.
Var matvec(Var w, Var x);
/// x (r) times W (r x c) -> c, i.e. W^T x.
Var vecmat(Var x, Var w);
/// Row `r` of matrix W as a vector.
Var row(Var w, std::size_t r);

Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var softmax(Var a);
Var log_sum_exp(Var a);

Var sum(Var a);
Var dot(Var a, Var b);
Var pick(Var a, std::size_t i);
Var slice(Var a, std::size_t offset, std::size_t length);
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
/// Stacks equal-length vectors as the rows of a matrix.
Var stack(std::span<const Var> rows);

/// Copy of `a` that blocks gradient flow.
Var stop_gradient(Var a);

}  // namespace ad

inline Var operator+(Var a, Var b) { return ad::add(a, b); }
inline Var operator-(Var a, Var b) { return ad::sub(a, b); }
inline Var operator*(Var a, Var b) { return ad::mul(a, b); }

/// Central-difference estimate of the gradient of `f` at `theta`.
std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double step);

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor);

}  // namespace sdec
