#include "sdec/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdec {

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != rows * cols) {
    throw ShapeError("tensor", std::to_string(data.size()) + " values for shape " +
                                   std::to_string(rows) + "x" + std::to_string(cols));
  }
}

ShapeError::ShapeError(const std::string& op, const std::string& detail)
    : std::invalid_argument(op + ": shape mismatch: " + detail), op_(op) {}

NumericError::NumericError(const std::string& op, const std::string& detail)
    : std::runtime_error(op + ": " + detail), op_(op) {}

// ---------------------------------------------------------------------------
// Var

std::span<const double> Var::value() const { return tape_->node(id_).value; }
std::span<const double> Var::grad() const { return tape_->node(id_).grad; }
std::size_t Var::size() const { return tape_->node(id_).value.size(); }
std::size_t Var::rows() const { return tape_->node(id_).rows; }
std::size_t Var::cols() const { return tape_->node(id_).cols; }
bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

double Var::scalar() const {
  const auto& n = tape_->node(id_);
  if (n.value.size() != 1) {
    throw ShapeError("scalar", "node '" + std::string(n.op) + "' has " +
                                   std::to_string(n.value.size()) + " entries");
  }
  return n.value[0];
}

// ---------------------------------------------------------------------------
// Tape

namespace {

std::string shape_str(const Node& n) {
  return std::to_string(n.rows) + "x" + std::to_string(n.cols);
}

Node make_leaf(std::vector<double> values, std::size_t rows, std::size_t cols,
               bool requires_grad) {
  if (values.size() != rows * cols) {
    throw ShapeError("leaf", std::to_string(values.size()) + " values for shape " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
  }
  Node n;
  n.value = std::move(values);
  n.rows = rows;
  n.cols = cols;
  n.requires_grad = requires_grad;
  n.op = requires_grad ? "variable" : "constant";
  return n;
}

}  // namespace

Var Tape::constant(std::vector<double> values, std::size_t rows, std::size_t cols) {
  return push(make_leaf(std::move(values), rows, cols, false));
}

Var Tape::constant(std::initializer_list<double> values) {
  return constant(std::vector<double>(values), values.size(), 1);
}

Var Tape::constant(const Tensor& t) { return constant(t.data, t.rows, t.cols); }

Var Tape::variable(std::vector<double> values, std::size_t rows, std::size_t cols) {
  return push(make_leaf(std::move(values), rows, cols, true));
}

Var Tape::variable(std::initializer_list<double> values) {
  return variable(std::vector<double>(values), values.size(), 1);
}

Var Tape::variable(const Tensor& t) { return variable(t.data, t.rows, t.cols); }

Var Tape::push(Node&& n) {
  if (backward_done_) {
    throw TapeError("tape: cannot record '" + std::string(n.op) +
                    "' after backward; clear the tape first");
  }
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    if (!std::isfinite(n.value[i])) {
      std::ostringstream msg;
      msg << "non-finite result " << n.value[i] << " at entry " << i;
      throw NumericError(n.op, msg.str());
    }
  }
  if (!n.parents.empty()) {
    bool any = false;
    for (auto p : n.parents) any = any || nodes_[p].requires_grad;
    n.requires_grad = any;
    if (!any) n.backprop = nullptr;
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw TapeError("backward: root belongs to another tape");
  if (backward_done_) {
    throw TapeError("backward: tape already consumed; re-run the forward pass");
  }
  const auto root_id = root.id();
  if (nodes_[root_id].value.size() != 1) {
    throw TapeError("backward: root '" + std::string(nodes_[root_id].op) +
                    "' is not scalar (shape " + shape_str(nodes_[root_id]) + ")");
  }
  backward_done_ = true;

  std::vector<char> reachable(root_id + 1, 0);
  reachable[root_id] = 1;
  for (std::uint32_t id = root_id + 1; id-- > 0;) {
    if (!reachable[id]) continue;
    for (auto p : nodes_[id].parents) reachable[p] = 1;
  }
  for (auto& n : nodes_) n.grad.assign(n.value.size(), 0.0);
  nodes_[root_id].grad[0] = 1.0;

  for (std::uint32_t id = root_id + 1; id-- > 0;) {
    auto& n = nodes_[id];
    if (reachable[id] && n.requires_grad && n.backprop) n.backprop(*this, id);
  }
}

void Tape::clear() {
  nodes_.clear();
  backward_done_ = false;
}

// ---------------------------------------------------------------------------
// Ops

namespace ad {
namespace {

Tape& same_tape(const char* op, Var a, Var b) {
  if (!a.valid() || !b.valid()) throw TapeError(std::string(op) + ": invalid handle");
  if (a.tape() != b.tape()) throw TapeError(std::string(op) + ": operands on different tapes");
  return *a.tape();
}

Tape& tape_of(const char* op, Var a) {
  if (!a.valid()) throw TapeError(std::string(op) + ": invalid handle");
  return *a.tape();
}

void require_same_shape(const char* op, const Node& a, const Node& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ShapeError(op, shape_str(a) + " vs " + shape_str(b));
  }
}

void require_vector(const char* op, const Node& a) {
  if (a.cols != 1) throw ShapeError(op, "expected a vector, got " + shape_str(a));
}

Node result(const char* op, std::size_t rows, std::size_t cols,
            std::initializer_list<std::uint32_t> parents) {
  Node n;
  n.op = op;
  n.rows = rows;
  n.cols = cols;
  n.value.assign(rows * cols, 0.0);
  n.parents.assign(parents.begin(), parents.end());
  return n;
}

// Elementwise unary op where the local derivative is a function of input
// value x and output value y.
template <typename Fwd, typename Deriv>
Var unary(const char* op, Var a, Fwd fwd, Deriv deriv) {
  Tape& t = tape_of(op, a);
  const Node& an = t.node(a.id());
  Node n = result(op, an.rows, an.cols, {a.id()});
  for (std::size_t i = 0; i < an.value.size(); ++i) n.value[i] = fwd(an.value[i]);
  n.backprop = [deriv](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    Node& in = tp.node(out.parents[0]);
    if (!in.requires_grad) return;
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
      in.grad[i] += out.grad[i] * deriv(in.value[i], out.value[i]);
    }
  };
  return t.push(std::move(n));
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = same_tape("add", a, b);
  const Node& an = t.node(a.id());
  const Node& bn = t.node(b.id());
  require_same_shape("add", an, bn);
  Node n = result("add", an.rows, an.cols, {a.id(), b.id()});
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = an.value[i] + bn.value[i];
  n.backprop = [](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    for (auto p : out.parents) {
      Node& in = tp.node(p);
      if (!in.requires_grad) continue;
      for (std::size_t i = 0; i < out.grad.size(); ++i) in.grad[i] += out.grad[i];
    }
  };
  return t.push(std::move(n));
}

Var sub(Var a, Var b) {
  Tape& t = same_tape("sub", a, b);
  const Node& an = t.node(a.id());
  const Node& bn = t.node(b.id());
  require_same_shape("sub", an, bn);
  Node n = result("sub", an.rows, an.cols, {a.id(), b.id()});
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = an.value[i] - bn.value[i];
  n.backprop = [](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    Node& x = tp.node(out.parents[0]);
    Node& y = tp.node(out.parents[1]);
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
      if (x.requires_grad) x.grad[i] += out.grad[i];
      if (y.requires_grad) y.grad[i] -= out.grad[i];
    }
  };
  return t.push(std::move(n));
}

Var mul(Var a, Var b) {
  Tape& t = same_tape("mul", a, b);
  const Node& an = t.node(a.id());
  const Node& bn = t.node(b.id());
  require_same_shape("mul", an, bn);
  Node n = result("mul", an.rows, an.cols, {a.id(), b.id()});
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = an.value[i] * bn.value[i];
  n.backprop = [](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    Node& x = tp.node(out.parents[0]);
    Node& y = tp.node(out.parents[1]);
    // x and y may alias (x * x).
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
      const double g = out.grad[i];
      const double xv = x.value[i];
      const double yv = y.value[i];
      if (x.requires_grad) x.grad[i] += g * yv;
      if (y.requires_grad) y.grad[i] += g * xv;
    }
  };
  return t.push(std::move(n));
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double k) {
  return unary(
      "scale", a, [k](double x) { return k * x; }, [k](double, double) { return k; });
}

Var add_scalar(Var a, double k) {
  return unary(
      "add_scalar", a, [k](double x) { return x + k; }, [](double, double) { return 1.0; });
}

Var scale(Var a, Var k) {
  Tape& t = same_tape("scale", a, k);
  const Node& an = t.node(a.id());
  const Node& kn = t.node(k.id());
  if (kn.value.size() != 1) throw ShapeError("scale", "factor must be scalar, got " + shape_str(kn));
  Node n = result("scale", an.rows, an.cols, {a.id(), k.id()});
  const double kv = kn.value[0];
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = kv * an.value[i];
  n.backprop = [](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    Node& x = tp.node(out.parents[0]);
    Node& kk = tp.node(out.parents[1]);
    const double kv = kk.value[0];
    double gk = 0.0;
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
      gk += out.grad[i] * x.value[i];
      if (x.requires_grad) x.grad[i] += out.grad[i] * kv;
    }
    if (kk.requires_grad) kk.grad[0] += gk;
  };
  return t.push(std::move(n));
}

Var matvec(Var w, Var x) {
  Tape& t = same_tape("matvec", w, x);
  const Node& wn = t.node(w.id());
  const Node& xn = t.node(x.id());
  if (xn.cols != 1 || wn.cols != xn.rows) {
    throw ShapeError("matvec", shape_str(wn) + " times " + shape_str(xn));
  }
  const std::size_t r = wn.rows;
  const std::size_t c = wn.cols;
  Node n = result("matvec", r, 1, {w.id(), x.id()});
  for (std::size_t i = 0; i < r; ++i) {
    const double* wr = wn.value.data() + i * c;
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += wr[j] * xn.value[j];
    n.value[i] = acc;
  }
  n.backprop = [](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    Node& wm = tp.node(out.parents[0]);
    Node& xv = tp.node(out.parents[1]);
    const std::size_t r = wm.rows;
    const std::size_t c = wm.cols;
    for (std::size_t i = 0; i < r; ++i) {
      const double g = out.grad[i];
      if (g == 0.0) continue;
      if (wm.requires_grad) {
        double* gw = wm.grad.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) gw[j] += g * xv.value[j];
      }
      if (xv.requires_grad) {
        const double* wr = wm.value.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) xv.grad[j] += g * wr[j];
      }
    }
  };
  return t.push(std::move(n));
}

Var vecmat(Var x, Var w) {
  Tape& t = same_tape("vecmat", x, w);
  const Node& xn = t.node(x.id());
  const Node& wn = t.node(w.id());
  if (xn.cols != 1 || wn.rows != xn.rows) {
    throw ShapeError("vecmat", shape_str(xn) + "^T times " + shape_str(wn));
  }
  const std::size_t r = wn.rows;
  const std::size_t c = wn.cols;
  Node n = result("vecmat", c, 1, {x.id(), w.id()});
  for (std::size_t i = 0; i < r; ++i) {
    const double xi = xn.value[i];
    const double* wr = wn.value.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) n.value[j] += xi * wr[j];
  }
  n.backprop = [](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    Node& xv = tp.node(out.parents[0]);
    Node& wm = tp.node(out.parents[1]);
    const std::size_t r = wm.rows;
    const std::size_t c = wm.cols;
    for (std::size_t i = 0; i < r; ++i) {
      const double* wr = wm.value.data() + i * c;
      if (xv.requires_grad) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += out.grad[j] * wr[j];
        xv.grad[i] += acc;
      }
      if (wm.requires_grad) {
        double* gw = wm.grad.data() + i * c;
        const double xi = xv.value[i];
        for (std::size_t j = 0; j < c; ++j) gw[j] += xi * out.grad[j];
      }
    }
  };
  return t.push(std::move(n));
}

Var row(Var w, std::size_t r) {
  Tape& t = tape_of("row", w);
  const Node& wn = t.node(w.id());
  if (r >= wn.rows) {
    throw ShapeError("row", "index " + std::to_string(r) + " out of range for " + shape_str(wn));
  }
  const std::size_t c = wn.cols;
  Node n = result("row", c, 1, {w.id()});
  std::copy_n(wn.value.begin() + static_cast<std::ptrdiff_t>(r * c), c, n.value.begin());
  n.backprop = [r](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    Node& wm = tp.node(out.parents[0]);
    double* gw = wm.grad.data() + r * wm.cols;
    for (std::size_t j = 0; j < out.grad.size(); ++j) gw[j] += out.grad[j];
  };
  return t.push(std::move(n));
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  Tape& t = tape_of("log", a);
  for (double v : t.node(a.id()).value) {
    if (!(v > 0.0)) throw NumericError("log", "argument " + std::to_string(v) + " is not positive");
  }
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var softmax(Var a) {
  Tape& t = tape_of("softmax", a);
  const Node& an = t.node(a.id());
  require_vector("softmax", an);
  if (an.value.empty()) throw ShapeError("softmax", "empty input");
  Node n = result("softmax", an.rows, 1, {a.id()});
  const double mx = *std::max_element(an.value.begin(), an.value.end());
  double z = 0.0;
  for (std::size_t i = 0; i < an.value.size(); ++i) {
    n.value[i] = std::exp(an.value[i] - mx);
    z += n.value[i];
  }
  for (auto& v : n.value) v /= z;
  n.backprop = [](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    Node& in = tp.node(out.parents[0]);
    double inner = 0.0;
    for (std::size_t i = 0; i < out.grad.size(); ++i) inner += out.grad[i] * out.value[i];
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
      in.grad[i] += out.value[i] * (out.grad[i] - inner);
    }
  };
  return t.push(std::move(n));
}

Var log_sum_exp(Var a) {
  Tape& t = tape_of("log_sum_exp", a);
  const Node& an = t.node(a.id());
  if (an.value.empty()) throw ShapeError("log_sum_exp", "empty input");
  Node n = result("log_sum_exp", 1, 1, {a.id()});
  const double mx = *std::max_element(an.value.begin(), an.value.end());
  double z = 0.0;
  for (double v : an.value) z += std::exp(v - mx);
  n.value[0] = mx + std::log(z);
  n.backprop = [](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    Node& in = tp.node(out.parents[0]);
    const double g = out.grad[0];
    const double lse = out.value[0];
    for (std::size_t i = 0; i < in.value.size(); ++i) in.grad[i] += g * std::exp(in.value[i] - lse);
  };
  return t.push(std::move(n));
}

Var sum(Var a) {
  Tape& t = tape_of("sum", a);
  const Node& an = t.node(a.id());
  Node n = result("sum", 1, 1, {a.id()});
  double acc = 0.0;
  for (double v : an.value) acc += v;
  n.value[0] = acc;
  n.backprop = [](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    Node& in = tp.node(out.parents[0]);
    for (auto& g : in.grad) g += out.grad[0];
  };
  return t.push(std::move(n));
}

Var dot(Var a, Var b) {
  Tape& t = same_tape("dot", a, b);
  const Node& an = t.node(a.id());
  const Node& bn = t.node(b.id());
  require_same_shape("dot", an, bn);
  Node n = result("dot", 1, 1, {a.id(), b.id()});
  double acc = 0.0;
  for (std::size_t i = 0; i < an.value.size(); ++i) acc += an.value[i] * bn.value[i];
  n.value[0] = acc;
  n.backprop = [](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    Node& x = tp.node(out.parents[0]);
    Node& y = tp.node(out.parents[1]);
    const double g = out.grad[0];
    for (std::size_t i = 0; i < x.value.size(); ++i) {
      const double xv = x.value[i];
      const double yv = y.value[i];
      if (x.requires_grad) x.grad[i] += g * yv;
      if (y.requires_grad) y.grad[i] += g * xv;
    }
  };
  return t.push(std::move(n));
}

Var pick(Var a, std::size_t i) {
  Tape& t = tape_of("pick", a);
  const Node& an = t.node(a.id());
  if (i >= an.value.size()) {
    throw ShapeError("pick", "index " + std::to_string(i) + " out of range for " + shape_str(an));
  }
  Node n = result("pick", 1, 1, {a.id()});
  n.value[0] = an.value[i];
  n.backprop = [i](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    tp.node(out.parents[0]).grad[i] += out.grad[0];
  };
  return t.push(std::move(n));
}

Var slice(Var a, std::size_t offset, std::size_t length) {
  Tape& t = tape_of("slice", a);
  const Node& an = t.node(a.id());
  require_vector("slice", an);
  if (offset + length > an.rows) {
    throw ShapeError("slice", "[" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                                  ") of " + shape_str(an));
  }
  Node n = result("slice", length, 1, {a.id()});
  std::copy_n(an.value.begin() + static_cast<std::ptrdiff_t>(offset), length, n.value.begin());
  n.backprop = [offset](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    Node& in = tp.node(out.parents[0]);
    for (std::size_t i = 0; i < out.grad.size(); ++i) in.grad[offset + i] += out.grad[i];
  };
  return t.push(std::move(n));
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat", "no inputs");
  Tape& t = tape_of("concat", parts[0]);
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.tape() != &t) throw TapeError("concat: operands on different tapes");
    require_vector("concat", t.node(p.id()));
    total += p.size();
  }
  Node n = result("concat", total, 1, {});
  std::size_t at = 0;
  for (const auto& p : parts) {
    const auto& v = t.node(p.id()).value;
    std::copy(v.begin(), v.end(), n.value.begin() + static_cast<std::ptrdiff_t>(at));
    at += v.size();
    n.parents.push_back(p.id());
  }
  n.backprop = [](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    std::size_t at = 0;
    for (auto pid : out.parents) {
      Node& in = tp.node(pid);
      if (in.requires_grad) {
        for (std::size_t i = 0; i < in.value.size(); ++i) in.grad[i] += out.grad[at + i];
      }
      at += in.value.size();
    }
  };
  return t.push(std::move(n));
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var stack(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack", "no inputs");
  Tape& t = tape_of("stack", rows[0]);
  const std::size_t c = rows[0].size();
  for (const auto& r : rows) {
    if (r.tape() != &t) throw TapeError("stack: operands on different tapes");
    const Node& rn = t.node(r.id());
    require_vector("stack", rn);
    if (rn.value.size() != c) {
      throw ShapeError("stack", "row of length " + std::to_string(rn.value.size()) +
                                    " vs " + std::to_string(c));
    }
  }
  Node n = result("stack", rows.size(), c, {});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& v = t.node(rows[i].id()).value;
    std::copy(v.begin(), v.end(), n.value.begin() + static_cast<std::ptrdiff_t>(i * c));
    n.parents.push_back(rows[i].id());
  }
  n.backprop = [](Tape& tp, std::uint32_t self) {
    Node& out = tp.node(self);
    const std::size_t c = out.cols;
    for (std::size_t i = 0; i < out.parents.size(); ++i) {
      Node& in = tp.node(out.parents[i]);
      if (!in.requires_grad) continue;
      for (std::size_t j = 0; j < c; ++j) in.grad[j] += out.grad[i * c + j];
    }
  };
  return t.push(std::move(n));
}

Var stop_gradient(Var a) {
  Tape& t = tape_of("stop_gradient", a);
  const Node& an = t.node(a.id());
  return t.constant(an.value, an.rows, an.cols);
}

}  // namespace ad

// ---------------------------------------------------------------------------

std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_difference_gradient: step must be > 0");
  std::vector<double> x(theta.begin(), theta.end());
  std::vector<double> g(x.size(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double saved = x[j];
    x[j] = saved + step;
    const double up = f(x);
    x[j] = saved - step;
    const double down = f(x);
    x[j] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_difference",
                         "non-finite evaluation at coordinate " + std::to_string(j));
    }
    g[j] = (up - down) / (2.0 * step);
  }
  return g;
}

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

}  // namespace sdec
