#include "textmatch/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "textmatch/errors.hpp"

namespace textmatch {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kConstant: return "constant";
    case Op::kParameter: return "parameter";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kMatMul: return "matmul";
    case Op::kGatherRows: return "gather_rows";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
    case Op::kSigmoid: return "sigmoid";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSoftmaxRows: return "softmax_rows";
    case Op::kSumAxis: return "sum_axis";
    case Op::kMeanAxis: return "mean_axis";
    case Op::kConcatAxis: return "concat_axis";
    case Op::kScale: return "scale";
    case Op::kClampMin: return "clamp_min";
    case Op::kL2NormalizeRows: return "l2_normalize_rows";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// ParameterSet

Parameter& ParameterSet::add(std::string name, Tensor tensor, bool trainable) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  params_.push_back(Parameter{std::move(name), std::move(tensor), trainable});
  return params_.back();
}

Parameter& ParameterSet::at(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

const Parameter& ParameterSet::at(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

bool ParameterSet::contains(std::string_view name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Parameter& p) { return p.name == name; });
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

// ---------------------------------------------------------------------------
// Graph construction

NodeId Graph::push(Node node) {
  for (auto parent : node.parents) check_id(NodeId{parent});
  nodes_.push_back(std::move(node));
  evaluated_ = false;
  return NodeId{nodes_.size() - 1};
}

void Graph::check_id(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw ShapeError("node id " + std::to_string(id.index) + " does not belong to this graph");
  }
}

NodeId Graph::input(std::string name) {
  Node n(Op::kInput, {});
  n.name = std::move(name);
  return push(std::move(n));
}

NodeId Graph::constant(Tensor value) {
  Node n(Op::kConstant, {});
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::parameter(Parameter& param) {
  Node n(Op::kParameter, {});
  n.param = &param;
  n.name = param.name;
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) { return push(Node(Op::kAdd, {a.index, b.index})); }
NodeId Graph::sub(NodeId a, NodeId b) { return push(Node(Op::kSub, {a.index, b.index})); }
NodeId Graph::mul(NodeId a, NodeId b) { return push(Node(Op::kMul, {a.index, b.index})); }

NodeId Graph::matmul(NodeId a, NodeId b, bool transpose_b) {
  Node n(Op::kMatMul, {a.index, b.index});
  n.transpose_b = transpose_b;
  return push(std::move(n));
}

NodeId Graph::gather_rows(NodeId table, std::vector<std::size_t> rows) {
  Node n(Op::kGatherRows, {table.index});
  n.rows = std::move(rows);
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId x) { return push(Node(Op::kTanh, {x.index})); }
NodeId Graph::relu(NodeId x) { return push(Node(Op::kRelu, {x.index})); }
NodeId Graph::sigmoid(NodeId x) { return push(Node(Op::kSigmoid, {x.index})); }
NodeId Graph::exp(NodeId x) { return push(Node(Op::kExp, {x.index})); }
NodeId Graph::log(NodeId x) { return push(Node(Op::kLog, {x.index})); }
NodeId Graph::softmax_rows(NodeId x) { return push(Node(Op::kSoftmaxRows, {x.index})); }

NodeId Graph::sum_axis(NodeId x, std::size_t axis) {
  Node n(Op::kSumAxis, {x.index});
  n.axis = axis;
  return push(std::move(n));
}

NodeId Graph::mean_axis(NodeId x, std::size_t axis) {
  Node n(Op::kMeanAxis, {x.index});
  n.axis = axis;
  return push(std::move(n));
}

NodeId Graph::concat_axis(std::vector<NodeId> parts, std::size_t axis) {
  Node n(Op::kConcatAxis, {});
  for (auto p : parts) n.parents.push_back(p.index);
  n.axis = axis;
  return push(std::move(n));
}

NodeId Graph::scale(NodeId x, double factor) {
  Node n(Op::kScale, {x.index});
  n.scalar = factor;
  return push(std::move(n));
}

NodeId Graph::clamp_min(NodeId x, double floor) {
  Node n(Op::kClampMin, {x.index});
  n.scalar = floor;
  return push(std::move(n));
}

NodeId Graph::l2_normalize_rows(NodeId x) {
  return push(Node(Op::kL2NormalizeRows, {x.index}));
}

// ---------------------------------------------------------------------------
// Forward

void Graph::fail_shape(std::size_t index, const std::string& what) const {
  throw ShapeError("node " + std::to_string(index) + " (" +
                   std::string(op_name(nodes_[index].op)) + "): " + what);
}

namespace {

Tensor map_unary(const Tensor& x, double (*fn)(double)) {
  Tensor out = x;
  for (auto& v : out.data()) v = fn(v);
  return out;
}

double sigmoid_scalar(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

Shape as_matrix(const Tensor& t) { return Shape{t.rows(), t.cols()}; }

}  // namespace

Tensor Graph::forward(std::size_t index, const Bindings& bindings) const {
  const Node& node = nodes_[index];
  auto in = [&](std::size_t k) -> const Tensor& { return nodes_[node.parents[k]].value; };
  auto require_matrix = [&](const Tensor& t) {
    if (t.rank() > 2) fail_shape(index, "expected a matrix, got " + shape_string(t.shape()));
  };

  switch (node.op) {
    case Op::kInput: {
      auto it = bindings.find(node.name);
      if (it == bindings.end()) fail_shape(index, "input '" + node.name + "' is not bound");
      return it->second;
    }
    case Op::kConstant:
      return node.value;
    case Op::kParameter:
      return node.param->tensor;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (a.shape() != b.shape()) {
        fail_shape(index, "operands must share a shape, expected " + shape_string(a.shape()) +
                              " got " + shape_string(b.shape()));
      }
      Tensor out = a;
      auto o = out.data();
      auto bv = b.data();
      for (std::size_t i = 0; i < o.size(); ++i) {
        if (node.op == Op::kAdd) o[i] += bv[i];
        else if (node.op == Op::kSub) o[i] -= bv[i];
        else o[i] *= bv[i];
      }
      return out;
    }
    case Op::kMatMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      require_matrix(a);
      require_matrix(b);
      const std::size_t n = a.rows(), k = a.cols();
      const std::size_t bk = node.transpose_b ? b.cols() : b.rows();
      const std::size_t m = node.transpose_b ? b.rows() : b.cols();
      if (k != bk) {
        fail_shape(index, "inner dimensions differ: " + shape_string(as_matrix(a)) +
                              (node.transpose_b ? " x transpose " : " x ") +
                              shape_string(as_matrix(b)));
      }
      Tensor out({n, m});
      if (node.transpose_b) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a.at(i, t) * b.at(j, t);
            out.at(i, j) = acc;
          }
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t t = 0; t < k; ++t) {
            const double av = a.at(i, t);
            if (av == 0.0) continue;  // word-hashing inputs are mostly zeros
            const double* brow = b.data().data() + t * m;
            double* orow = out.data().data() + i * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
          }
        }
      }
      return out;
    }
    case Op::kGatherRows: {
      const Tensor& table = in(0);
      require_matrix(table);
      if (node.rows.empty()) fail_shape(index, "no rows requested");
      const std::size_t c = table.cols();
      std::vector<double> data;
      data.reserve(node.rows.size() * c);
      for (auto r : node.rows) {
        if (r >= table.rows()) {
          fail_shape(index, "row " + std::to_string(r) + " out of range for table " +
                                shape_string(as_matrix(table)));
        }
        auto span = table.row_span(r);
        data.insert(data.end(), span.begin(), span.end());
      }
      return Tensor({node.rows.size(), c}, std::move(data));
    }
    case Op::kTanh:
      return map_unary(in(0), [](double v) { return std::tanh(v); });
    case Op::kRelu:
      return map_unary(in(0), [](double v) { return v > 0.0 ? v : 0.0; });
    case Op::kSigmoid:
      return map_unary(in(0), sigmoid_scalar);
    case Op::kExp:
      return map_unary(in(0), [](double v) { return std::exp(v); });
    case Op::kLog: {
      const Tensor& x = in(0);
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0)) {
          std::ostringstream msg;
          msg << "node " << index << " (log): input " << x[i] << " at element " << i
              << " is outside (0, inf)";
          throw DomainError(msg.str());
        }
      }
      return map_unary(x, [](double v) { return std::log(v); });
    }
    case Op::kSoftmaxRows: {
      const Tensor& x = in(0);
      require_matrix(x);
      Tensor out(as_matrix(x));
      for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row_span(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) {
          out.at(r, c) = std::exp(row[c] - mx);
          total += out.at(r, c);
        }
        for (std::size_t c = 0; c < row.size(); ++c) out.at(r, c) /= total;
      }
      return out;
    }
    case Op::kSumAxis:
    case Op::kMeanAxis: {
      const Tensor& x = in(0);
      require_matrix(x);
      if (node.axis > 1) fail_shape(index, "axis must be 0 or 1");
      const std::size_t n = x.rows(), m = x.cols();
      Tensor out(node.axis == 0 ? Shape{1, m} : Shape{n, 1});
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          out[node.axis == 0 ? j : i] += x.at(i, j);
        }
      }
      if (node.op == Op::kMeanAxis) {
        const double extent = static_cast<double>(node.axis == 0 ? n : m);
        for (auto& v : out.data()) v /= extent;
      }
      return out;
    }
    case Op::kConcatAxis: {
      if (node.parents.empty()) fail_shape(index, "nothing to concatenate");
      if (node.axis > 1) fail_shape(index, "axis must be 0 or 1");
      const Tensor& first = in(0);
      require_matrix(first);
      std::size_t rows = 0, cols = 0;
      for (std::size_t k = 0; k < node.parents.size(); ++k) {
        const Tensor& t = in(k);
        require_matrix(t);
        const std::size_t kept = node.axis == 0 ? t.cols() : t.rows();
        const std::size_t expected = node.axis == 0 ? first.cols() : first.rows();
        if (kept != expected) {
          fail_shape(index, "part " + std::to_string(k) + " has shape " +
                                shape_string(as_matrix(t)) + ", expected " +
                                (node.axis == 0 ? "cols " : "rows ") + std::to_string(expected));
        }
        if (node.axis == 0) rows += t.rows();
        else cols += t.cols();
      }
      if (node.axis == 0) cols = first.cols();
      else rows = first.rows();
      Tensor out({rows, cols});
      std::size_t offset = 0;
      for (std::size_t k = 0; k < node.parents.size(); ++k) {
        const Tensor& t = in(k);
        for (std::size_t i = 0; i < t.rows(); ++i) {
          for (std::size_t j = 0; j < t.cols(); ++j) {
            if (node.axis == 0) out.at(offset + i, j) = t.at(i, j);
            else out.at(i, offset + j) = t.at(i, j);
          }
        }
        offset += node.axis == 0 ? t.rows() : t.cols();
      }
      return out;
    }
    case Op::kScale: {
      Tensor out = in(0);
      for (auto& v : out.data()) v *= node.scalar;
      return out;
    }
    case Op::kClampMin: {
      Tensor out = in(0);
      for (auto& v : out.data()) v = std::max(v, node.scalar);
      return out;
    }
    case Op::kL2NormalizeRows: {
      const Tensor& x = in(0);
      require_matrix(x);
      Tensor out(as_matrix(x));
      for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row_span(r);
        double sq = 0.0;
        for (double v : row) sq += v * v;
        if (sq == 0.0) continue;  // zero rows stay zero
        const double norm = std::sqrt(sq);
        for (std::size_t c = 0; c < row.size(); ++c) out.at(r, c) = row[c] / norm;
      }
      return out;
    }
  }
  fail_shape(index, "unsupported primitive");
}

void Graph::evaluate(const Bindings& bindings) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].op == Op::kConstant) continue;
    nodes_[i].value = forward(i, bindings);
  }
  evaluated_ = true;
}

const Tensor& Graph::value(NodeId id) const {
  check_id(id);
  if (!evaluated_) throw Error("graph has not been evaluated");
  return nodes_[id.index].value;
}

// ---------------------------------------------------------------------------
// Backward

Tensor& Graph::grad_slot(std::size_t index) {
  Node& n = nodes_[index];
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Graph::propagate(std::size_t index, const std::vector<char>& needs_grad) {
  const Node& node = nodes_[index];
  const Tensor& g = node.grad;
  const Tensor& y = node.value;
  auto wants = [&](std::size_t k) { return needs_grad[node.parents[k]] != 0; };
  auto parent_value = [&](std::size_t k) -> const Tensor& { return nodes_[node.parents[k]].value; };

  switch (node.op) {
    case Op::kInput:
    case Op::kConstant:
    case Op::kParameter:
      return;
    case Op::kAdd:
    case Op::kSub: {
      if (wants(0)) {
        auto ga = grad_slot(node.parents[0]).data();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
      }
      if (wants(1)) {
        auto gb = grad_slot(node.parents[1]).data();
        const double sign = node.op == Op::kAdd ? 1.0 : -1.0;
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += sign * g[i];
      }
      return;
    }
    case Op::kMul: {
      const Tensor& a = parent_value(0);
      const Tensor& b = parent_value(1);
      if (wants(0)) {
        auto ga = grad_slot(node.parents[0]).data();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * b[i];
      }
      if (wants(1)) {
        auto gb = grad_slot(node.parents[1]).data();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * a[i];
      }
      return;
    }
    case Op::kMatMul: {
      const Tensor& a = parent_value(0);
      const Tensor& b = parent_value(1);
      const std::size_t n = a.rows(), k = a.cols(), m = y.cols();
      if (wants(0)) {
        Tensor& ga = grad_slot(node.parents[0]);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            const double gij = g.at(i, j);
            if (gij == 0.0) continue;
            for (std::size_t t = 0; t < k; ++t) {
              ga.at(i, t) += gij * (node.transpose_b ? b.at(j, t) : b.at(t, j));
            }
          }
        }
      }
      if (wants(1)) {
        Tensor& gb = grad_slot(node.parents[1]);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t t = 0; t < k; ++t) {
            const double av = a.at(i, t);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) {
              if (node.transpose_b) gb.at(j, t) += g.at(i, j) * av;
              else gb.at(t, j) += av * g.at(i, j);
            }
          }
        }
      }
      return;
    }
    case Op::kGatherRows: {
      if (!wants(0)) return;
      Tensor& gt = grad_slot(node.parents[0]);
      const std::size_t c = y.cols();
      for (std::size_t r = 0; r < node.rows.size(); ++r) {
        for (std::size_t j = 0; j < c; ++j) gt.at(node.rows[r], j) += g.at(r, j);
      }
      return;
    }
    case Op::kTanh:
    case Op::kSigmoid:
    case Op::kExp:
    case Op::kRelu:
    case Op::kLog:
    case Op::kScale:
    case Op::kClampMin: {
      if (!wants(0)) return;
      const Tensor& x = parent_value(0);
      auto gx = grad_slot(node.parents[0]).data();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        double d = 0.0;
        switch (node.op) {
          case Op::kTanh: d = 1.0 - y[i] * y[i]; break;
          case Op::kSigmoid: d = y[i] * (1.0 - y[i]); break;
          case Op::kExp: d = y[i]; break;
          case Op::kRelu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
          case Op::kLog: d = 1.0 / x[i]; break;
          case Op::kScale: d = node.scalar; break;
          case Op::kClampMin: d = x[i] > node.scalar ? 1.0 : 0.0; break;
          default: break;
        }
        gx[i] += g[i] * d;
      }
      return;
    }
    case Op::kSoftmaxRows: {
      if (!wants(0)) return;
      Tensor& gx = grad_slot(node.parents[0]);
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) dot += g.at(r, c) * y.at(r, c);
        for (std::size_t c = 0; c < y.cols(); ++c) gx.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
      }
      return;
    }
    case Op::kSumAxis:
    case Op::kMeanAxis: {
      if (!wants(0)) return;
      Tensor& gx = grad_slot(node.parents[0]);
      const std::size_t n = gx.rows(), m = gx.cols();
      double factor = 1.0;
      if (node.op == Op::kMeanAxis) factor = 1.0 / static_cast<double>(node.axis == 0 ? n : m);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) gx.at(i, j) += factor * g[node.axis == 0 ? j : i];
      }
      return;
    }
    case Op::kConcatAxis: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < node.parents.size(); ++k) {
        const Tensor& part = parent_value(k);
        if (wants(k)) {
          Tensor& gp = grad_slot(node.parents[k]);
          for (std::size_t i = 0; i < part.rows(); ++i) {
            for (std::size_t j = 0; j < part.cols(); ++j) {
              gp.at(i, j) += node.axis == 0 ? g.at(offset + i, j) : g.at(i, offset + j);
            }
          }
        }
        offset += node.axis == 0 ? part.rows() : part.cols();
      }
      return;
    }
    case Op::kL2NormalizeRows: {
      if (!wants(0)) return;
      const Tensor& x = parent_value(0);
      Tensor& gx = grad_slot(node.parents[0]);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row_span(r);
        double sq = 0.0;
        for (double v : row) sq += v * v;
        if (sq == 0.0) continue;
        const double norm = std::sqrt(sq);
        double dot = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) dot += g.at(r, c) * y.at(r, c);
        for (std::size_t c = 0; c < row.size(); ++c) {
          gx.at(r, c) += (g.at(r, c) - y.at(r, c) * dot) / norm;
        }
      }
      return;
    }
  }
}

Gradients Graph::backward(NodeId output) {
  check_id(output);
  if (!evaluated_) throw Error("backward requires a prior evaluate");
  const Tensor& out = nodes_[output.index].value;
  if (out.size() != 1) {
    throw ShapeError("backward needs a single-value output, node " +
                     std::to_string(output.index) + " has shape " + shape_string(out.shape()));
  }

  std::vector<char> needs_grad(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    n.grad = Tensor();
    if (n.op == Op::kInput) needs_grad[i] = 1;
    else if (n.op == Op::kParameter) needs_grad[i] = n.param->trainable ? 1 : 0;
    else {
      for (auto p : n.parents) needs_grad[i] = needs_grad[i] || needs_grad[p];
    }
  }

  grad_slot(output.index)[0] = 1.0;
  for (std::size_t i = output.index + 1; i-- > 0;) {
    if (nodes_[i].grad.empty() || !needs_grad[i]) continue;
    propagate(i, needs_grad);
  }

  Gradients grads;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.op != Op::kParameter || !n.param->trainable) continue;
    auto [it, inserted] = grads.try_emplace(n.param->name, n.value.shape(), 0.0);
    if (n.grad.empty()) continue;
    auto dst = it->second.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
  }
  return grads;
}

const Tensor& Graph::grad(NodeId id) const {
  check_id(id);
  const Node& n = nodes_[id.index];
  if (n.grad.empty()) {
    // Nodes the output never reached have a zero adjoint.
    const_cast<Node&>(n).grad = Tensor(n.value.shape(), 0.0);
  }
  return n.grad;
}

std::vector<NodeId> Graph::inputs() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].op == Op::kInput) out.push_back(NodeId{i});
  }
  return out;
}

std::vector<NodeId> Graph::parameters() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].op == Op::kParameter) out.push_back(NodeId{i});
  }
  return out;
}

const std::string& Graph::input_name(NodeId id) const {
  check_id(id);
  return nodes_[id.index].name;
}

Parameter& Graph::parameter_ref(NodeId id) const {
  check_id(id);
  if (nodes_[id.index].param == nullptr) throw Error("node is not a parameter");
  return *nodes_[id.index].param;
}

std::vector<double> Graph::kink_offsets() const {
  std::vector<double> out;
  for (const auto& n : nodes_) {
    if (n.op != Op::kRelu && n.op != Op::kClampMin) continue;
    const Tensor& x = nodes_[n.parents[0]].value;
    const double floor = n.op == Op::kRelu ? 0.0 : n.scalar;
    for (double v : x.data()) out.push_back(v - floor);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite-difference check

namespace {

int side(double offset) { return offset > 0.0 ? 1 : (offset < 0.0 ? -1 : 0); }

// A coordinate is unreliable when a perturbation moves any kink input across
// (or onto) its kink, or when a kink input sits exactly on the kink at the
// base point and the perturbation moves it.
bool crosses_kink(const std::vector<double>& base, const std::vector<double>& plus,
                  const std::vector<double>& minus) {
  for (std::size_t i = 0; i < base.size(); ++i) {
    const int s = side(base[i]);
    if (side(plus[i]) != s || side(minus[i]) != s) return true;
    if (s == 0 && plus[i] != minus[i]) return true;
  }
  return false;
}

}  // namespace

GradCheckResult grad_check(Graph& graph, NodeId output, const Bindings& point, double step) {
  if (!(step > 0.0)) throw ConfigError("grad_check step must be positive");
  GradCheckResult result;

  graph.evaluate(point);
  graph.backward(output);
  const std::vector<double> base_kinks = graph.kink_offsets();

  auto evaluate_at = [&](const Bindings& b, std::vector<double>& kinks) {
    graph.evaluate(b);
    kinks = graph.kink_offsets();
    return graph.value(output).item();
  };

  auto record = [&](const std::string& label, std::size_t k, double analytic, double plus,
                    double minus, const std::vector<double>& kp, const std::vector<double>& km) {
    if (crosses_kink(base_kinks, kp, km)) {
      result.excluded.push_back(label + "[" + std::to_string(k) + "]");
      return;
    }
    const double numeric = (plus - minus) / (2.0 * step);
    const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
    result.max_relative_error = std::max(result.max_relative_error, err);
    ++result.checked;
  };

  // Analytic gradients per input name (a name may feed several nodes).
  std::map<std::string, Tensor, std::less<>> input_grads;
  for (NodeId id : graph.inputs()) {
    const Tensor& g = graph.grad(id);
    auto [it, inserted] = input_grads.try_emplace(graph.input_name(id), g.shape(), 0.0);
    for (std::size_t k = 0; k < g.size(); ++k) it->second[k] += g[k];
  }
  std::vector<std::pair<Parameter*, Tensor>> param_grads;
  for (NodeId id : graph.parameters()) {
    Parameter& p = graph.parameter_ref(id);
    if (!p.trainable) continue;
    auto it = std::find_if(param_grads.begin(), param_grads.end(),
                           [&](const auto& e) { return e.first == &p; });
    if (it == param_grads.end()) {
      param_grads.emplace_back(&p, Tensor(p.tensor.shape(), 0.0));
      it = std::prev(param_grads.end());
    }
    const Tensor& g = graph.grad(id);
    for (std::size_t k = 0; k < g.size(); ++k) it->second[k] += g[k];
  }

  std::vector<double> kp, km;
  for (const auto& [name, analytic] : input_grads) {
    Bindings shifted = point;
    Tensor& x = shifted.at(name);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double orig = x[k];
      x[k] = orig + step;
      const double plus = evaluate_at(shifted, kp);
      x[k] = orig - step;
      const double minus = evaluate_at(shifted, km);
      x[k] = orig;
      record(name, k, analytic[k], plus, minus, kp, km);
    }
  }
  for (auto& [param, analytic] : param_grads) {
    Tensor& x = param->tensor;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double orig = x[k];
      x[k] = orig + step;
      const double plus = evaluate_at(point, kp);
      x[k] = orig - step;
      const double minus = evaluate_at(point, km);
      x[k] = orig;
      record(param->name, k, analytic[k], plus, minus, kp, km);
    }
  }
  graph.evaluate(point);
  return result;
}

}  // namespace textmatch
