#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "textmatch/tensor.hpp"

namespace textmatch {

enum class Op {
  kInput,
  kConstant,
  kParameter,
  kAdd,
  kSub,
  kMul,
  kMatMul,
  kGatherRows,
  kTanh,
  kRelu,
  kSigmoid,
  kExp,
  kLog,
  kSoftmaxRows,
  kSumAxis,
  kMeanAxis,
  kConcatAxis,
  kScale,
  kClampMin,
  kL2NormalizeRows,
};

std::string_view op_name(Op op);

/// Handle to a node inside one Graph.
struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

struct Parameter {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};

/// Named parameters of a model. Element addresses are stable, so graphs may
/// keep pointers to them while the set is alive.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor tensor, bool trainable = true);
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<Parameter> params_;
};

using Bindings = std::map<std::string, Tensor, std::less<>>;
using Gradients = std::map<std::string, Tensor, std::less<>>;

/// Reverse-mode differentiation tape.
///
/// Nodes are appended in construction order, which is a topological order.
/// `evaluate` computes every node from the bound inputs and the current
/// parameter tensors; `backward` then propagates adjoints from a size-1 node.
/// Apart from `scale`, primitives never broadcast.
class Graph {
 public:
  NodeId input(std::string name);
  NodeId constant(Tensor value);
  /// The graph reads `param.tensor` at evaluation time; `param` must outlive it.
  NodeId parameter(Parameter& param);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  /// a * b, or a * transpose(b) when `transpose_b` is set.
  NodeId matmul(NodeId a, NodeId b, bool transpose_b = false);
  /// Row r of the result is row `rows[r]` of `table`.
  NodeId gather_rows(NodeId table, std::vector<std::size_t> rows);
  NodeId tanh(NodeId x);
  NodeId relu(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId exp(NodeId x);
  NodeId log(NodeId x);
  NodeId softmax_rows(NodeId x);
  /// Reductions keep the reduced axis with extent 1.
  NodeId sum_axis(NodeId x, std::size_t axis);
  NodeId mean_axis(NodeId x, std::size_t axis);
  NodeId concat_axis(std::vector<NodeId> parts, std::size_t axis);
  NodeId scale(NodeId x, double factor);
  NodeId clamp_min(NodeId x, double floor);
  NodeId l2_normalize_rows(NodeId x);

  void evaluate(const Bindings& bindings = {});
  const Tensor& value(NodeId id) const;

  /// Gradient of `output` (a single value) with respect to each trainable
  /// parameter node in the graph. Parameters the output does not reach get
  /// zero gradients.
  Gradients backward(NodeId output);
  /// Adjoint of any node after `backward`.
  const Tensor& grad(NodeId id) const;

  std::size_t size() const { return nodes_.size(); }
  Op op(NodeId id) const { return nodes_.at(id.index).op; }

  /// Input placeholder names and parameters, in node order.
  std::vector<NodeId> inputs() const;
  std::vector<NodeId> parameters() const;
  const std::string& input_name(NodeId id) const;
  Parameter& parameter_ref(NodeId id) const;

  /// Offset of every relu / clamp_min input element from its kink point
  /// (input minus floor), in node order. Valid after `evaluate`.
  std::vector<double> kink_offsets() const;

 private:
  struct Node {
    Node(Op o, std::vector<std::size_t> p) : op(o), parents(std::move(p)) {}
    Op op;
    std::vector<std::size_t> parents;
    double scalar = 0.0;  // scale factor, clamp floor
    std::size_t axis = 0;
    bool transpose_b = false;
    std::vector<std::size_t> rows;  // gather_rows indices
    std::string name;               // input placeholder name
    Parameter* param = nullptr;
    Tensor value;
    Tensor grad;
  };

  NodeId push(Node node);
  void check_id(NodeId id) const;
  [[noreturn]] void fail_shape(std::size_t index, const std::string& what) const;
  Tensor forward(std::size_t index, const Bindings& bindings) const;
  void propagate(std::size_t index, const std::vector<char>& needs_grad);
  Tensor& grad_slot(std::size_t index);

  std::vector<Node> nodes_;
  bool evaluated_ = false;
};

struct GradCheckResult {
  /// max over checked coordinates of |analytic - numeric| / max(1, |analytic|)
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates skipped because a relu / clamp_min kink lies within one
  /// step of the evaluation point, as "name[flat index]".
  std::vector<std::string> excluded;
};

/// Compares backward() against central differences for every bound input
/// placeholder and every trainable parameter in `graph`. Parameter tensors are
/// perturbed in place and restored before returning.
GradCheckResult grad_check(Graph& graph, NodeId output, const Bindings& point, double step);

}  // namespace textmatch
