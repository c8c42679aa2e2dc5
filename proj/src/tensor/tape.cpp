#include "ufo/tape.hpp"

#include <string>

#include "ufo/error.hpp"

namespace ufo {

Var Tape::constant(Matrix value) { return record("constant", std::move(value), {}, {}); }

Var Tape::variable(Matrix value) {
  Var v = record("variable", std::move(value), {}, {});
  nodes_[v.id()].requires_grad = true;
  return v;
}

Var Tape::record(const char* op, Matrix value, std::vector<std::size_t> parents, BackwardFn fn) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
  Node node;
  node.op = op;
  node.value = std::move(value);
  for (std::size_t p : parents) {
    if (p >= nodes_.size()) throw std::logic_error("tape: parent recorded after child");
    node.requires_grad = node.requires_grad || nodes_[p].requires_grad;
  }
  node.parents = std::move(parents);
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

bool Tape::any_requires_grad(std::span<const Var> vs) const {
  for (const Var& v : vs)
    if (nodes_[v.id()].requires_grad) return true;
  return false;
}

Matrix& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var out) {
  if (out.tape() != this) throw InvalidArgument("backward: variable belongs to another tape");
  const Matrix& v = nodes_[out.id()].value;
  if (v.rows() != 1 || v.cols() != 1) throw InvalidArgument("backward: output must be 1x1");
  for (Node& n : nodes_) n.grad = Matrix();
  grad_buffer(out.id())(0, 0) = 1.0;
  for (std::size_t i = out.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.backward) continue;
    for (std::size_t p : n.parents)
      if (p >= i) throw std::logic_error("tape: cycle detected during backward");
    n.backward(*this, n.grad);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::clear() { nodes_.clear(); }

SparseMix SparseMix::select(std::size_t in_rows, std::span<const std::size_t> rows) {
  SparseMix m;
  m.in_rows = in_rows;
  for (std::size_t r : rows) {
    m.add(r, 1.0);
    m.end_row();
  }
  return m;
}

SparseMix SparseMix::broadcast(std::size_t groups, std::size_t rows_per_group) {
  SparseMix m;
  m.in_rows = groups;
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t r = 0; r < rows_per_group; ++r) {
      m.add(g, 1.0);
      m.end_row();
    }
  return m;
}

SparseMix SparseMix::group_mean(std::size_t groups, std::size_t size) {
  SparseMix m;
  m.in_rows = groups * size;
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t r = 0; r < size; ++r) m.add(g * size + r, 1.0 / static_cast<double>(size));
    m.end_row();
  }
  return m;
}

}  // namespace ufo
