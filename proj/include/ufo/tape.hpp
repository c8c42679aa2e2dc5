#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ufo/matrix.hpp"

namespace ufo {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
// is alive and not cleared.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode gradient tape over the fixed operator set in ops below.
// Nodes are appended in evaluation order, so the tape is topologically
// ordered by construction; backward walks it once in reverse.
class Tape {
 public:
  // Receives the adjoint of the node's output and scatters into parents.
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var variable(Matrix value);

  // Appends an operator node. Throws NumericError if value has non-finite
  // entries. fn may be empty when no parent requires a gradient.
  Var record(const char* op, Matrix value, std::vector<std::size_t> parents, BackwardFn fn);

  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  bool any_requires_grad(std::span<const Var> vs) const;

  // Runs reverse accumulation from a 1x1 output.
  void backward(Var scalar_output);
  // Adjoint of v after backward; a zero matrix of v's shape if none flowed.
  Matrix grad(Var v) const;
  // Adjoint buffer of node id, allocated on first use (for BackwardFn).
  Matrix& grad_buffer(std::size_t id);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  std::size_t size() const noexcept { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    const char* op = "";
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// Constant row-mixing operator: out[r] = sum_k weight[k] * in[index[k]] for
// k in [offset[r], offset[r+1]). Covers row gathers, broadcasts, patch
// interpolation, and grouped means.
struct SparseMix {
  std::size_t in_rows = 0;
  std::vector<std::size_t> offset{0};
  std::vector<std::size_t> index;
  std::vector<double> weight;

  std::size_t out_rows() const { return offset.size() - 1; }
  void add(std::size_t row, double w) {
    index.push_back(row);
    weight.push_back(w);
  }
  void end_row() { offset.push_back(index.size()); }

  static SparseMix select(std::size_t in_rows, std::span<const std::size_t> rows);
  // Output has groups*rows_per_group rows; group g repeats input row g.
  static SparseMix broadcast(std::size_t groups, std::size_t rows_per_group);
  // Output row g is the mean of input rows [g*size, (g+1)*size).
  static SparseMix group_mean(std::size_t groups, std::size_t size);
};

// Attention layout: queries are `groups` consecutive blocks of q_len rows;
// keys/values are blocks of kv_len rows, query group g reading key group
// g / kv_repeat.
struct AttentionSpec {
  std::size_t groups = 1;
  std::size_t q_len = 0;
  std::size_t kv_len = 0;
  std::size_t heads = 1;
  std::size_t kv_repeat = 1;
  bool causal = false;
};

namespace ops {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
// Broadcast a 1xN row over every row of a.
Var add_row(Var a, Var row);
Var mul_row(Var a, Var row);
// Multiply row r of a by the constant factor[r].
Var scale_rows(Var a, std::span<const double> factor);

Var sigmoid(Var a);
Var swish(Var a);
Var tanh(Var a);
Var softplus(Var a);
Var exp(Var a);
Var sqrt(Var a);
Var square(Var a);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var mix_rows(Var a, const SparseMix& mix);

// Per-row standardization across columns, no affine parameters.
Var normalize_rows(Var a, double eps = 1e-5);

Var sum(Var a);
Var mean(Var a);

// Scaled dot-product attention, heads split along columns. When `weights`
// is non-null it receives the softmax matrices, laid out
// [group][head][query][key].
Var attention(Var q, Var k, Var v, const AttentionSpec& spec, std::vector<double>* weights = nullptr);

}  // namespace ops
}  // namespace ufo
