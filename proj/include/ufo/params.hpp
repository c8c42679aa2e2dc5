#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ufo/matrix.hpp"
#include "ufo/tape.hpp"

namespace ufo {

// Named, ordered collection of trainable matrices.
class ParamStore {
 public:
  std::size_t add(std::string name, Matrix init);

  std::size_t size() const noexcept { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Matrix& value(std::size_t i) { return values_[i]; }
  const Matrix& value(std::size_t i) const { return values_[i]; }
  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t scalar_count() const;

  // Zero matrices matching every parameter's shape.
  std::vector<Matrix> zeros_like() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

// Places parameters on a tape on first use and collects their adjoints.
class ParamBinder {
 public:
  ParamBinder(Tape& tape, const ParamStore& store, bool requires_grad = true);

  Var operator()(std::size_t index);
  Tape& tape() noexcept { return tape_; }

  // grads[i] += adjoint of parameter i (for parameters used on the tape).
  void accumulate(std::vector<Matrix>& grads) const;

 private:
  Tape& tape_;
  const ParamStore& store_;
  bool requires_grad_;
  std::vector<Var> bound_;
};

double global_norm(const std::vector<Matrix>& grads);

}  // namespace ufo
