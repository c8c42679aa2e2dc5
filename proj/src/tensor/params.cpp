#include "ufo/params.hpp"

#include <cmath>

#include "ufo/error.hpp"

namespace ufo {

std::size_t ParamStore::add(std::string name, Matrix init) {
  if (find(name)) throw InvalidArgument("ParamStore: duplicate parameter " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return values_.size() - 1;
}

std::optional<std::size_t> ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const Matrix& m : values_) n += m.size();
  return n;
}

std::vector<Matrix> ParamStore::zeros_like() const {
  std::vector<Matrix> out;
  out.reserve(values_.size());
  for (const Matrix& m : values_) out.emplace_back(m.rows(), m.cols());
  return out;
}

ParamBinder::ParamBinder(Tape& tape, const ParamStore& store, bool requires_grad)
    : tape_(tape), store_(store), requires_grad_(requires_grad), bound_(store.size()) {}

Var ParamBinder::operator()(std::size_t index) {
  Var& v = bound_.at(index);
  if (!v.valid()) {
    v = requires_grad_ ? tape_.variable(store_.value(index)) : tape_.constant(store_.value(index));
  }
  return v;
}

void ParamBinder::accumulate(std::vector<Matrix>& grads) const {
  if (grads.size() != bound_.size()) throw InvalidArgument("ParamBinder: gradient buffer count");
  for (std::size_t i = 0; i < bound_.size(); ++i) {
    if (!bound_[i].valid()) continue;
    const Matrix g = tape_.grad(bound_[i]);
    Matrix& dst = grads[i];
    for (std::size_t k = 0; k < g.size(); ++k) dst.data()[k] += g.data()[k];
  }
}

double global_norm(const std::vector<Matrix>& grads) {
  double s = 0.0;
  for (const Matrix& g : grads)
    for (double v : g.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace ufo
