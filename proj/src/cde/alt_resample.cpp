#include <cmath>
#include <string>

#include "ufo/cde.hpp"
#include "ufo/error.hpp"

namespace ufo::cde {
namespace {

Matrix uniform_init(std::size_t rows, std::size_t cols, double bound, CounterRng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

AltKind parse_alt_kind(std::string_view name) {
  if (name == "rnn") return AltKind::rnn;
  if (name == "conv") return AltKind::conv;
  throw InvalidArgument("unknown resampler kind '" + std::string(name) + "' (expected rnn or conv)");
}

AltParams add_alt_resampler(ParamStore& store, const std::string& prefix, AltKind kind, Direction direction,
                            std::size_t dim, std::size_t cov_dim, std::size_t patch_len, CounterRng& rng) {
  AltParams p;
  p.kind = kind;
  p.direction = direction;
  p.dim = dim;
  p.patch_len = patch_len;
  if (kind == AltKind::conv) {
    p.input_dim = dim;
    if (direction == Direction::down) {
      const double b = 1.0 / std::sqrt(static_cast<double>(dim * patch_len));
      p.weight = store.add(prefix + ".conv.weight", uniform_init(dim * patch_len, dim, b, rng));
      p.bias = store.add(prefix + ".conv.bias", Matrix(1, dim));
    } else {
      const double b = 1.0 / std::sqrt(static_cast<double>(dim));
      p.weight = store.add(prefix + ".conv.weight", uniform_init(dim, dim * patch_len, b, rng));
      p.bias = store.add(prefix + ".conv.bias", Matrix(1, dim * patch_len));
    }
    return p;
  }
  // The downward GRU reads the patch embeddings, the upward one the covariates.
  p.input_dim = direction == Direction::down ? dim : cov_dim;
  if (p.input_dim == 0) throw InvalidArgument("alt_resample: rnn-up needs covariates");
  const double bx = 1.0 / std::sqrt(static_cast<double>(p.input_dim));
  const double bh = 1.0 / std::sqrt(static_cast<double>(dim));
  p.wz = store.add(prefix + ".gru.wz", uniform_init(p.input_dim, dim, bx, rng));
  p.wr = store.add(prefix + ".gru.wr", uniform_init(p.input_dim, dim, bx, rng));
  p.wn = store.add(prefix + ".gru.wn", uniform_init(p.input_dim, dim, bx, rng));
  p.uz = store.add(prefix + ".gru.uz", uniform_init(dim, dim, bh, rng));
  p.ur = store.add(prefix + ".gru.ur", uniform_init(dim, dim, bh, rng));
  p.un = store.add(prefix + ".gru.un", uniform_init(dim, dim, bh, rng));
  p.bz = store.add(prefix + ".gru.bz", Matrix(1, dim));
  p.br = store.add(prefix + ".gru.br", Matrix(1, dim));
  p.bn = store.add(prefix + ".gru.bn", Matrix(1, dim));
  return p;
}

Var gru_cell(ParamBinder& pb, const AltParams& p, Var x, Var h) {
  using namespace ops;
  const Var z = sigmoid(add_row(add(matmul(x, pb(p.wz)), matmul(h, pb(p.uz))), pb(p.bz)));
  const Var r = sigmoid(add_row(add(matmul(x, pb(p.wr)), matmul(h, pb(p.ur))), pb(p.br)));
  const Var n = tanh(add_row(add(matmul(x, pb(p.wn)), matmul(mul(r, h), pb(p.un))), pb(p.bn)));
  return add(n, mul(z, sub(h, n)));
}

Var alt_resample(ParamBinder& pb, const AltParams& p, Var seq, const PatchGeometry& geo) {
  const std::size_t R = geo.patches, w = geo.patch_len;
  if (w != p.patch_len) throw InvalidArgument("alt_resample: patch length mismatch");
  if (seq.cols() != p.dim) throw InvalidArgument("alt_resample: embedding dimension mismatch");
  Tape& tape = pb.tape();

  auto offset_rows = [&](std::size_t j) {
    std::vector<std::size_t> rows(R);
    for (std::size_t r = 0; r < R; ++r) rows[r] = r * w + j;
    return SparseMix::select(R * w, rows);
  };

  if (p.direction == Direction::down) {
    if (seq.rows() != R * w) throw InvalidArgument("alt_resample: input length does not match grid");
    if (p.kind == AltKind::conv) {
      std::vector<Var> cols;
      for (std::size_t j = 0; j < w; ++j) cols.push_back(ops::mix_rows(seq, offset_rows(j)));
      const Var stacked = w == 1 ? cols[0] : ops::concat_cols(cols);
      return ops::add_row(ops::matmul(stacked, pb(p.weight)), pb(p.bias));
    }
    Var h = tape.constant(Matrix(R, p.dim));
    for (std::size_t j = 0; j < w; ++j) h = gru_cell(pb, p, ops::mix_rows(seq, offset_rows(j)), h);
    return h;
  }

  if (seq.rows() != R) throw InvalidArgument("alt_resample: seed count does not match patch count");
  if (p.kind == AltKind::conv) {
    const Var expanded = ops::add_row(ops::matmul(seq, pb(p.weight)), pb(p.bias));
    return ops::reshape(expanded, R * w, p.dim);
  }
  if (geo.fine_covariates.cols() != p.input_dim) throw InvalidArgument("alt_resample: covariate dimension mismatch");
  std::vector<Var> points;
  Var h = seq;
  for (std::size_t j = 0; j < w; ++j) {
    Matrix tau(R, p.input_dim);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < p.input_dim; ++c) tau(r, c) = geo.fine_covariates(r * w + j, c);
    h = gru_cell(pb, p, tape.constant(std::move(tau)), h);
    points.push_back(h);
  }
  const Var stacked = ops::concat_rows(points);
  std::vector<std::size_t> order(R * w);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t j = 0; j < w; ++j) order[r * w + j] = j * R + r;
  return ops::mix_rows(stacked, SparseMix::select(R * w, order));
}

}  // namespace ufo::cde
