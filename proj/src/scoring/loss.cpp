#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ufo/error.hpp"
#include "ufo/scoring.hpp"

namespace ufo::scoring {
namespace {

void check(const Matrix& samples, const Matrix& truth, std::size_t windows, std::size_t P) {
  if (windows == 0 || P == 0 || truth.rows() % windows != 0)
    throw InvalidArgument("ncrps_loss: truth rows do not split into windows");
  if (samples.rows() != truth.rows() * P || samples.cols() != truth.cols())
    throw InvalidArgument("ncrps_loss: sample shape does not match truth");
}

// Rank (0-based) of each sample of one cell, ties broken by sample index.
void ranks(const Matrix& samples, std::size_t base, std::size_t L, std::size_t c, std::size_t P,
           std::vector<std::size_t>& order, std::vector<std::size_t>& rank) {
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples(base + a * L, c) < samples(base + b * L, c);
  });
  for (std::size_t i = 0; i < P; ++i) rank[order[i]] = i;
}

}  // namespace

Var ncrps_loss(Var samples, const Matrix& truth, std::size_t windows, std::size_t P) {
  const Matrix& x = samples.value();
  check(x, truth, windows, P);
  const std::size_t L = truth.rows() / windows, C = truth.cols();
  const double p = static_cast<double>(P);

  // Per (window, channel) denominators and the loss gradient w.r.t. samples.
  Matrix grad(x.rows(), C);
  double loss = 0.0;
  std::vector<std::size_t> order(P), rank(P);
  std::string bad;
  for (std::size_t w = 0; w < windows; ++w) {
    for (std::size_t c = 0; c < C; ++c) {
      double denom = 0.0;
      for (std::size_t t = 0; t < L; ++t) denom += std::abs(truth(w * L + t, c));
      if (!(denom > 0.0)) {
        bad += (bad.empty() ? "" : ",") + std::to_string(w) + ":" + std::to_string(c);
        continue;
      }
      const double cell_scale = 1.0 / (denom * static_cast<double>(C) * static_cast<double>(windows));
      for (std::size_t t = 0; t < L; ++t) {
        const double y = truth(w * L + t, c);
        const std::size_t base = w * P * L + t;
        ranks(x, base, L, c, P, order, rank);
        double crps = 0.0;
        for (std::size_t s = 0; s < P; ++s) {
          const double v = x(base + s * L, c);
          const double coef = 2.0 * static_cast<double>(rank[s] + 1) - p - 1.0;
          crps += std::abs(v - y) / p - coef * v / (p * p);
          const double sign = v > y ? 1.0 : (v < y ? -1.0 : 0.0);
          grad(base + s * L, c) = cell_scale * (sign / p - coef / (p * p));
        }
        loss += cell_scale * crps;
      }
    }
  }
  if (!bad.empty()) throw DegenerateError("ncrps_loss: zero l1 denominator at window:channel " + bad);

  Tape& tape = *samples.tape();
  const std::size_t in = samples.id();
  Tape::BackwardFn fn;
  if (tape.requires_grad(samples)) {
    fn = [in, grad = std::move(grad)](Tape& t, const Matrix& g) {
      Matrix& dst = t.grad_buffer(in);
      const double s = g(0, 0);
      for (std::size_t i = 0; i < grad.size(); ++i) dst.data()[i] += s * grad.data()[i];
    };
  }
  return tape.record("ncrps_loss", Matrix(1, 1, loss), {in}, std::move(fn));
}

std::vector<long> kink_signature(const Matrix& samples, const Matrix& truth, std::size_t windows, std::size_t P) {
  check(samples, truth, windows, P);
  const std::size_t L = truth.rows() / windows, C = truth.cols();
  std::vector<long> sig;
  sig.reserve(samples.size() * 2);
  std::vector<std::size_t> order(P), rank(P);
  for (std::size_t w = 0; w < windows; ++w)
    for (std::size_t t = 0; t < L; ++t)
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t base = w * P * L + t;
        ranks(samples, base, L, c, P, order, rank);
        const double y = truth(w * L + t, c);
        for (std::size_t s = 0; s < P; ++s) {
          const double v = samples(base + s * L, c);
          sig.push_back(static_cast<long>(rank[s]));
          sig.push_back(v > y ? 1 : (v < y ? -1 : 0));
        }
      }
  return sig;
}

}  // namespace ufo::scoring
