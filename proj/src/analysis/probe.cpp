#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <ostream>

#include "ufo/analysis.hpp"
#include "ufo/error.hpp"
#include "ufo/rng.hpp"

namespace ufo::analysis {

double LogisticModel::probability(std::span<const double> x) const {
  double z = bias;
  for (std::size_t k = 0; k < weights.size(); ++k) z += weights[k] * (x[k] - mean[k]) / scale[k];
  return 1.0 / (1.0 + std::exp(-z));
}

LogisticModel fit_logistic(const Matrix& X, std::span<const int> y, const LogisticConfig& cfg) {
  const std::size_t n = X.rows(), f = X.cols();
  if (n == 0 || y.size() != n) throw InvalidArgument("fit_logistic: features and labels differ in length");
  const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (pos == 0 || pos == n) throw DegenerateError("fit_logistic: labels hold a single class");
  LogisticModel m;
  m.mean.assign(f, 0.0);
  m.scale.assign(f, 0.0);
  m.weights.assign(f, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < f; ++k) m.mean[k] += X(i, k) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < f; ++k) m.scale[k] += std::pow(X(i, k) - m.mean[k], 2) / static_cast<double>(n);
  for (double& s : m.scale) s = s > 1e-24 ? std::sqrt(s) : 1.0;
  Matrix Z(n, f);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < f; ++k) Z(i, k) = (X(i, k) - m.mean[k]) / m.scale[k];

  const double wpos = static_cast<double>(n) / (2.0 * static_cast<double>(pos));
  const double wneg = static_cast<double>(n) / (2.0 * static_cast<double>(n - pos));
  std::vector<double> gw(f);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = m.bias;
      for (std::size_t k = 0; k < f; ++k) z += m.weights[k] * Z(i, k);
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double r = (y[i] == 1 ? wpos : wneg) * (p - (y[i] == 1 ? 1.0 : 0.0)) / static_cast<double>(n);
      for (std::size_t k = 0; k < f; ++k) gw[k] += r * Z(i, k);
      gb += r;
    }
    for (std::size_t k = 0; k < f; ++k) m.weights[k] -= cfg.learning_rate * (gw[k] + cfg.l2 * m.weights[k]);
    m.bias -= cfg.learning_rate * gb;
  }
  return m;
}

void ProbeReport::write(std::ostream& out) const {
  out.precision(17);
  out << "f1,positives,negatives,train,test,weight_norm\n"
      << f1 << ',' << positives << ',' << negatives << ',' << train_count << ',' << test_count << ',' << weight_norm
      << '\n';
}

ProbeReport probe_features(const Matrix& X, std::span<const int> y, std::uint64_t seed, const LogisticConfig& cfg) {
  const std::size_t n = X.rows();
  if (y.size() != n) throw InvalidArgument("probe: features and labels differ in length");
  ProbeReport r;
  r.positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  r.negatives = n - r.positives;
  if (r.positives == 0 || r.negatives == 0) throw DegenerateError("probe: every patch has the same label");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng("probe.split", seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const std::size_t n_train = n * 7 / 10;
  auto take = [&](std::size_t from, std::size_t to, Matrix& F, std::vector<int>& L) {
    F = Matrix(to - from, X.cols());
    L.clear();
    for (std::size_t i = from; i < to; ++i) {
      std::copy(X.row(order[i]).begin(), X.row(order[i]).end(), F.row(i - from).begin());
      L.push_back(y[order[i]]);
    }
  };
  Matrix Ftr, Fte;
  std::vector<int> Ltr, Lte;
  take(0, n_train, Ftr, Ltr);
  take(n_train, n, Fte, Lte);
  r.train_count = Ltr.size();
  r.test_count = Lte.size();
  const LogisticModel m = fit_logistic(Ftr, Ltr, cfg);
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < Lte.size(); ++i) {
    const bool pred = m.probability(Fte.row(i)) > 0.5;
    tp += pred && Lte[i] == 1;
    fp += pred && Lte[i] == 0;
    fn += !pred && Lte[i] == 1;
  }
  r.f1 = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
  double s = 0.0;
  for (double w : m.weights) s += w * w;
  r.weight_norm = std::sqrt(s);
  return r;
}

ProbeData probe_data(const model::Model& model, const data::Dataset& observed, std::span<const data::Window> windows) {
  const model::ModelConfig& cfg = model.config();
  const std::size_t w = cfg.patch_len;
  ProbeData out;
  std::vector<double> feats;
  for (const data::Window& win : windows) {
    const model::Batch batch = model::make_batch(cfg, std::span<const data::Window>(&win, 1));
    Tape tape;
    ParamBinder pb(tape, model.store(), false);
    const model::Encoded enc = model::encode(pb, model, batch, tape.constant(batch.context_values));
    const Matrix& emb = enc.levels[1].value();
    const std::size_t skip = win.context_length() - cfg.context;
    for (std::size_t p = 0; p < emb.rows(); ++p) {
      const std::size_t first = win.context_rows[skip + p * w], last = win.context_rows[skip + p * w + w - 1];
      int label = 0;
      for (std::size_t r = first; r <= last && !label; ++r) label = observed.row_visible(r) ? 0 : 1;
      out.labels.push_back(label);
      feats.insert(feats.end(), emb.row(p).begin(), emb.row(p).end());
    }
  }
  out.features = Matrix(out.labels.size(), cfg.dim, std::move(feats));
  return out;
}

std::vector<data::Window> probe_windows(const data::Dataset& observed, const data::Dataset& clean,
                                        std::size_t context, std::size_t horizon) {
  data::WindowSpec spec;
  spec.context = context;
  spec.horizon = horizon;
  spec.stride = horizon + 1;
  spec.repr = data::MissingRepr::nan;
  std::vector<data::Window> out;
  for (data::Split s : {data::Split::train, data::Split::val, data::Split::test}) {
    auto part = data::make_windows(observed, clean, s, spec);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

ProbeReport irregularity_probe(const model::Model& model, const data::Dataset& observed,
                               std::span<const data::Window> windows, std::uint64_t seed) {
  const ProbeData d = probe_data(model, observed, windows);
  return probe_features(d.features, d.labels, seed);
}

}  // namespace ufo::analysis
