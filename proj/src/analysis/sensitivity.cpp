#include <cmath>
#include <ostream>

#include "ufo/analysis.hpp"
#include "ufo/error.hpp"

namespace ufo::analysis {

void SensitivityReport::write(std::ostream& out) const {
  out.precision(17);
  out << "position,norm\n";
  for (std::size_t i = 0; i < norms.size(); ++i) out << i << ',' << norms[i] << '\n';
  out << "# r2," << r_squared << '\n';
  out << "# zero_positions," << zero_positions << '\n';
}

SensitivityReport summarize_sensitivity(std::vector<double> norms) {
  SensitivityReport r;
  r.norms = std::move(norms);
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < r.norms.size(); ++i) {
    if (!(r.norms[i] > 0.0)) {
      ++r.zero_positions;
      continue;
    }
    const double x = static_cast<double>(i), y = std::log(r.norms[i]);
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  if (n == 0) throw DegenerateError("sensitivity: every position has a zero gradient");
  const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
  // A constant log-norm is explained perfectly only if it has no spread.
  r.r_squared = (vx > 0.0 && vy > 1e-300) ? std::min(1.0, cxy * cxy / (vx * vy)) : 0.0;
  return r;
}

SensitivityReport sensitivity(std::span<const data::Window> windows, const ContextFn& forward) {
  if (windows.empty()) throw InvalidArgument("sensitivity: no windows");
  const std::size_t T = windows.front().context_length();
  std::vector<double> norms(T, 0.0);
  for (const data::Window& w : windows) {
    if (w.context_length() != T) throw InvalidArgument("sensitivity: windows differ in context length");
    Tape tape;
    const Var x = tape.variable(w.context_values);
    const Var out = ops::sum(forward(tape, w, x));
    tape.backward(out);
    const Matrix g = tape.grad(x);
    for (std::size_t i = 0; i < T; ++i) {
      double s = 0.0;
      for (double v : g.row(i)) s += v * v;
      norms[i] += std::sqrt(s);
    }
  }
  for (double& v : norms) v /= static_cast<double>(windows.size());
  return summarize_sensitivity(std::move(norms));
}

SensitivityReport sensitivity(const model::Model& model, std::span<const data::Window> windows) {
  const model::ModelConfig& cfg = model.config();
  return sensitivity(windows, [&](Tape& tape, const data::Window& w, Var x) {
    if (w.context_length() != cfg.context)
      throw ConfigError("sensitivity: window context must equal the model context length");
    const model::Batch batch = model::make_batch(cfg, std::span<const data::Window>(&w, 1));
    ParamBinder pb(tape, model.store(), false);
    const Matrix eps(batch.horizon / cfg.block(), cfg.dim);
    return model::forecast_on_tape(pb, model, batch, x, eps, 1);
  });
}

}  // namespace ufo::analysis
