#include <cmath>
#include <numbers>
#include <string>

#include "ufo/data.hpp"
#include "ufo/error.hpp"
#include "ufo/rng.hpp"

namespace ufo::data {

SynthKind parse_synth_kind(std::string_view name) {
  if (name == "sine-mix" || name == "sine_mix" || name == "sine") return SynthKind::sine_mix;
  if (name == "bimodal") return SynthKind::bimodal;
  if (name == "ou" || name == "ou-process") return SynthKind::ou;
  throw InvalidArgument("unknown synthetic kind '" + std::string(name) + "' (expected sine-mix, bimodal or ou)");
}

std::string_view synth_kind_name(SynthKind kind) {
  switch (kind) {
    case SynthKind::sine_mix: return "sine-mix";
    case SynthKind::bimodal: return "bimodal";
    case SynthKind::ou: return "ou";
  }
  return "?";
}

SineTerms sine_terms(const SynthSpec& spec, std::size_t channel) {
  CounterRng rng("synth.terms." + std::to_string(channel), spec.seed);
  SineTerms t{};
  t.level = rng.uniform(1.0, 3.0);
  t.amp_day = rng.uniform(0.5, 1.5);
  t.phase_day = rng.uniform(0.0, 2.0 * std::numbers::pi);
  t.amp_week = rng.uniform(0.2, 0.8);
  t.phase_week = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return t;
}

double sine_mix_clean(const SynthSpec& spec, std::size_t row, std::size_t channel) {
  const SineTerms t = sine_terms(spec, channel);
  const double h = static_cast<double>(row) * spec.period / 3600.0;
  return t.level + t.amp_day * std::sin(2.0 * std::numbers::pi * h / 24.0 + t.phase_day) +
         t.amp_week * std::sin(2.0 * std::numbers::pi * h / 168.0 + t.phase_week);
}

Dataset synth_dataset(const SynthSpec& spec) {
  if (spec.rows < 2 || spec.channels == 0) throw InvalidArgument("synth_dataset: need rows >= 2 and channels >= 1");
  if (!(spec.period > 0.0) || !(spec.noise >= 0.0)) throw InvalidArgument("synth_dataset: bad period or noise");
  Dataset ds;
  ds.values = Matrix(spec.rows, spec.channels);
  for (std::size_t r = 0; r < spec.rows; ++r) ds.timestamps.push_back(spec.start + static_cast<double>(r) * spec.period);
  for (std::size_t c = 0; c < spec.channels; ++c) ds.channels.push_back("ch" + std::to_string(c));

  for (std::size_t c = 0; c < spec.channels; ++c) {
    CounterRng noise("synth.noise." + std::to_string(c), spec.seed);
    switch (spec.kind) {
      case SynthKind::sine_mix:
        for (std::size_t r = 0; r < spec.rows; ++r)
          ds.values(r, c) = sine_mix_clean(spec, r, c) + spec.noise * noise.normal();
        break;
      case SynthKind::bimodal: {
        // Regimes at level +-1 switch with probability 1/12 per row.
        CounterRng regime("synth.regime." + std::to_string(c), spec.seed);
        double sign = regime.uniform() < 0.5 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < spec.rows; ++r) {
          if (regime.uniform() < 1.0 / 12.0) sign = -sign;
          const double h = static_cast<double>(r) * spec.period / 3600.0;
          ds.values(r, c) = 3.0 + sign + 0.3 * std::sin(2.0 * std::numbers::pi * h / 24.0) + spec.noise * noise.normal();
        }
        break;
      }
      case SynthKind::ou: {
        // Exact discretization of dx = theta (mu - x) dt + sigma dW with a daily cycle on top.
        const double theta = 0.1, mu = 2.0, sigma = 0.3;
        const double decay = std::exp(-theta), sd = sigma * std::sqrt((1.0 - decay * decay) / (2.0 * theta));
        double x = mu;
        for (std::size_t r = 0; r < spec.rows; ++r) {
          x = mu + (x - mu) * decay + sd * noise.normal();
          const double h = static_cast<double>(r) * spec.period / 3600.0;
          ds.values(r, c) = x + 0.5 * std::sin(2.0 * std::numbers::pi * h / 24.0);
        }
        break;
      }
    }
  }
  infer_frequency(ds);
  return ds;
}

}  // namespace ufo::data
