#include "ufo/refiner.hpp"

#include <cmath>

#include "ufo/error.hpp"

namespace ufo::refiner {
namespace {

Matrix uniform_init(std::size_t rows, std::size_t cols, CounterRng& rng) {
  const double b = 1.0 / std::sqrt(static_cast<double>(rows));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-b, b);
  return m;
}

AttentionParams add_attention(ParamStore& store, const std::string& prefix, std::size_t d, CounterRng& rng) {
  AttentionParams a;
  a.query = store.add(prefix + ".query", uniform_init(d, d, rng));
  a.key = store.add(prefix + ".key", uniform_init(d, d, rng));
  a.value = store.add(prefix + ".value", uniform_init(d, d, rng));
  a.out = store.add(prefix + ".out", Matrix(d, d));
  return a;
}

void record(const AttentionSink& sink, std::size_t block, bool cross, const AttentionSpec& spec,
            const std::vector<double>& w) {
  if (sink.records == nullptr) return;
  const std::size_t n = spec.q_len * spec.kv_len;
  for (std::size_t g = 0; g < spec.groups; ++g)
    for (std::size_t h = 0; h < spec.heads; ++h) {
      AttentionRecord r{sink.level, block, h, g, cross, spec.q_len, spec.kv_len, {}};
      const auto first = w.begin() + static_cast<std::ptrdiff_t>((g * spec.heads + h) * n);
      r.weights.assign(first, first + static_cast<std::ptrdiff_t>(n));
      sink.records->push_back(std::move(r));
    }
}

Var attend(ParamBinder& pb, const AttentionParams& a, Var q_in, Var kv_in, const AttentionSpec& spec,
           const AttentionSink& sink, std::size_t block, bool cross) {
  const Var q = ops::matmul(q_in, pb(a.query));
  const Var k = ops::matmul(kv_in, pb(a.key));
  const Var v = ops::matmul(kv_in, pb(a.value));
  std::vector<double> weights;
  const Var o = ops::attention(q, k, v, spec, sink.records ? &weights : nullptr);
  record(sink, block, cross, spec, weights);
  return ops::matmul(o, pb(a.out));
}

Var feed_forward(ParamBinder& pb, const FeedForwardParams& f, Var x) {
  const Var gate = ops::swish(ops::matmul(x, pb(f.gate)));
  return ops::matmul(ops::mul(gate, ops::matmul(x, pb(f.value))), pb(f.out));
}

void check_groups(Var seq, std::size_t groups, std::size_t dim, const char* what) {
  if (seq.cols() != dim) throw InvalidArgument(std::string(what) + ": embedding dimension mismatch");
  if (groups == 0 || seq.rows() == 0 || seq.rows() % groups != 0)
    throw InvalidArgument(std::string(what) + ": rows do not split into equal sequences");
}

}  // namespace

RefinerParams add_refiner(ParamStore& store, const std::string& prefix, std::size_t dim, std::size_t heads,
                          std::size_t blocks, std::size_t ff_hidden, bool decoder, CounterRng& rng) {
  if (heads == 0 || dim % heads != 0) throw InvalidArgument("refiner: dim must be divisible by heads");
  RefinerParams p{dim, heads, decoder, {}};
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::string pre = prefix + ".block" + std::to_string(b);
    BlockParams bp;
    bp.self = add_attention(store, pre + ".self", dim, rng);
    if (decoder) bp.cross = add_attention(store, pre + ".cross", dim, rng);
    bp.ff.gate = store.add(pre + ".ff.gate", uniform_init(dim, ff_hidden, rng));
    bp.ff.value = store.add(pre + ".ff.value", uniform_init(dim, ff_hidden, rng));
    bp.ff.out = store.add(pre + ".ff.out", Matrix(ff_hidden, dim));
    p.blocks.push_back(bp);
  }
  return p;
}

Var encoder_refine(ParamBinder& pb, const RefinerParams& p, Var seq, std::size_t groups, const AttentionSink& sink) {
  check_groups(seq, groups, p.dim, "encoder_refine");
  const std::size_t len = seq.rows() / groups;
  const AttentionSpec spec{groups, len, len, p.heads, 1, true};
  Var x = seq;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const Var n1 = ops::normalize_rows(x);
    x = ops::add(x, attend(pb, p.blocks[b].self, n1, n1, spec, sink, b, false));
    x = ops::add(x, feed_forward(pb, p.blocks[b].ff, ops::normalize_rows(x)));
  }
  return x;
}

Var decoder_refine(ParamBinder& pb, const RefinerParams& p, Var dec, Var enc, std::size_t groups,
                   std::size_t kv_repeat, const AttentionSink& sink) {
  if (!p.decoder) throw InvalidArgument("decoder_refine: refiner has no cross-attention");
  check_groups(dec, groups, p.dim, "decoder_refine");
  if (kv_repeat == 0 || groups % kv_repeat != 0)
    throw InvalidArgument("decoder_refine: groups must be a multiple of kv_repeat");
  check_groups(enc, groups / kv_repeat, p.dim, "decoder_refine");
  const std::size_t len = dec.rows() / groups;
  const std::size_t enc_len = enc.rows() / (groups / kv_repeat);
  const AttentionSpec self{groups, len, len, p.heads, 1, false};
  const AttentionSpec cross{groups, len, enc_len, p.heads, kv_repeat, false};
  const Var memory = ops::normalize_rows(enc);
  Var x = dec;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const Var n1 = ops::normalize_rows(x);
    x = ops::add(x, attend(pb, p.blocks[b].self, n1, n1, self, sink, b, false));
    x = ops::add(x, attend(pb, p.blocks[b].cross, ops::normalize_rows(x), memory, cross, sink, b, true));
    x = ops::add(x, feed_forward(pb, p.blocks[b].ff, ops::normalize_rows(x)));
  }
  return x;
}

}  // namespace ufo::refiner
