#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ufo/params.hpp"
#include "ufo/rng.hpp"
#include "ufo/tape.hpp"

// Pre-norm transformer blocks mixing a level's sequence. Encoder blocks use
// causal self-attention; decoder blocks attend bidirectionally over the
// horizon and then cross-attend to the encoder features of the same level.
namespace ufo::refiner {

struct AttentionParams {
  std::size_t query = 0, key = 0, value = 0, out = 0;
};

struct FeedForwardParams {
  std::size_t gate = 0, value = 0, out = 0;
};

struct BlockParams {
  AttentionParams self;
  AttentionParams cross;  // decoder only
  FeedForwardParams ff;
};

struct RefinerParams {
  std::size_t dim = 0;
  std::size_t heads = 1;
  bool decoder = false;
  std::vector<BlockParams> blocks;
};

// Output projections start at zero, so a fresh refiner is the identity.
RefinerParams add_refiner(ParamStore& store, const std::string& prefix, std::size_t dim, std::size_t heads,
                          std::size_t blocks, std::size_t ff_hidden, bool decoder, CounterRng& rng);

struct AttentionRecord {
  std::size_t level = 0;
  std::size_t block = 0;
  std::size_t head = 0;
  std::size_t group = 0;  // sequence within the batch
  bool cross = false;
  std::size_t rows = 0, cols = 0;
  std::vector<double> weights;  // row-major, each row sums to 1
};

// Collects attention matrices during a forward pass when non-null.
struct AttentionSink {
  std::size_t level = 0;
  std::vector<AttentionRecord>* records = nullptr;
};

// seq holds `groups` sequences of equal length stacked by rows.
Var encoder_refine(ParamBinder& pb, const RefinerParams& p, Var seq, std::size_t groups,
                   const AttentionSink& sink = {});

// dec holds `groups` sequences; enc holds groups / kv_repeat sequences, dec
// sequence g reading encoder sequence g / kv_repeat.
Var decoder_refine(ParamBinder& pb, const RefinerParams& p, Var dec, Var enc, std::size_t groups,
                   std::size_t kv_repeat = 1, const AttentionSink& sink = {});

}  // namespace ufo::refiner
