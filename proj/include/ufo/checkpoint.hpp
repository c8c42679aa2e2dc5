#pragma once

#include <iosfwd>
#include <string>

#include "ufo/model.hpp"

// Binary layout, little-endian: magic "UFOCKPT1", u32 version, u64 length +
// model config JSON, u32 tensor count, then per tensor u32 name length,
// name, u64 rows, u64 cols and rows*cols float32 values.
namespace ufo::model {

void write_checkpoint(const Model& model, std::ostream& out);
// Throws ParseError ("bad checkpoint header", truncation, shape mismatch).
Model read_checkpoint(std::istream& in);

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace ufo::model
