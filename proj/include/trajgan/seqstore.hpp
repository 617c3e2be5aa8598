#pragma once
// Binary container for prepared sequence sets: one shared (steps, dims,
// feature names) header, then per sequence packed float32 values, float64
// relative times and bit-packed observation masks. Scaler parameters travel
// in their own sidecar file, not here.

#include <stdexcept>
#include <string>
#include <vector>

#include "trajgan/ais_ingest.hpp"

namespace trajgan {

struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All sequences must agree on steps, dims and feature names; values are
// narrowed to float32 on write.
void save_sequences(const std::vector<AisSequence>& seqs,
                    const std::string& path);

std::vector<AisSequence> load_sequences(const std::string& path);

}  // namespace trajgan
