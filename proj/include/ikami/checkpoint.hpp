#pragma once

#include <string>

#include <json.hpp>

#include "ikami/param_store.hpp"

namespace ikami {

// Binary file of named parameter tensors (little-endian f64 plus shapes)
// with a JSON sidecar at <path>.json carrying config and rng state.
// save/load round-trips bitwise.
void save_checkpoint(const std::string& path, const ParamStore& store, const nlohmann::json& sidecar);

struct Checkpoint {
    ParamStore store;
    nlohmann::json sidecar;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ikami
