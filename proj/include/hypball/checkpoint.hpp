#pragma once

#include <map>
#include <string>
#include <vector>

#include "hypball/layers.hpp"

namespace hypball::ckpt {

using vm::Vec;

// Checkpoints are a flat name -> float-array map stored as one JSON object;
// keys are the parameter names assigned at model construction
// (e.g. "backbone.0.weight", "head.p_pre.0").
std::map<std::string, Vec> to_map(const std::vector<nn::Param*>& params);

void save_checkpoint(const std::string& path, const std::vector<nn::Param*>& params);

// Assigns by name and validates sizes. A missing or extra key, or a length
// mismatch, is a SchemaError: the checkpoint does not describe this model.
void load_checkpoint(const std::string& path, const std::vector<nn::Param*>& params);

std::map<std::string, Vec> read_checkpoint_map(const std::string& path);

}  // namespace hypball::ckpt
