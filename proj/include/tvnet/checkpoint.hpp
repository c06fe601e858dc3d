#pragma once

#include <string>

#include "tvnet/layers.hpp"

namespace tvnet::nn {

// Parameter checkpoint, bit-exact round trip:
//   magic "TVNC" | version u32 LE | records...
// record: name_len u32 LE | name bytes | rank u64 LE | dims u64 LE each |
//         values float64 LE. Records run to end of file.
void save_checkpoint(const std::string& path, const ParameterSet& params);

// Loads into an existing parameter set; every stored record must match an
// existing parameter's name and shape (shape mismatch means the checkpoint was
// written by a differently configured model).
void load_checkpoint(const std::string& path, ParameterSet& params);

}  // namespace tvnet::nn
