#pragma once

#include "strokefield/perception.hpp"

#include <stdexcept>
#include <string>

namespace strokefield::io {

struct BankFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary layout, little-endian throughout:
//   8 bytes  magic "SFBANK1\0"
//   u32      layer count
//   per layer: u32 out channels, u32 in channels,
//              float32[out*in*9] kernel taps in (out, in, ky, kx) order,
//              float32[out] biases
// The payload must end exactly where the declared sizes say it does.
void save_bank(const FeatureBank<double>& bank, const std::string& path);
FeatureBank<double> load_bank(const std::string& path);

}  // namespace strokefield::io
