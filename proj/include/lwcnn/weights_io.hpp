#pragma once

#include <filesystem>
#include <string_view>

#include "lwcnn/network.hpp"

namespace lwcnn {

// Weight file layout, little-endian:
//   "LWCNN1"                   6 bytes
//   config length L            uint64
//   config text                L bytes, compact JSON of NetworkConfig
//   parameters                 float32 x param_count(config), in Network::parameters() order
inline constexpr std::string_view kWeightsMagic = "LWCNN1";

void save_weights(const Network<float> &network, const std::filesystem::path &path);

/// Throws std::runtime_error on bad magic, truncated data, or payload size mismatch.
Network<float> load_weights(const std::filesystem::path &path);

}  // namespace lwcnn
