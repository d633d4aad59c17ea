#pragma once

#include <filesystem>
#include <string>

#include "vafnet/network.hpp"

namespace vafnet {

inline constexpr int kModelFormatVersion = 1;

// JSON text; doubles are written with round-trip precision.
std::string model_to_string(const Network& net);
Network model_from_string(const std::string& text);

void save_model(const Network& net, const std::filesystem::path& path);
Network load_model(const std::filesystem::path& path);

}  // namespace vafnet
