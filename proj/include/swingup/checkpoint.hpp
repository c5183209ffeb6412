#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "swingup/gaussian_policy.hpp"
#include "swingup/mlp.hpp"

namespace swingup {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedNetwork {
  std::string name;
  MlpArchitecture arch;
  FlatParams params;
};

/// Policy network plus any auxiliary networks (the SAC critics).
///
/// File layout:
///   line 1  "swingup-checkpoint 1"
///   line 2  single-line JSON header: networks (name, layer_sizes, activation,
///           param_count), seed, metadata, payload_bytes, checksum (FNV-1a 64
///           of the payload, 16 hex digits)
///   rest    parameters of every network in header order, IEEE-754 binary64,
///           little-endian
struct PolicyCheckpoint {
  std::vector<NamedNetwork> networks;
  std::uint64_t seed = 0;
  nlohmann::json metadata = nlohmann::json::object();

  const NamedNetwork* find(std::string_view name) const;
  NamedNetwork* find(std::string_view name);
  /// Throws CheckpointError when no "policy" network is present.
  Policy policy() const;
  void set_policy(const Policy& policy);
};

std::uint64_t fnv1a64(std::string_view bytes);

std::string serialize_checkpoint(const PolicyCheckpoint& checkpoint);
PolicyCheckpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const PolicyCheckpoint& checkpoint, const std::filesystem::path& path);
PolicyCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace swingup
