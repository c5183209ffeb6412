#include "swingup/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace swingup {

namespace {

constexpr std::string_view kMagic = "swingup-checkpoint 1";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void append_le(std::string& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

}  // namespace

const NamedNetwork* PolicyCheckpoint::find(std::string_view name) const {
  for (const auto& n : networks)
    if (n.name == name) return &n;
  return nullptr;
}

NamedNetwork* PolicyCheckpoint::find(std::string_view name) {
  for (auto& n : networks)
    if (n.name == name) return &n;
  return nullptr;
}

Policy PolicyCheckpoint::policy() const {
  const NamedNetwork* net = find("policy");
  if (!net) throw CheckpointError("checkpoint has no policy network");
  return {net->arch, net->params};
}

void PolicyCheckpoint::set_policy(const Policy& policy) {
  if (NamedNetwork* net = find("policy")) {
    net->arch = policy.arch;
    net->params = policy.params;
  } else {
    networks.insert(networks.begin(), {"policy", policy.arch, policy.params});
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string serialize_checkpoint(const PolicyCheckpoint& checkpoint) {
  std::string payload;
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& net : checkpoint.networks) {
    if (net.params.size() != net.arch.param_count())
      throw CheckpointError("network '" + net.name + "' parameter count does not match its architecture");
    nets.push_back({{"name", net.name},
                    {"layer_sizes", net.arch.layer_sizes},
                    {"activation", to_string(net.arch.activation)},
                    {"param_count", net.params.size()}});
    for (double v : net.params) append_le(payload, v);
  }
  nlohmann::json header = {{"networks", nets},
                           {"seed", checkpoint.seed},
                           {"metadata", checkpoint.metadata},
                           {"payload_bytes", payload.size()},
                           {"checksum", hex64(fnv1a64(payload))}};
  std::string out(kMagic);
  out += '\n';
  out += header.dump();
  out += '\n';
  out += payload;
  return out;
}

PolicyCheckpoint parse_checkpoint(std::string_view bytes) {
  const auto first = bytes.find('\n');
  if (first == std::string_view::npos || bytes.substr(0, first) != kMagic)
    throw CheckpointError("not a swingup checkpoint (bad magic line)");
  const auto second = bytes.find('\n', first + 1);
  if (second == std::string_view::npos) throw CheckpointError("checkpoint header is truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(first + 1, second - first - 1));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  const std::string_view payload = bytes.substr(second + 1);
  PolicyCheckpoint cp;
  try {
    if (payload.size() != header.at("payload_bytes").get<std::size_t>())
      throw CheckpointError("checkpoint payload is truncated or padded: expected " +
                            std::to_string(header.at("payload_bytes").get<std::size_t>()) +
                            " bytes, found " + std::to_string(payload.size()));
    if (hex64(fnv1a64(payload)) != header.at("checksum").get<std::string>())
      throw CheckpointError("checkpoint checksum mismatch: file is corrupt");

    cp.seed = header.at("seed").get<std::uint64_t>();
    cp.metadata = header.at("metadata");
    std::size_t offset = 0;
    for (const auto& entry : header.at("networks")) {
      NamedNetwork net;
      net.name = entry.at("name").get<std::string>();
      net.arch.layer_sizes = entry.at("layer_sizes").get<std::vector<std::size_t>>();
      net.arch.activation = parse_activation(entry.at("activation").get<std::string>());
      net.arch.validate();
      const auto count = entry.at("param_count").get<std::size_t>();
      if (count != net.arch.param_count())
        throw CheckpointError("network '" + net.name + "' param_count disagrees with its layers");
      if (offset + 8 * count > payload.size())
        throw CheckpointError("checkpoint payload too short for network '" + net.name + "'");
      net.params.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        net.params[i] = read_le(payload.data() + offset + 8 * i);
        if (!std::isfinite(net.params[i]))
          throw CheckpointError("network '" + net.name + "' has a non-finite parameter");
      }
      offset += 8 * count;
      cp.networks.push_back(std::move(net));
    }
    if (offset != payload.size()) throw CheckpointError("checkpoint has trailing payload bytes");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }
  return cp;
}

void save_checkpoint(const PolicyCheckpoint& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing '" + path.string() + "'");
}

PolicyCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace swingup
