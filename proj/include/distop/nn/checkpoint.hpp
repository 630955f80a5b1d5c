#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "distop/nn/mlp.hpp"

namespace distop::nn {

// Container layout:
//   8 bytes  magic "DTCKPT01"
//   8 bytes  little-endian u64 header length
//   header   UTF-8 JSON: {"networks": [{"name", "sizes", "hidden", "output", "offset", "count"}], "meta": {...}}
//   payload  float64 little-endian parameters, layer by layer (weight column-major, then bias)
inline constexpr char kCheckpointMagic[9] = "DTCKPT01";

struct Checkpoint {
  std::map<std::string, Mlp> networks;
  nlohmann::json meta = nlohmann::json::object();
};

namespace detail {

inline void append_doubles(std::vector<char>& out, const double* data, Eigen::Index n) {
  const std::size_t bytes = static_cast<std::size_t>(n) * sizeof(double);
  const std::size_t at = out.size();
  out.resize(at + bytes);
  std::memcpy(out.data() + at, data, bytes);
}

}  // namespace detail

inline std::vector<char> encode_checkpoint(const Checkpoint& ckpt) {
  static_assert(sizeof(double) == 8);
  std::vector<char> payload;
  nlohmann::json header;
  header["networks"] = nlohmann::json::array();
  for (const auto& [name, net] : ckpt.networks) {
    const std::size_t offset = payload.size() / sizeof(double);
    net.for_each_tensor([&](const std::string&, const double* data, Eigen::Index n) {
      detail::append_doubles(payload, data, n);
    });
    header["networks"].push_back({{"name", name},
                                  {"sizes", net.sizes()},
                                  {"hidden", to_string(net.hidden_activation())},
                                  {"output", to_string(net.output_activation())},
                                  {"offset", offset},
                                  {"count", net.parameter_count()}});
  }
  header["meta"] = ckpt.meta;
  const std::string text = header.dump();
  std::vector<char> out(kCheckpointMagic, kCheckpointMagic + 8);
  std::uint64_t len = text.size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((len >> (8 * i)) & 0xff));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

inline Checkpoint decode_checkpoint(const std::vector<char>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    throw InvalidArgument("not a checkpoint container");
  }
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  if (16 + len > bytes.size()) throw InvalidArgument("truncated checkpoint header");
  const auto header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(len));
  const char* payload = bytes.data() + 16 + len;
  const std::size_t payload_doubles = (bytes.size() - 16 - len) / sizeof(double);

  Checkpoint ckpt;
  ckpt.meta = header.value("meta", nlohmann::json::object());
  Rng dummy(0);
  for (const auto& entry : header.at("networks")) {
    const auto sizes = entry.at("sizes").get<std::vector<int>>();
    Mlp net(sizes, activation_from_string(entry.at("hidden").get<std::string>()), dummy, 1.0,
            activation_from_string(entry.at("output").get<std::string>()));
    std::size_t cursor = entry.at("offset").get<std::size_t>();
    if (cursor + entry.at("count").get<std::size_t>() > payload_doubles) {
      throw InvalidArgument("truncated checkpoint payload");
    }
    net.for_each_tensor([&](const std::string&, double* data, Eigen::Index n) {
      std::memcpy(data, payload + cursor * sizeof(double), static_cast<std::size_t>(n) * sizeof(double));
      cursor += static_cast<std::size_t>(n);
    });
    ckpt.networks.emplace(entry.at("name").get<std::string>(), std::move(net));
  }
  return ckpt;
}

inline void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace distop::nn
