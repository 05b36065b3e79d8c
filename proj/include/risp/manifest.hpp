#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "risp/config.hpp"

namespace risp {

/// FNV-1a over bytes; used for config/checkpoint fingerprints in manifests.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t hash_string(const std::string& s) {
  return fnv1a(s.data(), s.size());
}

inline std::uint64_t hash_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    h = fnv1a(buf, static_cast<std::size_t>(is.gcount()), h);
    if (!is) break;
  }
  return h;
}

/// Run manifest written next to every subcommand's outputs.
inline nlohmann::json make_manifest(const std::string& command,
                                    const SystemConfig& cfg,
                                    std::uint64_t seed) {
  nlohmann::json j;
  j["tool"] = "risp";
  j["format_version"] = 1;
  j["command"] = command;
  j["config"] = cfg;
  j["config_hash"] = hash_string(nlohmann::json(cfg).dump());
  j["seed"] = seed;
  return j;
}

inline void write_manifest(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::trunc);
  os << j.dump(2) << "\n";
}

}  // namespace risp
