#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "kips/harness/config.hpp"
#include "kips/version.hpp"

namespace kips::harness {

// FNV-1a, stable across platforms and runs (std::hash is not).
inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t config_hash(const Config& cfg) { return fnv1a(cfg.canonical_text()); }

// Records what produced an output directory: library version, hash of the
// canonical config text and the master seed. No timestamps, so reruns are
// byte-identical.
inline void write_manifest(const std::string& path, const Config& cfg, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("manifest: cannot write " + path);
  out << "kips_version = " << kVersion << "\n";
  std::ostringstream hash;
  hash << std::hex << config_hash(cfg);
  out << "config_hash = " << hash.str() << "\n";
  out << "master_seed = " << seed << "\n";
  if (!out) throw std::runtime_error("manifest: write failed for " + path);
}

}  // namespace kips::harness
