#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "polylab/pspm.hpp"

namespace polylab {

// Shortest round-trippable decimal form; keeps data files byte-stable
// across runs and worker counts.
inline std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string digest_hex(const std::string& data) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a64(data));
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& data) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << data;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Pspm serialization: {"atoms": [[level, [x...], mass], ...]}
inline nlohmann::json pspm_to_json(const Pspm& f, int d) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& [u, m] : f.entries()) {
    nlohmann::json coords = nlohmann::json::array();
    for (int k = 0; k < d; ++k) coords.push_back(u.x[std::size_t(k)]);
    atoms.push_back(nlohmann::json::array({u.level, coords, m}));
  }
  return nlohmann::json{{"atoms", atoms}};
}

inline Pspm pspm_from_json(const nlohmann::json& j) {
  if (!j.contains("atoms") || !j.at("atoms").is_array())
    throw std::invalid_argument("pspm json: missing `atoms` array");
  Pspm f;
  for (const auto& a : j.at("atoms")) {
    if (!a.is_array() || a.size() != 3)
      throw std::invalid_argument("pspm json: atom must be [level, [x...], mass]");
    Vec x{0, 0, 0};
    auto coords = a[1].get<std::vector<std::int32_t>>();
    if (coords.empty() || coords.size() > 3)
      throw std::invalid_argument("pspm json: coordinate dimension must be 1..3");
    for (std::size_t k = 0; k < coords.size(); ++k) x[k] = coords[k];
    f.set(Atom{a[0].get<std::int32_t>(), x}, a[2].get<double>());
  }
  f.check_mass();
  return f;
}

// Top-m atom list for trajectory export.
inline nlohmann::json top_atoms_json(const Pspm& f, int d, std::size_t m) {
  return pspm_to_json(f.is_zero() ? f : truncate(f, m), d).at("atoms");
}

}  // namespace polylab
