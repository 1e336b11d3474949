#pragma once

// Shared helpers for the test binaries (not part of the library).

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace testsupport {

// Distance in representable doubles, sign-aware; 0 means bitwise equal.
// NaNs and infinities never match anything.
inline std::uint64_t ulp_distance(double a, double b) {
  if (std::isnan(a) || std::isnan(b) || std::isinf(a) || std::isinf(b))
    return UINT64_MAX;
  // Monotone order-preserving map from doubles to uint64.
  auto key = [](double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, 8);
    return (u & 0x8000000000000000ULL) ? ~u : (u | 0x8000000000000000ULL);
  };
  const std::uint64_t ka = key(a), kb = key(b);
  return ka > kb ? ka - kb : kb - ka;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json load_reference() {
  const std::string path =
      std::string(PROBSARAH_TEST_DATA_DIR) + "/reference_values.json";
  return nlohmann::json::parse(read_file(path));
}

}  // namespace testsupport
