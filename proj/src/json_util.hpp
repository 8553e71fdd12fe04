#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <json.hpp>

namespace noisebound::detail {

// Rounds every floating value to the given number of significant digits so
// dumps print at most that many; non-finite values become null.
inline void round_floats(nlohmann::json& j, int digits = 9) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      j = nullptr;
      return;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    j = std::strtod(buf, nullptr);
  } else if (j.is_structured()) {
    for (auto& v : j) round_floats(v, digits);
  }
}

}  // namespace noisebound::detail
