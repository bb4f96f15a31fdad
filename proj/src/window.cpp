#include "erlab/window.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "erlab/errors.hpp"

namespace erlab {

std::size_t WindowParams::default_stride(double epsilon) {
  const double l = std::log(1.0 / epsilon);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(l * l)));
}

void WindowParams::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ValidationError(
        fmt::format("window.epsilon: {} must lie in (0, 1) so that ln(1/epsilon) > 0", epsilon));
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ValidationError(fmt::format("window.T: {} must be finite and > 0", horizon));
  }
  if (grid == 0) throw ValidationError("window.N: must be >= 1");
  if (segments == 0) throw ValidationError("window.K: must be >= 1");
  if (c.empty()) throw ValidationError("window.c: need at least one value");
  for (double v : c) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError(fmt::format("window.c: value {} must be finite and > 0", v));
    }
    if (c_bound > 0.0 && (v < 1.0 / c_bound || v > c_bound)) {
      throw ValidationError(fmt::format("window.c: value {} outside [1/c_hat, c_hat] = [{}, {}]",
                                        v, 1.0 / c_bound, c_bound));
    }
  }
}

double WindowParams::log_inv_epsilon() const { return std::log(1.0 / epsilon); }

std::size_t WindowParams::last_index() const {
  // Guard against T / epsilon landing just below an integer.
  return static_cast<std::size_t>(std::floor(horizon / epsilon * (1.0 + 1e-12)));
}

std::size_t WindowParams::grid_cell(std::size_t l) const {
  const double q = static_cast<double>(grid) * static_cast<double>(l) * epsilon / horizon;
  return static_cast<std::size_t>(std::floor(q * (1.0 + 1e-12)));
}

double WindowParams::tau(std::size_t l) const {
  return static_cast<double>(grid_cell(l)) * horizon / static_cast<double>(grid);
}

double WindowParams::c_at_time(double s) const {
  const auto pieces = c.size();
  const double q = static_cast<double>(pieces) * s / horizon;
  const auto i = std::min(pieces - 1, static_cast<std::size_t>(std::max(0.0, std::floor(q * (1.0 + 1e-12)))));
  return c[i];
}

double WindowParams::max_window() const {
  return *std::max_element(c.begin(), c.end()) * log_inv_epsilon();
}

}  // namespace erlab
