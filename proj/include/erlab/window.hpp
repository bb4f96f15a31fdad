#pragma once

#include <cstddef>
#include <vector>

namespace erlab {

/// Window parameters of the functional statistics. Times on the t-grid are
/// addressed by the integer index l with t = l * epsilon, so the integer
/// parts [t/epsilon] and tau(t, N) never pass through a floating floor of t.
struct WindowParams {
  double epsilon = 0.0;
  double horizon = 1.0;        // T
  std::size_t grid = 8;        // N
  std::vector<double> c{1.0};  // c on equal pieces of [0, T]
  double c_bound = 0.0;        // c_hat; 0 means max(c, 1/c) over the pieces
  std::size_t segments = 8;    // K
  std::size_t stride = 0;      // 0 means default_stride(epsilon)

  /// max(1, floor(ln^2(1/epsilon))).
  static std::size_t default_stride(double epsilon);

  /// Throws ValidationError naming the violated constraint.
  void validate() const;

  double log_inv_epsilon() const;
  std::size_t effective_stride() const { return stride ? stride : default_stride(epsilon); }
  /// floor(T / epsilon): the last index of the t-grid.
  std::size_t last_index() const;
  double time(std::size_t l) const { return static_cast<double>(l) * epsilon; }
  /// floor(N t / T) for t = l * epsilon.
  std::size_t grid_cell(std::size_t l) const;
  /// tau(t, N) = floor(N t / T) T / N.
  double tau(std::size_t l) const;
  double c_at_time(double s) const;
  /// c evaluated at tau(t, N).
  double c_at(std::size_t l) const { return c_at_time(tau(l)); }
  /// b_t(epsilon, N) = c_{tau(t,N)} ln(1/epsilon), the window at u = 1.
  double window(std::size_t l) const { return c_at(l) * log_inv_epsilon(); }
  double max_window() const;
};

}  // namespace erlab
