#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace dadnn::nd {

/// One parameter block under test: values are perturbed in place, the
/// analytic gradient is compared against central differences.
struct CheckedBlock {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct BlockCheck {
  std::string name;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<BlockCheck> blocks;
  double tolerance = 0.0;

  double max_rel_error() const;
  bool passed() const { return max_rel_error() <= tolerance; }
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  std::size_t coords_per_block = 50;  // whole block when smaller
  std::uint64_t seed = 0x6a09e667f3bcc908ULL;
};

// |a - n| / max(1e-8, |a| + |n|)
double relative_error(double analytic, double numeric) noexcept;

/// Central-difference check of `analytic` against `loss`, which must read the
/// current contents of every block's `values`. Throws OracleError when two
/// evaluations at the same point disagree.
GradCheckReport grad_check(const std::function<double()>& loss,
                           std::span<const CheckedBlock> blocks,
                           const GradCheckOptions& options = {});

}  // namespace dadnn::nd
