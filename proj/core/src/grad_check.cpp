#include "dadnn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dadnn/errors.hpp"
#include "dadnn/rng.hpp"

namespace dadnn::nd {

double relative_error(double analytic, double numeric) noexcept {
  return std::abs(analytic - numeric) /
         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& b : blocks) m = std::max(m, b.max_rel_error);
  return m;
}

GradCheckReport grad_check(const std::function<double()>& loss,
                           std::span<const CheckedBlock> blocks,
                           const GradCheckOptions& options) {
  const double base = loss();
  if (loss() != base) throw OracleError("grad_check: loss closure is not deterministic");

  GradCheckReport report;
  report.tolerance = options.tolerance;
  Rng rng(options.seed);
  const double h = options.step;

  for (const auto& block : blocks) {
    if (block.values.size() != block.analytic.size())
      throw OracleError("grad_check: block '" + block.name + "' has mismatched gradient size");

    std::vector<std::size_t> coords(block.values.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.coords_per_block) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(options.coords_per_block);
    }

    BlockCheck check{block.name, coords.size(), 0.0, 0};
    for (std::size_t idx : coords) {
      double& x = block.values[idx];
      const double saved = x;
      x = saved + h;
      const double up = loss();
      x = saved - h;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(block.analytic[idx], numeric);
      if (err > check.max_rel_error) {
        check.max_rel_error = err;
        check.worst_index = idx;
      }
    }
    report.blocks.push_back(std::move(check));
  }
  return report;
}

}  // namespace dadnn::nd
