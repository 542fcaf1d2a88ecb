#pragma once

#include <cstdint>
#include <vector>

namespace dadnn {

/// One ad impression. Scene ids are 1..K for served scenes; id 0 is reserved
/// for the auxiliary pretraining scene.
struct Instance {
  int scene_id = 1;
  std::vector<std::uint32_t> features;  // one categorical index per field
  int label = 0;                        // click: 0 or 1

  bool operator==(const Instance&) const = default;
};

}  // namespace dadnn
