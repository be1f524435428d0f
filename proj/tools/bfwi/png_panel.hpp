#pragma once

#include <filesystem>
#include <vector>

#include "bfwi/tensor.hpp"

namespace bfwi::cli {

/// Write single-channel fields side by side as an RGB PNG.
///
/// Values are mapped through a fixed perceptual colormap with [lo, hi]
/// pinned, so panels from different runs share one color scale.
void write_panel_png(const std::filesystem::path& path, const std::vector<const Field*>& panels, double lo,
                     double hi, int scale = 4);

}  // namespace bfwi::cli
