#pragma once

namespace lrwi {

// Kept as a constant (not derived from the build tree) so that output
// manifests are byte-identical across reruns of the same binary.
inline constexpr const char* kVersion = "lrwi-0.1.0";

}  // namespace lrwi
