#pragma once

#include "boxlab/labeler.hpp"
#include "boxlab/overlap.hpp"

namespace boxlab {

// Fuses determinate box membership with teacher predictions into scene-level
// soft masks. Points inside exactly one box get hard labels; overlap points
// get teacher sigmoid confidences with the trichotomy tie-break applied
// (the losing mask is clamped to 0.5, background gets 0 for both); points
// covered by several pairs keep the maximum confidence per instance.
PseudoLabelSet label_scene(const Scene& scene, const std::vector<OverlapSample>& samples,
                           const LabelerParams& teacher);

} // namespace boxlab
