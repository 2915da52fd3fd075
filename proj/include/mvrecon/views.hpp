// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "mvrecon/geom.hpp"
#include "mvrecon/image.hpp"

#include <optional>
#include <vector>

namespace mvr {

/// One posed input frame.
struct View {
    Camera camera;
    Image image; // H x W x 3
    Mask mask;
    std::optional<Image> depth; // H x W x 1, +inf where the ray misses
};

using ViewSet = std::vector<View>;

/// Throws InputError unless every image and mask matches its camera.
void validate_views(const ViewSet& views);

} // namespace mvr
