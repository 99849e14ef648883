/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/mask.hpp
 *
 * Copyright 2026 The dfmvr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef DFMVR_MASK_HPP
#define DFMVR_MASK_HPP

#include "dfmvr/image.hpp"

#include <cstdint>
#include <vector>

namespace dfmvr {

inline constexpr int kDefaultDilationRadius = 20;
inline constexpr std::uint8_t kFeatureWeight = 254;
inline constexpr std::uint8_t kSkinWeight = 128;
inline constexpr std::uint8_t kBackgroundWeight = 32;

/// Throws InvalidArgument if any label is outside [0, 9] or the size is inconsistent.
void validate(const LabelMask& mask);

/// H*W*10 binary tensor with a single 1 per pixel, at the channel of its label.
std::vector<std::uint8_t> one_hot(const LabelMask& mask);

/**
 * Per-class dilation with a Euclidean disk of the given radius.
 *
 * Every non-background class is grown by the disk; where grown regions overlap,
 * the facial features (2..9) beat skin (1), which beats background (0), and
 * among features the higher class id wins. Because that order coincides with
 * the numeric order of the ids, this is a grey-level max filter over the disk.
 */
LabelMask dilate(const LabelMask& mask, int radius = kDefaultDilationRadius);

/// Features -> 254, skin -> 128, background -> 32.
WeightMap to_weight_map(const LabelMask& dilated);

/// dilate() followed by to_weight_map().
WeightMap make_weight_map(const LabelMask& mask, int radius = kDefaultDilationRadius);

} // namespace dfmvr

#endif // DFMVR_MASK_HPP
