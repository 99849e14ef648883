/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/mask.cpp
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
#include "dfmvr/mask.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/morphable_model.hpp"
#include "dfmvr/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace dfmvr {

void validate(const LabelMask& mask)
{
    if (mask.width < 0 || mask.height < 0 ||
        mask.labels.size() != static_cast<std::size_t>(mask.width) * mask.height)
    {
        throw InvalidArgument("label mask size is inconsistent");
    }
    for (const auto l : mask.labels)
    {
        if (l >= kNumClasses)
        {
            throw InvalidArgument("label " + std::to_string(l) + " is not a face class");
        }
    }
}

std::vector<std::uint8_t> one_hot(const LabelMask& mask)
{
    validate(mask);
    std::vector<std::uint8_t> out(mask.labels.size() * kNumClasses, 0);
    for (std::size_t p = 0; p < mask.labels.size(); ++p)
    {
        out[p * kNumClasses + mask.labels[p]] = 1;
    }
    return out;
}

LabelMask dilate(const LabelMask& mask, int radius)
{
    validate(mask);
    if (radius < 0)
    {
        throw InvalidArgument("dilation radius must be non-negative");
    }
    if (radius == 0)
    {
        return mask;
    }
    // Disk rows: for offset dy, columns within +-half_width[dy + radius].
    std::vector<int> half_width(2 * radius + 1);
    for (int dy = -radius; dy <= radius; ++dy)
    {
        int hw = 0;
        while ((hw + 1) * (hw + 1) + dy * dy <= radius * radius)
        {
            ++hw;
        }
        half_width[dy + radius] = hw;
    }
    LabelMask out(mask.width, mask.height);
    parallel_for(mask.height, [&](int y) {
        for (int x = 0; x < mask.width; ++x)
        {
            std::uint8_t best = 0;
            for (int dy = -radius; dy <= radius && best < kNumClasses - 1; ++dy)
            {
                const int yy = y + dy;
                if (yy < 0 || yy >= mask.height)
                {
                    continue;
                }
                const int hw = half_width[dy + radius];
                const int xa = std::max(0, x - hw), xb = std::min(mask.width - 1, x + hw);
                const std::uint8_t* row = &mask.labels[static_cast<std::size_t>(yy) * mask.width];
                for (int xx = xa; xx <= xb; ++xx)
                {
                    best = std::max(best, row[xx]);
                }
            }
            out.at(x, y) = best;
        }
    });
    return out;
}

WeightMap to_weight_map(const LabelMask& dilated)
{
    validate(dilated);
    WeightMap w{dilated.width, dilated.height, std::vector<std::uint8_t>(dilated.labels.size())};
    std::transform(dilated.labels.begin(), dilated.labels.end(), w.weights.begin(), [](std::uint8_t l) {
        if (l == static_cast<std::uint8_t>(FaceClass::background))
        {
            return kBackgroundWeight;
        }
        return l == static_cast<std::uint8_t>(FaceClass::skin) ? kSkinWeight : kFeatureWeight;
    });
    return w;
}

WeightMap make_weight_map(const LabelMask& mask, int radius)
{
    return to_weight_map(dilate(mask, radius));
}

} // namespace dfmvr
