#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace owr {

using ClassId = std::int64_t;
using FeatureVector = std::vector<double>;

/// Reserved label returned by open-world prediction when a sample is rejected
/// by every known class. Real class ids must be >= 0.
inline constexpr ClassId kUnknownLabel = -1;

struct OpenPrediction {
    ClassId label = kUnknownLabel;
    double confidence = 0.0;
};

inline bool all_finite(const FeatureVector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace owr
