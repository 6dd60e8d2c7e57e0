#pragma once

#include <algorithm>

namespace blinkwild {

/// Inclusive frame interval [start, end].
struct FrameInterval {
    int start = 0;
    int end = 0;

    int length() const noexcept { return end - start + 1; }
    friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

/// |intersection| / |union| over inclusive frame intervals.
inline double temporal_iou(FrameInterval a, FrameInterval b) {
    const int inter = std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start) + 1);
    const int uni = a.length() + b.length() - inter;
    return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

}  // namespace blinkwild
