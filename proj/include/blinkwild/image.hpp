#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace blinkwild {

/// Single-channel image, row-major, intensities in [0, 255].
///
/// Values are stored as doubles so that resampled patches keep their exact
/// interpolated intensity; frames loaded from PGM hold integral values.
class GrayFrame {
public:
    GrayFrame() = default;
    GrayFrame(int width, int height, double fill = 0.0);
    GrayFrame(int width, int height, std::vector<double> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t size() const noexcept { return data_.size(); }

    double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    /// Edge-replicated access; coordinates outside the frame clamp to the border.
    double clamped(int x, int y) const;

    std::span<const double> pixels() const noexcept { return data_; }
    std::span<double> pixels() noexcept { return data_; }

    double mean() const;

    friend bool operator==(const GrayFrame&, const GrayFrame&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

}  // namespace blinkwild
