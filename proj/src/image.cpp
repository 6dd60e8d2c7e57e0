#include "blinkwild/image.hpp"

#include <algorithm>
#include <numeric>

#include "blinkwild/error.hpp"

namespace blinkwild {

GrayFrame::GrayFrame(int width, int height, double fill)
    : width_(width), height_(height) {
    if (width < 1 || height < 1) {
        throw Error(ErrorKind::InvalidArgument, "frame dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayFrame::GrayFrame(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1) {
        throw Error(ErrorKind::InvalidArgument, "frame dimensions must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(width) * height) {
        throw Error(ErrorKind::InvalidArgument, "frame data length does not match width x height");
    }
}

double GrayFrame::clamped(int x, int y) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return at(x, y);
}

double GrayFrame::mean() const {
    if (data_.empty()) return 0.0;
    return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

}  // namespace blinkwild
