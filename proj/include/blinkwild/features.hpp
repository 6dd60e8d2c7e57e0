#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "blinkwild/dataset.hpp"
#include "blinkwild/image.hpp"

namespace blinkwild {

inline constexpr std::size_t kLbpBins = 59;  // 58 uniform patterns + 1 catch-all
inline constexpr std::size_t kStepDim = 2 * kLbpBins;
inline constexpr EyeSize kDefaultPatchSize{24, 24};

using LbpHistogram = std::array<double, kLbpBins>;

/// Appearance (uniform LBP of frame t) and motion (its difference to frame
/// t - 1). The concatenated layout is appearance at [0, 59), motion at [59, 118).
struct StepFeature {
    LbpHistogram appearance{};
    std::array<double, kLbpBins> motion{};

    std::array<double, kStepDim> concatenated() const;
    static StepFeature from_concatenated(std::span<const double> values);

    friend bool operator==(const StepFeature&, const StepFeature&) = default;
};

struct FeatureSequence {
    std::vector<StepFeature> steps;

    std::size_t size() const noexcept { return steps.size(); }
    friend bool operator==(const FeatureSequence&, const FeatureSequence&) = default;
};

/// Eye box tracked or annotated for one frame.
struct EyeBox {
    double cx = 0.0;
    double cy = 0.0;
    int h = 0;
    int w = 0;

    Point center() const { return {cx, cy}; }
    EyeSize size() const { return {h, w}; }
    friend bool operator==(const EyeBox&, const EyeBox&) = default;
};

/// Bilinear resampling with pixel-centre alignment (the OpenCV convention).
GrayFrame resize_patch(const GrayFrame& patch, EyeSize out);

/// Maps each 8-bit code to its histogram bin: uniform codes (at most two
/// circular 0/1 transitions) take bins 0..57 in ascending code order, every
/// other code lands in bin 58.
const std::array<std::uint8_t, 256>& uniform_lbp_table();

/// Uniform LBP over the 3x3 neighbourhood of every interior pixel
/// (neighbour >= centre sets the bit), L1 normalised.
LbpHistogram uniform_lbp(const GrayFrame& patch);

std::array<double, kLbpBins> motion_feature(const LbpHistogram& curr, const LbpHistogram& prev);

/// Appearance histogram of one frame's eye box after resizing to patch_size.
LbpHistogram frame_appearance(const GrayFrame& frame, const EyeBox& region, EyeSize patch_size = kDefaultPatchSize);

/// N frames with one region each give N - 1 steps; step t describes frame t + 1.
FeatureSequence featurize_clip(const Clip& clip, std::span<const EyeBox> regions,
                               EyeSize patch_size = kDefaultPatchSize);

/// Same construction from precomputed per-frame appearance histograms.
FeatureSequence sequence_from_appearance(std::span<const LbpHistogram> appearance);

/// Uncentred correlation coefficient (fc . fn) / (|fc| |fn|).
double feature_correlation(std::span<const double> fc, std::span<const double> fn);

/// Feature dump: little-endian u32 step_count, u32 dim, then row-major float32.
void write_feature_dump(const FeatureSequence& seq, const std::filesystem::path& path);
FeatureSequence read_feature_dump(const std::filesystem::path& path);
void write_feature_csv(const FeatureSequence& seq, const std::filesystem::path& path);

}  // namespace blinkwild
