#pragma once

#include <cstdint>
#include <vector>

#include "blinkwild/dataset.hpp"
#include "blinkwild/interval.hpp"

namespace blinkwild {

/// Rendering fixtures for the synthetic face generator. These values make the
/// blink task learnable without being trivially separable; they are not
/// claims about real footage.
struct SynthParams {
    int width = 192;
    int height = 128;
    double noise_sigma = 4.0;
    double max_drift = 0.5;        // px per frame, per axis
    double min_interocular = 50.0;
    double max_interocular = 70.0;
    double brightness_shift = 20.0;
};

/// Deterministic synthetic clip of a two-eyed face. Blink clips close and
/// reopen both eyes with the minimum aperture near the middle frame;
/// non-blink clips hold the eyes open with small jitter.
Clip synth_clip(std::uint64_t seed, Label label, int length, const SynthParams& params = {});

struct SynthStream {
    Clip clip;                          // label Blink iff any blink was rendered
    std::vector<FrameInterval> blinks;  // ground-truth blink extents
};

/// Untrimmed stream with a blink centred at each of `blink_centers`. Each
/// ground-truth interval is the sample_length-frame extent whose closed frame
/// sits at offset sample_length / 2.
SynthStream synth_stream(std::uint64_t seed, int length, const std::vector<double>& blink_centers,
                         int sample_length = kDefaultClipLength, const SynthParams& params = {});

}  // namespace blinkwild
