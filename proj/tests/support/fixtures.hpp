#pragma once

// Seeded generators shared by the unit tests and the acceptance suite.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blinkwild/features.hpp"
#include "blinkwild/image.hpp"
#include "blinkwild/mslstm.hpp"
#include "blinkwild/pipeline.hpp"
#include "blinkwild/random.hpp"
#include "blinkwild/synth.hpp"

namespace blinkwild::fixture {

inline GrayFrame random_patch(Rng& rng, int width, int height, int levels = 256) {
    GrayFrame f(width, height);
    for (double& v : f.pixels()) v = static_cast<double>(rng.index(static_cast<std::uint64_t>(levels)));
    return f;
}

// Smooth texture (sum of random sinusoids plus noise), large enough to crop
// translated views from.
inline GrayFrame smooth_texture(Rng& rng, int width, int height) {
    struct Wave {
        double fx, fy, phase, amp;
    };
    std::vector<Wave> waves;
    for (int i = 0; i < 6; ++i) {
        waves.push_back({rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(0.0, 6.28), rng.uniform(10, 30)});
    }
    GrayFrame f(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double v = 128.0 + 4.0 * rng.normal();
            for (const Wave& w : waves) v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
            f.at(x, y) = std::clamp(std::round(v), 0.0, 255.0);
        }
    }
    return f;
}

inline GrayFrame window_of(const GrayFrame& big, int x0, int y0, int width, int height) {
    GrayFrame f(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) f.at(x, y) = big.at(x0 + x, y0 + y);
    }
    return f;
}

inline FeatureSequence random_sequence(Rng& rng, std::size_t steps, double scale = 1.0) {
    FeatureSequence seq;
    for (std::size_t t = 0; t < steps; ++t) {
        StepFeature s;
        for (double& v : s.appearance) v = scale * rng.uniform(0.0, 0.1);
        for (double& v : s.motion) v = scale * rng.uniform(-0.05, 0.05);
        seq.steps.push_back(s);
    }
    return seq;
}

inline std::vector<LbpHistogram> annotated_appearance(const Clip& clip, Eye eye) {
    const std::vector<EyeBox> boxes = *annotated_boxes(clip, eye);
    std::vector<LbpHistogram> app;
    for (std::size_t t = 0; t < boxes.size(); ++t) app.push_back(frame_appearance(clip.frames[t], boxes[t]));
    return app;
}

// Per-frame appearance along the tracked boxes the pipeline produces, or
// nothing when the track is lost.
inline std::optional<std::vector<LbpHistogram>> tracked_appearance(const Clip& clip, Eye eye) {
    const TrackedStream s = track_eye(clip.frames, AnnotationLocator(clip.annotations), eye);
    if (s.lost()) return std::nullopt;
    std::vector<LbpHistogram> app;
    for (std::size_t t = 0; t < s.boxes.size(); ++t) app.push_back(frame_appearance(clip.frames[t], s.boxes[t]));
    return app;
}

// Both views a model is trained on: annotated crops and tracked crops.
inline std::vector<std::vector<LbpHistogram>> training_views(const Clip& clip, Eye eye) {
    std::vector<std::vector<LbpHistogram>> views{annotated_appearance(clip, eye)};
    if (auto tracked = tracked_appearance(clip, eye)) views.push_back(std::move(*tracked));
    return views;
}

// Training pairs for the verification task: blink and non-blink clip i share
// a seed, both eyes of each clip become samples.
inline std::vector<TrainingSample> clip_samples(std::uint64_t seed, int pairs, int length = kDefaultClipLength) {
    std::vector<TrainingSample> out;
    for (int i = 0; i < pairs; ++i) {
        for (Label label : {Label::NonBlink, Label::Blink}) {
            const Clip c = synth_clip(mix_seed(seed, 100 + static_cast<std::uint64_t>(i)), label, length);
            for (Eye eye : kEyes) {
                for (const auto& app : training_views(c, eye)) out.push_back({sequence_from_appearance(app), label});
            }
        }
    }
    return out;
}

// Extra windows cut from untrimmed training streams so the detector sees the
// background it will slide over: every fourth window of a blink-free stream
// as a negative, and the annotated blink window shifted by -1..1 as positives.
inline std::vector<TrainingSample> stream_samples(std::uint64_t seed, int streams, int length = 50,
                                                  int window = kDefaultClipLength) {
    std::vector<TrainingSample> out;
    for (int i = 0; i < streams; ++i) {
        const auto k = static_cast<std::uint64_t>(i);
        const SynthStream neg = synth_stream(mix_seed(seed, 40000 + k), length, {}, window);
        for (Eye eye : kEyes) {
            for (const auto& app : training_views(neg.clip, eye)) {
                for (std::size_t s = static_cast<std::size_t>(i % 4); s + window <= app.size(); s += 4) {
                    out.push_back({sequence_from_appearance(std::span(app).subspan(s, window)), Label::NonBlink});
                }
            }
        }
        Rng rng(mix_seed(seed, 600 + k));
        const SynthStream pos =
            synth_stream(mix_seed(seed, 50000 + k), length, {rng.uniform(12.0, length - 13.0)}, window);
        const int start = pos.blinks.front().start;
        for (Eye eye : kEyes) {
            for (const auto& app : training_views(pos.clip, eye)) {
                for (int d = -1; d <= 1; ++d) {
                    const int s = start + d;
                    if (s < 0 || s + window > static_cast<int>(app.size())) continue;
                    out.push_back(
                        {sequence_from_appearance(std::span(app).subspan(static_cast<std::size_t>(s), window)),
                         Label::Blink});
                }
            }
        }
    }
    return out;
}

}  // namespace blinkwild::fixture

#include <filesystem>

#include <unistd.h>

namespace blinkwild::fixture {

// Fresh directory under the system temp dir, removed with the object.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("blinkwild_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ignored;
        std::filesystem::remove_all(path_, ignored);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// n constant 4x4 frames whose value is the frame index, for tracking frames
// through reordering operations.
inline Clip indexed_clip(int n, Label label) {
    Clip c;
    c.label = label;
    c.source_id = "indexed";
    for (int i = 0; i < n; ++i) {
        c.frames.emplace_back(4, 4, static_cast<double>(i));
        AnnotationRecord r;
        r.frame_index = static_cast<std::size_t>(i);
        r.face = {0, 0, 4, 4};
        r.left = EyeCenter::at(1, 1);
        r.right = EyeCenter::at(2, 2);
        c.annotations.push_back(r);
    }
    return c;
}

inline std::vector<int> frame_ids(const Clip& c) {
    std::vector<int> ids;
    for (const GrayFrame& f : c.frames) ids.push_back(static_cast<int>(f.at(0, 0)));
    return ids;
}

}  // namespace blinkwild::fixture
