#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "blinkwild/dataset.hpp"
#include "blinkwild/features.hpp"
#include "blinkwild/interval.hpp"
#include "blinkwild/mslstm.hpp"
#include "blinkwild/tracker.hpp"

namespace blinkwild {

enum class Eye { Left = 0, Right = 1 };
inline constexpr std::array<Eye, 2> kEyes{Eye::Left, Eye::Right};

std::string_view to_string(Eye eye);
Eye parse_eye(std::string_view text);

struct LocatedEyes {
    EyeCenter left;
    EyeCenter right;
    FaceBox face;

    const EyeCenter& eye(Eye e) const { return e == Eye::Left ? left : right; }
};

/// Source of eye positions for initialisation and re-localisation. Returning
/// nothing is a normal outcome. Implementations must be safe to call from
/// two threads at once (one per eye).
class EyeLocator {
public:
    virtual ~EyeLocator() = default;
    virtual std::optional<LocatedEyes> locate(const GrayFrame& frame, std::size_t frame_index) const = 0;
};

/// Replays annotations; frames without any visible eye, or past the end of
/// the annotation list, yield nothing.
class AnnotationLocator final : public EyeLocator {
public:
    explicit AnnotationLocator(std::vector<AnnotationRecord> records);
    std::optional<LocatedEyes> locate(const GrayFrame& frame, std::size_t frame_index) const override;

private:
    std::vector<AnnotationRecord> records_;
};

/// Locator that never finds anything.
class NullLocator final : public EyeLocator {
public:
    std::optional<LocatedEyes> locate(const GrayFrame&, std::size_t) const override { return std::nullopt; }
};

struct TrackParams {
    KcfParams kcf;
    double relocalize_below = 0.25;
};

struct TrackedStream {
    std::vector<EyeBox> boxes;    // one per frame before lost_from
    std::vector<double> scores;   // tracker peak per frame; 1 on (re)initialisation
    std::vector<std::size_t> relocalizations;  // frames where the locator was re-invoked
    std::optional<std::size_t> lost_from;

    bool lost() const noexcept { return lost_from.has_value(); }
    /// True when a box exists for every frame in [first, last].
    bool covers(std::size_t first, std::size_t last) const noexcept { return last < boxes.size() && first <= last; }
};

/// Frame-by-frame tracker for one eye. The locator initialises it on the
/// first frame and is consulted again whenever the peak score drops below
/// relocalize_below.
class EyeTracker {
public:
    EyeTracker(const EyeLocator& locator, Eye eye, const TrackParams& params = {});

    /// Feeds the next frame; returns its box, or nothing once the track is lost.
    std::optional<EyeBox> step(const GrayFrame& frame);

    const TrackedStream& stream() const noexcept { return stream_; }
    TrackedStream take_stream() { return std::move(stream_); }

private:
    const EyeLocator* locator_;
    Eye eye_;
    TrackParams params_;
    std::optional<KcfState> state_;
    std::size_t next_index_ = 0;
    TrackedStream stream_;
};

/// Tracks one eye through all frames.
TrackedStream track_eye(std::span<const GrayFrame> frames, const EyeLocator& locator, Eye eye,
                        const TrackParams& params = {});

/// Both eyes; runs them concurrently when the thread budget allows.
std::array<TrackedStream, 2> track_eyes(std::span<const GrayFrame> frames, const EyeLocator& locator,
                                        const TrackParams& params = {});

struct EyeVerdict {
    Label label = Label::NonBlink;
    double confidence = 0.0;
    bool lost = false;
};

struct VerifyParams {
    TrackParams track;
    EyeSize patch_size = kDefaultPatchSize;
};

struct ClipVerification {
    std::array<EyeVerdict, 2> verdicts;
    std::array<TrackedStream, 2> tracks;
};

/// Tracks, featurises and classifies each eye of a polished clip. Lost eyes
/// come back as non-blink with confidence 0.
ClipVerification verify_clip_tracked(const Clip& clip, const EyeLocator& locator, const MsLstmModel& model,
                                     const VerifyParams& params = {});

/// Feature sequences from the crops verification would see: tracked boxes,
/// nothing for an eye whose track is lost.
std::array<std::optional<FeatureSequence>, 2> tracked_sequences(const Clip& clip, const EyeLocator& locator,
                                                                const VerifyParams& params = {});

std::array<EyeVerdict, 2> verify_clip(const Clip& clip, const EyeLocator& locator, const MsLstmModel& model,
                                      const VerifyParams& params = {});

/// Eye boxes straight from the annotations, sized from frame 0; nothing when
/// the eye is invisible on any frame.
std::optional<std::vector<EyeBox>> annotated_boxes(const Clip& clip, Eye eye);

/// Feature sequence over annotated_boxes, used for training.
std::optional<FeatureSequence> annotated_sequence(const Clip& clip, Eye eye, EyeSize patch_size = kDefaultPatchSize);

struct BlinkEvent {
    int start = 0;
    int end = 0;  // inclusive
    double confidence = 0.0;
    Eye eye = Eye::Left;

    FrameInterval interval() const { return {start, end}; }
    friend bool operator==(const BlinkEvent&, const BlinkEvent&) = default;
};

/// Greedy temporal NMS: take the most confident proposal (ties: earlier
/// start, then left before right), drop every remaining proposal of the same
/// eye whose IoU with it exceeds iou_thresh, repeat. Output is sorted by eye,
/// start, end, then descending confidence.
std::vector<BlinkEvent> temporal_nms(std::vector<BlinkEvent> proposals, double iou_thresh);

struct DetectParams {
    int window = kDefaultClipLength;
    int stride = 1;
    double conf_thresh = 0.5;
    double iou_thresh = 0.33;
    TrackParams track;
    EyeSize patch_size = kDefaultPatchSize;
};

struct DetectResult {
    std::vector<BlinkEvent> events;
    std::vector<BlinkEvent> proposals;              // before NMS
    std::array<std::size_t, 2> windows_evaluated{};  // per eye
};

/// Sliding-window detection over an untrimmed frame sequence. Each eye is
/// tracked once; windows that reach frames after a track was lost are skipped.
DetectResult detect_stream(std::span<const GrayFrame> frames, const EyeLocator& locator, const MsLstmModel& model,
                           const DetectParams& params = {});

/// CSV with header `eye,start,end,confidence`.
void write_events_csv(const std::vector<BlinkEvent>& events, const std::filesystem::path& path);
std::vector<BlinkEvent> read_events_csv(const std::filesystem::path& path);

/// Worker threads allowed: BLINKWILD_THREADS when set to a positive integer,
/// otherwise the hardware concurrency (at least 1).
unsigned thread_budget();

}  // namespace blinkwild
