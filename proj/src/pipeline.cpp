#include "blinkwild/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <future>
#include <sstream>
#include <thread>

#include "blinkwild/error.hpp"
#include "blinkwild/io.hpp"

namespace blinkwild {

std::string_view to_string(Eye eye) { return eye == Eye::Left ? "left" : "right"; }

Eye parse_eye(std::string_view text) {
    if (text == "left") return Eye::Left;
    if (text == "right") return Eye::Right;
    throw Error(ErrorKind::Parse, "unknown eye '" + std::string(text) + "'");
}

AnnotationLocator::AnnotationLocator(std::vector<AnnotationRecord> records) : records_(std::move(records)) {}

std::optional<LocatedEyes> AnnotationLocator::locate(const GrayFrame&, std::size_t frame_index) const {
    if (frame_index >= records_.size()) return std::nullopt;
    const AnnotationRecord& r = records_[frame_index];
    if (!r.left.visible && !r.right.visible) return std::nullopt;
    return LocatedEyes{r.left, r.right, r.face};
}

unsigned thread_budget() {
    if (const char* env = std::getenv("BLINKWILD_THREADS")) {
        try {
            const long long n = parse_int(env);
            if (n > 0) return static_cast<unsigned>(n);
        } catch (const Error&) {
        }
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

namespace {

std::optional<EyeBox> locate_box(const EyeLocator& locator, const GrayFrame& frame, std::size_t index, Eye eye) {
    const auto found = locator.locate(frame, index);
    if (!found || !found->eye(eye).visible) return std::nullopt;
    const EyeSize size = eye_region(found->left, found->right, found->face);
    const EyeCenter& c = found->eye(eye);
    return EyeBox{c.x, c.y, size.height, size.width};
}

// A located box the tracker cannot use (too small, off frame) counts as a miss.
std::optional<KcfState> try_init(const GrayFrame& frame, const EyeBox& box, const KcfParams& params) {
    try {
        return kcf_init(frame, box, params);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::TrackLost || e.kind() == ErrorKind::InvalidArgument) return std::nullopt;
        throw;
    }
}

}  // namespace

EyeTracker::EyeTracker(const EyeLocator& locator, Eye eye, const TrackParams& params)
    : locator_(&locator), eye_(eye), params_(params) {}

std::optional<EyeBox> EyeTracker::step(const GrayFrame& frame) {
    const std::size_t t = next_index_++;
    if (stream_.lost()) return std::nullopt;
    if (t == 0) {
        if (const auto box = locate_box(*locator_, frame, 0, eye_)) state_ = try_init(frame, *box, params_.kcf);
        if (!state_) {
            stream_.lost_from = 0;
            return std::nullopt;
        }
        stream_.boxes.push_back(state_->region);
        stream_.scores.push_back(1.0);
        return state_->region;
    }

    std::optional<TrackResult> result;
    std::optional<KcfState> next;
    try {
        auto [updated, tracked] = kcf_update(*state_, frame);
        next = std::move(updated);
        result = tracked;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::TrackLost) throw;
    }
    const double score = result ? result->score : 0.0;
    if (result && score >= params_.relocalize_below) {
        state_ = std::move(next);
    } else {
        stream_.relocalizations.push_back(t);
        std::optional<KcfState> fresh;
        if (const auto box = locate_box(*locator_, frame, t, eye_)) fresh = try_init(frame, *box, params_.kcf);
        if (fresh) {
            state_ = std::move(fresh);
        } else if (!result) {
            stream_.lost_from = t;
            return std::nullopt;
        }
    }
    stream_.boxes.push_back(state_->region);
    stream_.scores.push_back(score);
    return state_->region;
}

TrackedStream track_eye(std::span<const GrayFrame> frames, const EyeLocator& locator, Eye eye,
                        const TrackParams& params) {
    if (frames.empty()) throw Error(ErrorKind::InvalidArgument, "cannot track an empty frame sequence");
    EyeTracker tracker(locator, eye, params);
    for (const GrayFrame& frame : frames) {
        if (!tracker.step(frame)) break;
    }
    return tracker.take_stream();
}

std::array<TrackedStream, 2> track_eyes(std::span<const GrayFrame> frames, const EyeLocator& locator,
                                        const TrackParams& params) {
    if (thread_budget() >= 2) {
        auto right = std::async(std::launch::async, [&] { return track_eye(frames, locator, Eye::Right, params); });
        TrackedStream left = track_eye(frames, locator, Eye::Left, params);
        return {std::move(left), right.get()};
    }
    return {track_eye(frames, locator, Eye::Left, params), track_eye(frames, locator, Eye::Right, params)};
}

ClipVerification verify_clip_tracked(const Clip& clip, const EyeLocator& locator, const MsLstmModel& model,
                                     const VerifyParams& params) {
    if (clip.length() < static_cast<std::size_t>(model.hyper().scales) + 1) {
        throw Error(ErrorKind::InvalidArgument, "clip too short for the model's temporal scales");
    }
    ClipVerification out;
    out.tracks = track_eyes(clip.frames, locator, params.track);
    for (Eye eye : kEyes) {
        const TrackedStream& s = out.tracks[static_cast<int>(eye)];
        EyeVerdict& v = out.verdicts[static_cast<int>(eye)];
        if (s.lost()) {
            v.lost = true;
            continue;
        }
        const Prediction p = predict(model, featurize_clip(clip, s.boxes, params.patch_size));
        v.label = p.label;
        v.confidence = p.confidence;
    }
    return out;
}

std::array<std::optional<FeatureSequence>, 2> tracked_sequences(const Clip& clip, const EyeLocator& locator,
                                                                const VerifyParams& params) {
    const std::array<TrackedStream, 2> tracks = track_eyes(clip.frames, locator, params.track);
    std::array<std::optional<FeatureSequence>, 2> out;
    for (Eye eye : kEyes) {
        const TrackedStream& s = tracks[static_cast<int>(eye)];
        if (!s.lost()) out[static_cast<int>(eye)] = featurize_clip(clip, s.boxes, params.patch_size);
    }
    return out;
}

std::array<EyeVerdict, 2> verify_clip(const Clip& clip, const EyeLocator& locator, const MsLstmModel& model,
                                      const VerifyParams& params) {
    return verify_clip_tracked(clip, locator, model, params).verdicts;
}

std::optional<std::vector<EyeBox>> annotated_boxes(const Clip& clip, Eye eye) {
    if (clip.annotations.empty() || clip.annotations.size() != clip.frames.size()) {
        throw Error(ErrorKind::InvalidArgument, "clip " + clip.source_id + " needs one annotation per frame");
    }
    const AnnotationRecord& first = clip.annotations.front();
    const EyeCenter& c0 = eye == Eye::Left ? first.left : first.right;
    if (!c0.visible) return std::nullopt;
    const EyeSize size = eye_region(first.left, first.right, first.face);
    std::vector<EyeBox> boxes;
    boxes.reserve(clip.annotations.size());
    for (const AnnotationRecord& r : clip.annotations) {
        const EyeCenter& c = eye == Eye::Left ? r.left : r.right;
        if (!c.visible) return std::nullopt;
        boxes.push_back({c.x, c.y, size.height, size.width});
    }
    return boxes;
}

std::optional<FeatureSequence> annotated_sequence(const Clip& clip, Eye eye, EyeSize patch_size) {
    const auto boxes = annotated_boxes(clip, eye);
    if (!boxes) return std::nullopt;
    return featurize_clip(clip, *boxes, patch_size);
}

std::vector<BlinkEvent> temporal_nms(std::vector<BlinkEvent> proposals, double iou_thresh) {
    for (const BlinkEvent& p : proposals) {
        if (p.start > p.end) throw Error(ErrorKind::InvalidArgument, "proposal with start after end");
    }
    std::stable_sort(proposals.begin(), proposals.end(), [](const BlinkEvent& a, const BlinkEvent& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.start != b.start) return a.start < b.start;
        return static_cast<int>(a.eye) < static_cast<int>(b.eye);
    });
    std::vector<BlinkEvent> kept;
    for (const BlinkEvent& p : proposals) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const BlinkEvent& k) {
            return k.eye == p.eye && temporal_iou(k.interval(), p.interval()) > iou_thresh;
        });
        if (!suppressed) kept.push_back(p);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const BlinkEvent& a, const BlinkEvent& b) {
        if (a.eye != b.eye) return static_cast<int>(a.eye) < static_cast<int>(b.eye);
        if (a.start != b.start) return a.start < b.start;
        if (a.end != b.end) return a.end < b.end;
        return a.confidence > b.confidence;
    });
    return kept;
}

DetectResult detect_stream(std::span<const GrayFrame> frames, const EyeLocator& locator, const MsLstmModel& model,
                           const DetectParams& params) {
    if (params.window < 2 || params.stride < 1) {
        throw Error(ErrorKind::InvalidArgument, "window must be at least 2 and stride at least 1");
    }
    if (frames.size() < static_cast<std::size_t>(params.window)) {
        throw Error(ErrorKind::InvalidArgument, "stream shorter than the detection window");
    }
    if (params.window - 1 < model.hyper().scales) {
        throw Error(ErrorKind::InvalidArgument, "window too short for the model's temporal scales");
    }
    const auto streams = track_eyes(frames, locator, params.track);
    DetectResult result;
    const auto window = static_cast<std::size_t>(params.window);
    for (Eye eye : kEyes) {
        const TrackedStream& s = streams[static_cast<int>(eye)];
        std::vector<LbpHistogram> appearance(s.boxes.size());
        for (std::size_t t = 0; t < s.boxes.size(); ++t) {
            appearance[t] = frame_appearance(frames[t], s.boxes[t], params.patch_size);
        }
        for (std::size_t start = 0; start + window <= frames.size(); start += static_cast<std::size_t>(params.stride)) {
            if (!s.covers(start, start + window - 1)) continue;
            ++result.windows_evaluated[static_cast<int>(eye)];
            const FeatureSequence seq = sequence_from_appearance(std::span(appearance).subspan(start, window));
            const Prediction p = predict(model, seq);
            if (p.confidence >= params.conf_thresh) {
                result.proposals.push_back({static_cast<int>(start), static_cast<int>(start + window - 1),
                                            p.confidence, eye});
            }
        }
    }
    result.events = temporal_nms(result.proposals, params.iou_thresh);
    return result;
}

void write_events_csv(const std::vector<BlinkEvent>& events, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "eye,start,end,confidence\n";
    for (const BlinkEvent& e : events) {
        out << to_string(e.eye) << ',' << e.start << ',' << e.end << ',' << format_double(e.confidence) << '\n';
    }
    write_file_atomic(path, out.str());
}

std::vector<BlinkEvent> read_events_csv(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "eye,start,end,confidence") {
        throw Error(ErrorKind::Parse, path.string() + ": expected header eye,start,end,confidence");
    }
    std::vector<BlinkEvent> events;
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        try {
            if (fields.size() != 4) throw Error(ErrorKind::Parse, "expected 4 fields");
            BlinkEvent e;
            e.eye = parse_eye(fields[0]);
            e.start = static_cast<int>(parse_int(fields[1]));
            e.end = static_cast<int>(parse_int(fields[2]));
            e.confidence = parse_double(fields[3]);
            if (e.start > e.end) throw Error(ErrorKind::Parse, "start after end");
            events.push_back(e);
        } catch (const Error& err) {
            throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": " + err.what());
        }
    }
    return events;
}

}  // namespace blinkwild
