#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blinkwild/image.hpp"

namespace blinkwild {

enum class Label { NonBlink = 0, Blink = 1 };
enum class Split { Train, Test };

std::string_view to_string(Label label);
std::string_view to_string(Split split);
Label parse_label(std::string_view text);
Split parse_split(std::string_view text);

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

double manhattan(Point a, Point b);

/// Annotated eye centre. Invisible eyes carry (-1, -1).
struct EyeCenter {
    double x = -1.0;
    double y = -1.0;
    bool visible = false;

    static EyeCenter at(double x, double y) { return {x, y, true}; }
    static EyeCenter invisible() { return {}; }
    Point point() const { return {x, y}; }

    friend bool operator==(const EyeCenter&, const EyeCenter&) = default;
};

struct FaceBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool contains(Point p) const {
        return p.x >= x && p.y >= y && p.x <= x + w - 1 && p.y <= y + h - 1;
    }
    friend bool operator==(const FaceBox&, const FaceBox&) = default;
};

struct AnnotationRecord {
    std::size_t frame_index = 0;
    FaceBox face;
    EyeCenter left;
    EyeCenter right;

    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct Clip {
    std::vector<GrayFrame> frames;
    std::vector<AnnotationRecord> annotations;
    Label label = Label::NonBlink;
    std::string source_id;
    // Index of the fully-closed frame; known for synthetic or curated blink clips.
    std::optional<std::size_t> closed_index;

    std::size_t length() const noexcept { return frames.size(); }
};

/// Throws InvalidArgument if frames/annotations disagree or annotations break
/// the face-box and eye-inside-face invariants.
void validate_clip(const Clip& clip);

struct ManifestEntry {
    std::filesystem::path clip_dir;  // absolute, or relative to the manifest file
    Label label = Label::NonBlink;
    Split split = Split::Train;
    std::string source_id;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    std::filesystem::path base_dir;  // directory relative clip paths resolve against

    std::filesystem::path resolve(const ManifestEntry& entry) const;
};

/// Parses and validates a tab-separated manifest. Every referenced clip
/// directory must exist and no source_id may appear in both splits.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

Clip load_clip(const std::filesystem::path& dir, Label label, std::string source_id);
void save_clip(const Clip& clip, const std::filesystem::path& dir);

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& csv_path);
void write_annotations(const std::vector<AnnotationRecord>& records, const std::filesystem::path& csv_path);

inline constexpr int kDefaultClipLength = 10;

/// Extends or cuts a clip to exactly target_len frames.
///
/// Blink clips alternate head/tail operations starting on whichever side
/// lands the closed frame nearer floor(target_len / 2) (head on ties) and
/// never cut the closed frame. Non-blink clips are centre aligned and ignore
/// closed_index. The returned clip carries the recomputed closed index.
Clip polish_clip(const Clip& clip, int target_len, std::size_t closed_index);

struct EyeSize {
    int height = 0;
    int width = 0;
    friend bool operator==(const EyeSize&, const EyeSize&) = default;
};

/// Local eye image size: 0.4 x inter-ocular Manhattan distance when both eyes
/// are visible, face width / 9 otherwise. Rounded to nearest, at least 1 px.
EyeSize eye_region(const EyeCenter& left, const EyeCenter& right, const FaceBox& face);

/// h x w patch centred on `center`; out-of-frame pixels replicate the border.
/// The top-left corner is (round(x) - w/2, round(y) - h/2).
GrayFrame crop_eye(const GrayFrame& frame, Point center, EyeSize size);
GrayFrame crop_eye(const GrayFrame& frame, const EyeCenter& center, EyeSize size);

}  // namespace blinkwild
