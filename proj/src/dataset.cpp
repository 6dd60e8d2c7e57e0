#include "blinkwild/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "blinkwild/error.hpp"
#include "blinkwild/io.hpp"

namespace blinkwild {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kAnnotationHeader = "frame,face_x,face_y,face_w,face_h,lx,ly,rx,ry";
constexpr std::string_view kClosedFrameFile = "closed_frame.txt";

std::string frame_filename(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%04zu.pgm", index);
    return buf;
}

std::string_view trim_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

EyeCenter parse_eye(std::string_view xs, std::string_view ys) {
    const double x = parse_double(xs);
    const double y = parse_double(ys);
    if (x == -1.0 && y == -1.0) return EyeCenter::invisible();
    return EyeCenter::at(x, y);
}

void append_eye(std::string& out, const EyeCenter& eye) {
    if (!eye.visible) {
        out += "-1,-1";
        return;
    }
    out += format_double(eye.x);
    out += ',';
    out += format_double(eye.y);
}

}  // namespace

std::string_view to_string(Label label) { return label == Label::Blink ? "blink" : "nonblink"; }
std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

Label parse_label(std::string_view text) {
    if (text == "blink") return Label::Blink;
    if (text == "nonblink") return Label::NonBlink;
    throw Error(ErrorKind::Parse, "unknown label '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "test") return Split::Test;
    throw Error(ErrorKind::Parse, "unknown split '" + std::string(text) + "'");
}

double manhattan(Point a, Point b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

void validate_clip(const Clip& clip) {
    if (clip.frames.empty()) throw Error(ErrorKind::InvalidArgument, "clip '" + clip.source_id + "' is empty");
    if (clip.frames.size() != clip.annotations.size()) {
        throw Error(ErrorKind::InvalidArgument, "clip '" + clip.source_id + "' has " +
                                                    std::to_string(clip.frames.size()) + " frames but " +
                                                    std::to_string(clip.annotations.size()) + " annotations");
    }
    for (std::size_t i = 0; i < clip.frames.size(); ++i) {
        const GrayFrame& frame = clip.frames[i];
        const AnnotationRecord& rec = clip.annotations[i];
        const FaceBox& f = rec.face;
        const std::string where = "clip '" + clip.source_id + "' frame " + std::to_string(i);
        if (f.w <= 0 || f.h <= 0) throw Error(ErrorKind::InvalidArgument, where + ": face box must be non-empty");
        if (f.x < 0 || f.y < 0 || f.x + f.w > frame.width() || f.y + f.h > frame.height()) {
            throw Error(ErrorKind::InvalidArgument, where + ": face box exceeds frame bounds");
        }
        for (const EyeCenter* eye : {&rec.left, &rec.right}) {
            if (eye->visible && !f.contains(eye->point())) {
                throw Error(ErrorKind::InvalidArgument, where + ": visible eye centre lies outside the face box");
            }
        }
    }
}

fs::path Manifest::resolve(const ManifestEntry& entry) const {
    if (entry.clip_dir.is_absolute()) return entry.clip_dir;
    return base_dir / entry.clip_dir;
}

Manifest load_manifest(const fs::path& path) {
    const std::string text = read_text_file(path);
    Manifest manifest;
    manifest.base_dir = path.parent_path();
    std::map<std::string, Split, std::less<>> split_of;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim_cr(raw);
        if (line.empty()) continue;
        const auto fields = split(line, '\t');
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (fields.size() != 4 || fields[0].empty() || fields[3].empty()) {
            throw Error(ErrorKind::Parse, where + ": expected <clip_dir>\\t<label>\\t<split>\\t<source_id>");
        }
        ManifestEntry entry;
        try {
            entry.clip_dir = fs::path(std::string(fields[0]));
            entry.label = parse_label(fields[1]);
            entry.split = parse_split(fields[2]);
            entry.source_id = std::string(fields[3]);
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, where + ": " + e.what());
        }
        if (!fs::is_directory(manifest.resolve(entry))) {
            throw Error(ErrorKind::MissingAsset, where + ": clip directory " + manifest.resolve(entry).string() +
                                                     " does not exist");
        }
        auto [it, inserted] = split_of.emplace(entry.source_id, entry.split);
        if (!inserted && it->second != entry.split) {
            throw Error(ErrorKind::SplitViolation,
                        where + ": source '" + entry.source_id + "' appears in both train and test");
        }
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
    std::string out;
    for (const ManifestEntry& e : manifest.entries) {
        out += e.clip_dir.generic_string();
        out += '\t';
        out += to_string(e.label);
        out += '\t';
        out += to_string(e.split);
        out += '\t';
        out += e.source_id;
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::vector<AnnotationRecord> read_annotations(const fs::path& csv_path) {
    const std::string text = read_text_file(csv_path);
    std::istringstream in(text);
    std::string raw;
    std::vector<AnnotationRecord> records;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim_cr(raw);
        if (line_no == 1) {
            if (line != kAnnotationHeader) {
                throw Error(ErrorKind::Parse, csv_path.string() + ":1: unexpected annotation header");
            }
            continue;
        }
        if (line.empty()) continue;
        const auto f = split(line, ',');
        const std::string where = csv_path.string() + ":" + std::to_string(line_no);
        if (f.size() != 9) throw Error(ErrorKind::Parse, where + ": expected 9 fields");
        try {
            AnnotationRecord rec;
            rec.frame_index = static_cast<std::size_t>(parse_int(f[0]));
            rec.face = {static_cast<int>(parse_int(f[1])), static_cast<int>(parse_int(f[2])),
                        static_cast<int>(parse_int(f[3])), static_cast<int>(parse_int(f[4]))};
            rec.left = parse_eye(f[5], f[6]);
            rec.right = parse_eye(f[7], f[8]);
            if (rec.frame_index != records.size()) {
                throw Error(ErrorKind::Parse, "frame indices must be consecutive from 0");
            }
            records.push_back(rec);
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, where + ": " + e.what());
        }
    }
    return records;
}

void write_annotations(const std::vector<AnnotationRecord>& records, const fs::path& csv_path) {
    std::string out(kAnnotationHeader);
    out += '\n';
    for (const AnnotationRecord& r : records) {
        out += std::to_string(r.frame_index) + ',' + std::to_string(r.face.x) + ',' + std::to_string(r.face.y) +
               ',' + std::to_string(r.face.w) + ',' + std::to_string(r.face.h) + ',';
        append_eye(out, r.left);
        out += ',';
        append_eye(out, r.right);
        out += '\n';
    }
    write_file_atomic(csv_path, out);
}

Clip load_clip(const fs::path& dir, Label label, std::string source_id) {
    const fs::path csv = dir / "annotations.csv";
    if (!fs::exists(csv)) throw Error(ErrorKind::MissingAsset, csv.string() + " not found");
    Clip clip;
    clip.label = label;
    clip.source_id = std::move(source_id);
    clip.annotations = read_annotations(csv);
    clip.frames.reserve(clip.annotations.size());
    for (std::size_t i = 0; i < clip.annotations.size(); ++i) {
        const fs::path frame_path = dir / frame_filename(i);
        if (!fs::exists(frame_path)) throw Error(ErrorKind::MissingAsset, frame_path.string() + " not found");
        clip.frames.push_back(read_pgm(frame_path));
    }
    const fs::path closed = dir / kClosedFrameFile;
    if (fs::exists(closed)) {
        std::string text = read_text_file(closed);
        while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
        try {
            clip.closed_index = static_cast<std::size_t>(parse_int(text));
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, closed.string() + ": " + e.what());
        }
    }
    validate_clip(clip);
    return clip;
}

void save_clip(const Clip& clip, const fs::path& dir) {
    validate_clip(clip);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < clip.frames.size(); ++i) write_pgm(clip.frames[i], dir / frame_filename(i));
    write_annotations(clip.annotations, dir / "annotations.csv");
    if (clip.closed_index) {
        write_file_atomic(dir / kClosedFrameFile, std::to_string(*clip.closed_index) + "\n");
    } else {
        std::error_code ignored;
        fs::remove(dir / kClosedFrameFile, ignored);
    }
}

Clip polish_clip(const Clip& clip, int target_len, std::size_t closed_index) {
    if (target_len < 1) throw Error(ErrorKind::InvalidArgument, "target length must be at least 1");
    if (clip.frames.empty()) throw Error(ErrorKind::InvalidArgument, "cannot polish an empty clip");
    if (clip.frames.size() != clip.annotations.size()) {
        throw Error(ErrorKind::InvalidArgument, "frames and annotations differ in length");
    }
    const bool blink = clip.label == Label::Blink;
    const int n = static_cast<int>(clip.frames.size());
    if (blink && closed_index >= clip.frames.size()) {
        throw Error(ErrorKind::InvalidArgument, "closed frame index out of range");
    }
    const int closed = blink ? static_cast<int>(closed_index) : 0;
    const bool cutting = n > target_len;
    const int ops = std::abs(n - target_len);
    const int desired = target_len / 2;

    // Decide which end the alternation starts from.
    bool head_first = true;
    if (blink && ops > 0) {
        const int sign = cutting ? -1 : 1;
        const int head_pos = closed + sign * ((ops + 1) / 2);
        const int tail_pos = closed + sign * (ops / 2);
        head_first = std::abs(head_pos - desired) <= std::abs(tail_pos - desired);
    }

    // Simulate the alternating sequence. For cuts, [lo, hi) is the surviving
    // range of the source; for extension, head/tail count duplicated frames.
    int lo = 0;
    int hi = n;
    int head_dups = 0;
    int tail_dups = 0;
    for (int step = 0; step < ops; ++step) {
        bool head = (step % 2 == 0) == head_first;
        if (cutting) {
            if (blink && head && lo == closed) head = false;
            if (blink && !head && hi - 1 == closed) head = true;
            if (head) {
                ++lo;
            } else {
                --hi;
            }
        } else if (head) {
            ++head_dups;
        } else {
            ++tail_dups;
        }
    }

    Clip out;
    out.label = clip.label;
    out.source_id = clip.source_id;
    auto push = [&](int src) {
        out.frames.push_back(clip.frames[src]);
        AnnotationRecord rec = clip.annotations[src];
        rec.frame_index = out.annotations.size();
        out.annotations.push_back(rec);
    };
    for (int i = 0; i < head_dups; ++i) push(0);
    for (int i = lo; i < hi; ++i) push(i);
    for (int i = 0; i < tail_dups; ++i) push(n - 1);
    if (blink) out.closed_index = static_cast<std::size_t>(closed - lo + head_dups);
    return out;
}

EyeSize eye_region(const EyeCenter& left, const EyeCenter& right, const FaceBox& face) {
    if (left.visible && right.visible) {
        const long side = std::max(1L, std::lround(0.4 * manhattan(left.point(), right.point())));
        return {static_cast<int>(side), static_cast<int>(side)};
    }
    if (left.visible || right.visible) {
        const long side = std::max(1L, std::lround(face.w / 9.0));
        return {static_cast<int>(side), static_cast<int>(side)};
    }
    throw Error(ErrorKind::NoEye, "neither eye is visible");
}

GrayFrame crop_eye(const GrayFrame& frame, Point center, EyeSize size) {
    if (size.height < 1 || size.width < 1) throw Error(ErrorKind::InvalidArgument, "crop size must be non-zero");
    if (frame.empty()) throw Error(ErrorKind::InvalidArgument, "cannot crop an empty frame");
    const int x0 = static_cast<int>(std::lround(center.x)) - size.width / 2;
    const int y0 = static_cast<int>(std::lround(center.y)) - size.height / 2;
    GrayFrame patch(size.width, size.height);
    for (int y = 0; y < size.height; ++y) {
        for (int x = 0; x < size.width; ++x) patch.at(x, y) = frame.clamped(x0 + x, y0 + y);
    }
    return patch;
}

GrayFrame crop_eye(const GrayFrame& frame, const EyeCenter& center, EyeSize size) {
    if (!center.visible) throw Error(ErrorKind::InvalidArgument, "cannot crop around an invisible eye");
    return crop_eye(frame, center.point(), size);
}

}  // namespace blinkwild
