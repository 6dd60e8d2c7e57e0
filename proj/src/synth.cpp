#include "blinkwild/synth.hpp"

#include <algorithm>
#include <cmath>
#include "blinkwild/error.hpp"
#include "blinkwild/random.hpp"

namespace blinkwild {

namespace {

constexpr double kPi = 3.14159265358979323846;

double coverage(double signed_distance) { return std::clamp(0.5 - signed_distance, 0.0, 1.0); }

// Per-identity appearance, fixed over a clip.
struct FaceStyle {
    double interocular = 60.0;
    double skin = 125.0;
    double texture_amp = 10.0;
    double tex_fx = 0.2;
    double tex_fy = 0.15;
    double tex_px = 0.0;
    double tex_py = 0.0;
    double sclera = 215.0;
    double iris = 70.0;
    double lash = 40.0;
    double eye_half_width = 9.5;
    double eye_half_height = 5.5;
    double iris_radius = 4.2;
    double brow = 70.0;
    double tilt = 0.0;  // vertical offset between the eyes
    double start_x = 96.0;
    double start_y = 60.0;
    double brightness = 0.0;
    double lid_shade = 50.0;  // peak darkening of the lid skin
};

struct FrameState {
    double face_x = 0.0;
    double face_y = 0.0;
    double aperture = 1.0;  // 1 open, 0 closed
    double gaze = 0.0;      // horizontal iris offset in px
    double brightness = 0.0;
};

FaceStyle draw_style(Rng& rng, const SynthParams& p) {
    auto u = [&rng] { return rng.uniform(); };
    FaceStyle s;
    s.interocular = p.min_interocular + (p.max_interocular - p.min_interocular) * u();
    s.skin = 105.0 + 40.0 * u();
    s.texture_amp = 6.0 + 8.0 * u();
    s.tex_fx = 0.15 + 0.2 * u();
    s.tex_fy = 0.1 + 0.2 * u();
    s.tex_px = 2.0 * kPi * u();
    s.tex_py = 2.0 * kPi * u();
    s.sclera = 200.0 + 35.0 * u();
    s.iris = 45.0 + 50.0 * u();
    s.lash = 25.0 + 30.0 * u();
    s.eye_half_width = s.interocular * (0.15 + 0.03 * u());
    s.eye_half_height = s.eye_half_width * (0.5 + 0.12 * u());
    s.iris_radius = s.eye_half_height * (0.75 + 0.15 * u());
    s.brow = s.skin - 35.0 - 25.0 * u();
    s.tilt = (u() - 0.5) * 6.0;
    s.start_x = p.width / 2.0 + (u() - 0.5) * 16.0;
    s.start_y = p.height / 2.0 - 4.0 + (u() - 0.5) * 12.0;
    s.brightness = (2.0 * u() - 1.0) * p.brightness_shift;
    s.lid_shade = 40.0 + 20.0 * u();
    return s;
}

Point eye_position(const FaceStyle& s, const FrameState& f, bool left) {
    const double half = s.interocular / 2.0;
    // Image-left eye is the subject's right; "left" here means image left.
    return left ? Point{f.face_x - half, f.face_y - s.tilt / 2.0} : Point{f.face_x + half, f.face_y + s.tilt / 2.0};
}

double render_eye_pixel(const FaceStyle& s, const FrameState& f, Point eye, double px, double py, double base) {
    const double dx = px - eye.x;
    const double dy = py - eye.y;
    const double a = s.eye_half_width;
    if (std::abs(dx) > a + 2.0 || std::abs(dy) > s.eye_half_height + 3.0) return base;
    const double b = s.eye_half_height * std::clamp(f.aperture, 0.0, 1.0);
    double value = base;
    const double span = std::max(0.0, 1.0 - (dx / a) * (dx / a));
    const double lid_offset = b * std::sqrt(span);
    if (std::abs(dx) < a) {
        // Eyelid skin, darkest at the centre so closure carries no hard edge.
        const double r = std::min(1.0, std::hypot(dx / a, dy / std::max(s.eye_half_height, 1e-9)));
        value -= s.lid_shade * (1.0 - r * r);
    }
    if (b > 0.25 && std::abs(dx) < a) {
        // Open aperture between the lids.
        const double inside = std::min(dy + lid_offset, lid_offset - dy);
        const double cov = coverage(-inside);
        if (cov > 0.0) {
            const double ir = std::hypot(dx - f.gaze, dy);
            double eye_value = s.sclera;
            const double iris_cov = coverage(ir - s.iris_radius);
            eye_value = eye_value * (1.0 - iris_cov) + s.iris * iris_cov;
            const double pupil_cov = coverage(ir - 0.45 * s.iris_radius);
            eye_value = eye_value * (1.0 - pupil_cov) + 20.0 * pupil_cov;
            value = value * (1.0 - cov) + eye_value * cov;
        }
    }
    if (std::abs(dx) < a) {
        // Upper lid lash line, thickening as the lids meet on the centre line.
        const double upper = eye.y - lid_offset;
        const double lash_w = 1.4 + 3.0 * (1.0 - std::clamp(f.aperture, 0.0, 1.0));
        const double lash_cov = std::clamp(lash_w - std::abs(py - upper), 0.0, 1.0) * std::sqrt(span);
        value = value * (1.0 - lash_cov) + s.lash * lash_cov;
        const double lower = eye.y + lid_offset;
        const double lower_cov = 0.4 * std::clamp(1.0 - std::abs(py - lower), 0.0, 1.0) * std::sqrt(span);
        value = value * (1.0 - lower_cov) + (base - 25.0) * lower_cov;
    }
    return value;
}

GrayFrame render_frame(const FaceStyle& s, const FrameState& f, const SynthParams& p, Rng& noise_rng) {
    GrayFrame frame(p.width, p.height);
    const Point le = eye_position(s, f, true);
    const Point re = eye_position(s, f, false);
    const double brow_half = s.eye_half_width * 1.2;
    const double brow_gap = s.interocular * 0.24;
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            const double px = x;
            const double py = y;
            // Skin texture moves with the face so the tracker sees a rigid scene.
            const double u = px - f.face_x;
            const double v = py - f.face_y;
            double value = s.skin + s.texture_amp * std::sin(s.tex_fx * u + s.tex_px) * std::cos(s.tex_fy * v + s.tex_py);
            for (const Point& eye : {le, re}) {
                const double bx = px - eye.x;
                const double by = py - (eye.y - brow_gap) - 0.08 * bx * bx / brow_half;
                if (std::abs(bx) < brow_half) {
                    const double cov = std::clamp(2.2 - std::abs(by), 0.0, 1.0);
                    value = value * (1.0 - cov) + s.brow * cov;
                }
            }
            value = render_eye_pixel(s, f, le, px, py, value);
            value = render_eye_pixel(s, f, re, px, py, value);
            value += s.brightness + f.brightness + p.noise_sigma * noise_rng.normal();
            frame.at(x, y) = std::clamp(std::round(value), 0.0, 255.0);
        }
    }
    return frame;
}

AnnotationRecord annotate(const FaceStyle& s, const FrameState& f, const SynthParams& p, std::size_t index) {
    const Point le = eye_position(s, f, true);
    const Point re = eye_position(s, f, false);
    const double fw = s.interocular * 2.0;
    const double fh = s.interocular * 2.2;
    int x0 = static_cast<int>(std::floor(f.face_x - fw / 2.0));
    int y0 = static_cast<int>(std::floor(f.face_y - fh * 0.4));
    int x1 = static_cast<int>(std::ceil(f.face_x + fw / 2.0));
    int y1 = static_cast<int>(std::ceil(f.face_y + fh * 0.6));
    x0 = std::clamp(x0, 0, p.width - 1);
    y0 = std::clamp(y0, 0, p.height - 1);
    x1 = std::clamp(x1, x0 + 1, p.width);
    y1 = std::clamp(y1, y0 + 1, p.height);
    AnnotationRecord rec;
    rec.frame_index = index;
    rec.face = {x0, y0, x1 - x0, y1 - y0};
    // Annotations are quantised to 1/64 px so they survive CSV round trips verbatim.
    auto q = [](double v) { return std::round(v * 64.0) / 64.0; };
    rec.left = EyeCenter::at(q(le.x), q(le.y));
    rec.right = EyeCenter::at(q(re.x), q(re.y));
    return rec;
}

struct BlinkShape {
    double center = 0.0;
    double close_half = 2.0;
    double open_half = 2.5;
    double depth = 1.0;  // 1 fully closed
};

double blink_aperture(const BlinkShape& b, double t) {
    const double d = t < b.center ? b.close_half : b.open_half;
    const double r = std::min(1.0, std::abs(t - b.center) / d);
    return 1.0 - b.depth * (1.0 - r * r * (3.0 - 2.0 * r));
}

BlinkShape draw_blink(Rng& rng, double center) {
    auto u = [&rng] { return rng.uniform(); };
    BlinkShape b;
    b.center = center;
    b.close_half = 1.6 + 1.0 * u();
    b.open_half = 2.0 + 1.4 * u();
    b.depth = 0.88 + 0.12 * u();
    return b;
}

Clip render_sequence(std::uint64_t seed, int length, const std::vector<BlinkShape>& blinks, Label label,
                     const SynthParams& p, Rng& rng) {
    auto u = [&rng] { return rng.uniform(); };
    const FaceStyle style = draw_style(rng, p);
    Rng noise_rng(mix_seed(seed, 7));

    double vx = (2.0 * u() - 1.0) * p.max_drift * 0.6;
    double vy = (2.0 * u() - 1.0) * p.max_drift * 0.6;
    const double jitter = p.max_drift * 0.4;
    const double base_open = 0.9 + 0.1 * u();

    Clip clip;
    clip.label = label;
    clip.source_id = "synth-" + std::to_string(seed);
    FrameState state;
    state.face_x = style.start_x;
    state.face_y = style.start_y;
    double gaze = (u() - 0.5) * 2.0;
    // Long streams bounce off a safe zone so both eyes and brows stay in frame.
    const double reach_x = style.interocular / 2.0 + style.eye_half_width + 6.0;
    const double reach_y = style.interocular * 0.24 + style.eye_half_height + 8.0;
    for (int t = 0; t < length; ++t) {
        if (t > 0) {
            if ((state.face_x - reach_x < 0.0 && vx < 0.0) || (state.face_x + reach_x > p.width - 1.0 && vx > 0.0)) vx = -vx;
            if ((state.face_y - reach_y < 0.0 && vy < 0.0) || (state.face_y + reach_y > p.height - 1.0 && vy > 0.0)) vy = -vy;
            state.face_x += std::clamp(vx + (2.0 * u() - 1.0) * jitter, -p.max_drift, p.max_drift);
            state.face_y += std::clamp(vy + (2.0 * u() - 1.0) * jitter, -p.max_drift, p.max_drift);
        }
        double aperture = std::clamp(base_open + (u() - 0.5) * 0.1, 0.0, 1.0);
        for (const BlinkShape& b : blinks) aperture = std::min(aperture, blink_aperture(b, t));
        gaze = std::clamp(gaze + (u() - 0.5) * 0.8, -2.0, 2.0);
        state.aperture = aperture;
        state.gaze = gaze;
        state.brightness = (u() - 0.5) * 2.0;
        clip.frames.push_back(render_frame(style, state, p, noise_rng));
        clip.annotations.push_back(annotate(style, state, p, static_cast<std::size_t>(t)));
    }
    return clip;
}

}  // namespace

Clip synth_clip(std::uint64_t seed, Label label, int length, const SynthParams& params) {
    if (length < 1 || (label == Label::Blink && length < 3)) {
        throw Error(ErrorKind::InvalidArgument, "synthetic clip too short");
    }
    Rng rng(mix_seed(seed, 1));
    std::vector<BlinkShape> blinks;
    if (label == Label::Blink) {
        // Separate stream so blink and non-blink clips of one seed share identity and motion.
        Rng blink_rng(mix_seed(seed, 3));
        const double center = (length - 1) / 2.0 + (blink_rng.uniform() - 0.5) * 0.8;
        blinks.push_back(draw_blink(blink_rng, center));
    }
    Clip clip = render_sequence(seed, length, blinks, label, params, rng);
    if (label == Label::Blink) {
        clip.closed_index = static_cast<std::size_t>(std::clamp(std::lround(blinks.front().center), 0L, long(length - 1)));
    }
    return clip;
}

SynthStream synth_stream(std::uint64_t seed, int length, const std::vector<double>& blink_centers,
                         int sample_length, const SynthParams& params) {
    if (length < 1 || sample_length < 1) throw Error(ErrorKind::InvalidArgument, "synthetic stream too short");
    Rng rng(mix_seed(seed, 2));
    Rng blink_rng(mix_seed(seed, 3));
    std::vector<BlinkShape> blinks;
    SynthStream out;
    for (double c : blink_centers) {
        blinks.push_back(draw_blink(blink_rng, c));
        // Ground truth is the fixed-length sample extent with the closed frame
        // at index sample_length / 2, as produced by clip polishing.
        const int start = std::max(0, static_cast<int>(std::lround(c)) - sample_length / 2);
        const int end = std::min(length - 1, start + sample_length - 1);
        out.blinks.push_back({start, end});
    }
    out.clip = render_sequence(seed, length, blinks, blinks.empty() ? Label::NonBlink : Label::Blink, params, rng);
    out.clip.source_id = "stream-" + std::to_string(seed);
    return out;
}

}  // namespace blinkwild
