#include "blinkwild/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>

#include "blinkwild/error.hpp"
#include "blinkwild/io.hpp"

namespace blinkwild {

namespace fs = std::filesystem;

namespace {

int circular_transitions(unsigned code) {
    int transitions = 0;
    for (int i = 0; i < 8; ++i) {
        const unsigned a = (code >> i) & 1U;
        const unsigned b = (code >> ((i + 1) % 8)) & 1U;
        transitions += a != b;
    }
    return transitions;
}

std::array<std::uint8_t, 256> build_uniform_table() {
    std::array<std::uint8_t, 256> table{};
    std::uint8_t next = 0;
    for (unsigned code = 0; code < 256; ++code) {
        table[code] = circular_transitions(code) <= 2 ? next++ : static_cast<std::uint8_t>(kLbpBins - 1);
    }
    return table;
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    return v;
}

}  // namespace

std::array<double, kStepDim> StepFeature::concatenated() const {
    std::array<double, kStepDim> out{};
    std::copy(appearance.begin(), appearance.end(), out.begin());
    std::copy(motion.begin(), motion.end(), out.begin() + kLbpBins);
    return out;
}

StepFeature StepFeature::from_concatenated(std::span<const double> values) {
    if (values.size() != kStepDim) throw Error(ErrorKind::InvalidArgument, "step feature must have 118 values");
    StepFeature s;
    std::copy_n(values.begin(), kLbpBins, s.appearance.begin());
    std::copy_n(values.begin() + kLbpBins, kLbpBins, s.motion.begin());
    return s;
}

GrayFrame resize_patch(const GrayFrame& patch, EyeSize out) {
    if (patch.empty()) throw Error(ErrorKind::InvalidArgument, "cannot resize an empty patch");
    if (out.height < 1 || out.width < 1) throw Error(ErrorKind::InvalidArgument, "output size must be non-zero");
    if (out.width == patch.width() && out.height == patch.height()) return patch;
    const double sx = static_cast<double>(patch.width()) / out.width;
    const double sy = static_cast<double>(patch.height()) / out.height;
    GrayFrame result(out.width, out.height);
    for (int y = 0; y < out.height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, patch.height() - 1.0);
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, patch.height() - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out.width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, patch.width() - 1.0);
            const int x0 = static_cast<int>(std::floor(fx));
            const int x1 = std::min(x0 + 1, patch.width() - 1);
            const double wx = fx - x0;
            const double top = patch.at(x0, y0) * (1.0 - wx) + patch.at(x1, y0) * wx;
            const double bottom = patch.at(x0, y1) * (1.0 - wx) + patch.at(x1, y1) * wx;
            result.at(x, y) = top * (1.0 - wy) + bottom * wy;
        }
    }
    return result;
}

const std::array<std::uint8_t, 256>& uniform_lbp_table() {
    static const std::array<std::uint8_t, 256> table = build_uniform_table();
    return table;
}

LbpHistogram uniform_lbp(const GrayFrame& patch) {
    if (patch.width() < 3 || patch.height() < 3) {
        throw Error(ErrorKind::InvalidArgument, "uniform LBP needs a patch of at least 3x3");
    }
    const auto& table = uniform_lbp_table();
    // Clockwise from the top-left neighbour.
    static constexpr int kDx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
    static constexpr int kDy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
    std::array<std::size_t, kLbpBins> counts{};
    for (int y = 1; y < patch.height() - 1; ++y) {
        for (int x = 1; x < patch.width() - 1; ++x) {
            const double c = patch.at(x, y);
            unsigned code = 0;
            for (int k = 0; k < 8; ++k) {
                code |= static_cast<unsigned>(patch.at(x + kDx[k], y + kDy[k]) >= c) << k;
            }
            ++counts[table[code]];
        }
    }
    const double total = static_cast<double>(patch.width() - 2) * (patch.height() - 2);
    LbpHistogram hist{};
    for (std::size_t i = 0; i < kLbpBins; ++i) hist[i] = counts[i] / total;
    return hist;
}

std::array<double, kLbpBins> motion_feature(const LbpHistogram& curr, const LbpHistogram& prev) {
    std::array<double, kLbpBins> out{};
    for (std::size_t i = 0; i < kLbpBins; ++i) out[i] = curr[i] - prev[i];
    return out;
}

LbpHistogram frame_appearance(const GrayFrame& frame, const EyeBox& region, EyeSize patch_size) {
    return uniform_lbp(resize_patch(crop_eye(frame, region.center(), region.size()), patch_size));
}

FeatureSequence sequence_from_appearance(std::span<const LbpHistogram> appearance) {
    if (appearance.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two frames to featurize");
    FeatureSequence seq;
    seq.steps.reserve(appearance.size() - 1);
    for (std::size_t t = 1; t < appearance.size(); ++t) {
        seq.steps.push_back({appearance[t], motion_feature(appearance[t], appearance[t - 1])});
    }
    return seq;
}

FeatureSequence featurize_clip(const Clip& clip, std::span<const EyeBox> regions, EyeSize patch_size) {
    if (clip.frames.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two frames to featurize");
    if (regions.size() != clip.frames.size()) {
        throw Error(ErrorKind::InvalidArgument, "featurize_clip needs exactly one region per frame");
    }
    std::vector<LbpHistogram> appearance;
    appearance.reserve(clip.frames.size());
    for (std::size_t t = 0; t < clip.frames.size(); ++t) {
        appearance.push_back(frame_appearance(clip.frames[t], regions[t], patch_size));
    }
    return sequence_from_appearance(appearance);
}

double feature_correlation(std::span<const double> fc, std::span<const double> fn) {
    if (fc.size() != fn.size()) throw Error(ErrorKind::InvalidArgument, "correlated vectors differ in length");
    const double dot = std::inner_product(fc.begin(), fc.end(), fn.begin(), 0.0);
    const double nc = std::sqrt(std::inner_product(fc.begin(), fc.end(), fc.begin(), 0.0));
    const double nn = std::sqrt(std::inner_product(fn.begin(), fn.end(), fn.begin(), 0.0));
    if (nc == 0.0 || nn == 0.0) throw Error(ErrorKind::UndefinedCorrelation, "correlation with a zero vector");
    return std::clamp(dot / (nc * nn), -1.0, 1.0);
}

void write_feature_dump(const FeatureSequence& seq, const fs::path& path) {
    std::string out;
    out.reserve(8 + seq.size() * kStepDim * 4);
    put_u32(out, static_cast<std::uint32_t>(seq.size()));
    put_u32(out, static_cast<std::uint32_t>(kStepDim));
    for (const StepFeature& step : seq.steps) {
        for (double v : step.concatenated()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    write_file_atomic(path, out);
}

FeatureSequence read_feature_dump(const fs::path& path) {
    const std::string in = read_text_file(path);
    if (in.size() < 8) throw Error(ErrorKind::Parse, path.string() + ": truncated feature dump header");
    const std::uint32_t steps = get_u32(in, 0);
    const std::uint32_t dim = get_u32(in, 4);
    if (dim != kStepDim) throw Error(ErrorKind::Parse, path.string() + ": unexpected feature dimension");
    if (in.size() != 8 + static_cast<std::size_t>(steps) * dim * 4) {
        throw Error(ErrorKind::Parse, path.string() + ": feature dump size does not match its header");
    }
    FeatureSequence seq;
    std::array<double, kStepDim> row{};
    for (std::uint32_t s = 0; s < steps; ++s) {
        for (std::uint32_t d = 0; d < dim; ++d) {
            row[d] = std::bit_cast<float>(get_u32(in, 8 + (static_cast<std::size_t>(s) * dim + d) * 4));
        }
        seq.steps.push_back(StepFeature::from_concatenated(row));
    }
    return seq;
}

void write_feature_csv(const FeatureSequence& seq, const fs::path& path) {
    std::string out = "step";
    for (std::size_t i = 0; i < kLbpBins; ++i) out += ",app" + std::to_string(i);
    for (std::size_t i = 0; i < kLbpBins; ++i) out += ",mot" + std::to_string(i);
    out += '\n';
    for (std::size_t s = 0; s < seq.size(); ++s) {
        out += std::to_string(s);
        for (double v : seq.steps[s].concatenated()) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

}  // namespace blinkwild
