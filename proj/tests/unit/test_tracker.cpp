#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "blinkwild/dft.hpp"
#include "blinkwild/error.hpp"
#include "blinkwild/pipeline.hpp"
#include "blinkwild/synth.hpp"
#include "blinkwild/tracker.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace blinkwild;

namespace {

RealGrid random_grid(Rng& rng, int rows, int cols) {
    RealGrid g(rows, cols);
    for (double& v : g.reshaped()) v = rng.uniform(-1.0, 1.0);
    return g;
}

GrayFrame add_noise(const GrayFrame& f, Rng& rng, double sigma) {
    GrayFrame out = f;
    for (double& v : out.pixels()) v = std::clamp(v + sigma * rng.normal(), 0.0, 255.0);
    return out;
}

constexpr EyeBox kBox{80.0, 60.0, 24, 24};

struct EyeTarget {
    GrayFrame frame;
    EyeBox box;
};

// First frame of a synthetic face with its annotated left-eye box.
EyeTarget eye_target(std::uint64_t seed) {
    const Clip c = synth_clip(mix_seed(14, seed), Label::NonBlink, 2);
    return {c.frames[0], (*annotated_boxes(c, Eye::Left))[0]};
}

}  // namespace

TEST(Dft, RoundTripIsExact) {
    Rng rng(3);
    for (auto [r, c] : {std::pair{8, 8}, {7, 13}, {60, 61}, {1, 5}}) {
        const RealGrid x = random_grid(rng, r, c);
        double imag = 1.0;
        const RealGrid back = idft2_real(dft2(x), &imag);
        EXPECT_LE((back - x).abs().maxCoeff(), 1e-9 * x.abs().maxCoeff());
        EXPECT_LE(imag, 1e-9);
    }
}

TEST(Dft, DcTermIsTheSum) {
    Rng rng(4);
    const RealGrid x = random_grid(rng, 5, 6);
    EXPECT_NEAR(dft2(x)(0, 0).real(), x.sum(), 1e-12);
}

TEST(GaussianCorrelation, MatchesSpatialOracle) {
    Rng rng(5);
    for (int i = 0; i < 30; ++i) {
        const int rows = 2 + static_cast<int>(rng.index(9));
        const int cols = 2 + static_cast<int>(rng.index(9));
        const RealGrid x = random_grid(rng, rows, cols);
        const RealGrid z = random_grid(rng, rows, cols);
        const double sigma = rng.uniform(0.1, 3.0);
        EXPECT_LE((gaussian_correlation(x, z, sigma) - oracle::spatial_gaussian_correlation(x, z, sigma)).abs().maxCoeff(),
                  1e-6);
    }
}

TEST(GaussianCorrelation, SelfAtZeroLagIsOne) {
    Rng rng(6);
    const RealGrid x = random_grid(rng, 8, 8);
    EXPECT_NEAR(gaussian_correlation(x, x, 0.2)(0, 0), 1.0, 1e-12);
}

TEST(GaussianCorrelation, SwappingArgumentsMirrorsLags) {
    Rng rng(7);
    const RealGrid x = random_grid(rng, 6, 9);
    const RealGrid z = random_grid(rng, 6, 9);
    const RealGrid kxz = gaussian_correlation(x, z, 1.0);
    const RealGrid kzx = gaussian_correlation(z, x, 1.0);
    for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 9; ++c) EXPECT_NEAR(kxz(r, c), kzx((6 - r) % 6, (9 - c) % 9), 1e-12);
    }
}

TEST(GaussianCorrelation, ShapeMismatchThrows) {
    try {
        gaussian_correlation(RealGrid::Zero(4, 4), RealGrid::Zero(4, 5), 0.2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
    }
}

TEST(Kcf, DefaultParameters) {
    const KcfParams p;
    EXPECT_EQ(p.lambda, 1e-4);
    EXPECT_EQ(p.sigma_k, 0.2);
    EXPECT_EQ(p.padding, 2.5);
    EXPECT_EQ(p.interp, 0.02);
    EXPECT_EQ(p.output_sigma_factor, 0.125);
}

TEST(Kcf, StateShapesAgree) {
    Rng rng(8);
    const KcfState s = kcf_init(fixture::random_patch(rng, 160, 120), kBox);
    EXPECT_EQ(s.templ.rows(), s.alpha_hat.rows());
    EXPECT_EQ(s.templ.cols(), s.alpha_hat.cols());
    EXPECT_EQ(s.templ.rows(), s.window.rows());
}

TEST(Kcf, SelfDetectionPeaksAtCentre) {
    Rng rng(9);
    const GrayFrame frame = fixture::random_patch(rng, 160, 120);
    const KcfState s = kcf_init(frame, kBox);
    const ResponseMap map = kcf_response(s, frame);
    Eigen::Index r = -1;
    Eigen::Index c = -1;
    const double peak = map.values.maxCoeff(&r, &c);
    EXPECT_EQ(r, 0);
    EXPECT_EQ(c, 0);
    EXPECT_NEAR(peak, 1.0, 1e-3);
    EXPECT_LE(map.max_imag, 1e-9);
}

TEST(Kcf, UpdateOnSameFrameKeepsRegion) {
    Rng rng(10);
    const GrayFrame frame = fixture::random_patch(rng, 160, 120);
    auto [state, result] = kcf_update(kcf_init(frame, kBox), frame);
    EXPECT_EQ(result.region, kBox);
    EXPECT_EQ(state.region, kBox);
}

TEST(Kcf, ConstantPatchGivesFlatMapAtCentre) {
    const GrayFrame flat(160, 120, 90.0);
    const KcfState s = kcf_init(flat, kBox);
    const ResponseMap map = kcf_response(s, flat);
    EXPECT_LE(map.values.maxCoeff() - map.values.minCoeff(), 1e-9);
    const auto [next, result] = kcf_update(s, flat);
    EXPECT_EQ(result.region, kBox);
}

TEST(Kcf, TinyRegionIsRejected) {
    try {
        kcf_init(GrayFrame(50, 50, 1.0), EyeBox{25.0, 25.0, 1, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
    }
}

TEST(Kcf, RegionOutsideFrameLosesTrack) {
    Rng rng(11);
    KcfState s = kcf_init(fixture::random_patch(rng, 160, 120), kBox);
    s.region.cx = -500.0;
    try {
        kcf_update(s, fixture::random_patch(rng, 160, 120));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TrackLost);
    }
}

TEST(Kcf, RecoversIntegerShiftsOnNoise) {
    Rng rng(12);
    const GrayFrame texture = fixture::random_patch(rng, 300, 300);
    KcfParams params;
    params.interp = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        const int dx = static_cast<int>(rng.index(13)) - 6;
        const int dy = static_cast<int>(rng.index(13)) - 6;
        const KcfState s = kcf_init(fixture::window_of(texture, 70, 90, 160, 120), kBox, params);
        const auto [next, result] = kcf_update(s, fixture::window_of(texture, 70 - dx, 90 - dy, 160, 120));
        EXPECT_EQ(result.region.cx, kBox.cx + dx);
        EXPECT_EQ(result.region.cy, kBox.cy + dy);
    }
}

TEST(Kcf, SmoothTextureShiftsWithinOnePixel) {
    Rng rng(13);
    const GrayFrame texture = fixture::smooth_texture(rng, 300, 300);
    for (int trial = 0; trial < 40; ++trial) {
        const int dx = static_cast<int>(rng.index(13)) - 6;
        const int dy = static_cast<int>(rng.index(13)) - 6;
        const KcfState s = kcf_init(fixture::window_of(texture, 70, 90, 160, 120), kBox);
        const auto [next, result] = kcf_update(s, fixture::window_of(texture, 70 - dx, 90 - dy, 160, 120));
        EXPECT_LE(std::abs(result.region.cx - (kBox.cx + dx)), 1.0);
        EXPECT_LE(std::abs(result.region.cy - (kBox.cy + dy)), 1.0);
    }
}

TEST(Kcf, NoiseFrameScoresBelowTriggerOnEyes) {
    int below = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const EyeTarget t = eye_target(seed);
        Rng rng(mix_seed(14, seed));
        const auto [next, result] =
            kcf_update(kcf_init(t.frame, t.box), fixture::random_patch(rng, t.frame.width(), t.frame.height()));
        below += result.score < 0.25;
    }
    EXPECT_GE(below, 90);
}

TEST(Kcf, ResponseIsRealAfterUpdates) {
    Rng rng(15);
    const GrayFrame texture = fixture::random_patch(rng, 300, 300);
    KcfState s = kcf_init(fixture::window_of(texture, 70, 90, 160, 120), kBox);
    for (int t = 1; t <= 5; ++t) {
        s = kcf_update(std::move(s), fixture::window_of(texture, 70 + t, 90, 160, 120)).first;
        EXPECT_LE(kcf_response(s, fixture::window_of(texture, 70 + t, 90, 160, 120)).max_imag, 1e-9);
    }
}

// Expected peak over 20 noise draws. The maximum of a noisy plateau sits up
// to about 1e-3 above the clean peak, hence the allowance on the first step.
TEST(Kcf, ScoreFallsWithNoiseOnEyes) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const EyeTarget t = eye_target(seed);
        const KcfState s = kcf_init(t.frame, t.box);
        Rng rng(mix_seed(16, seed));
        std::array<double, 3> mean{};
        const double sigmas[3] = {0.0, 8.0, 32.0};
        for (int i = 0; i < 3; ++i) {
            for (int draw = 0; draw < 20; ++draw) mean[i] += kcf_update(s, add_noise(t.frame, rng, sigmas[i])).second.score / 20.0;
        }
        EXPECT_LE(mean[1], mean[0] + 2e-3) << "seed " << seed;
        EXPECT_LE(mean[2], mean[1]) << "seed " << seed;
    }
}

TEST(Kcf, TracksATranslatingPatchFor50Frames) {
    Rng rng(17);
    const GrayFrame texture = fixture::random_patch(rng, 400, 400);
    KcfParams params;
    params.interp = 0.0;
    KcfState s = kcf_init(fixture::window_of(texture, 120, 140, 160, 120), kBox, params);
    int ox = 120;
    for (int t = 1; t <= 50; ++t) {
        ox += t % 2 ? 3 : -2;
        auto [next, result] = kcf_update(std::move(s), fixture::window_of(texture, ox, 140, 160, 120));
        s = std::move(next);
        ASSERT_EQ(result.region.cx, kBox.cx + (120 - ox)) << "frame " << t;
        ASSERT_EQ(result.region.cy, kBox.cy);
    }
}
