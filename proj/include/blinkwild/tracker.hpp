#pragma once

#include <utility>

#include "blinkwild/dft.hpp"
#include "blinkwild/features.hpp"
#include "blinkwild/image.hpp"

namespace blinkwild {

/// Kernelized correlation filter settings. Defaults follow the public KCF
/// configuration for raw grayscale features.
struct KcfParams {
    double lambda = 1e-4;
    double sigma_k = 0.2;
    double padding = 2.5;
    double interp = 0.02;
    double output_sigma_factor = 0.125;
};

/// Single-channel KCF model. Patches are scaled to [0, 1], made zero-mean and
/// Hann windowed; the target response peaks at lag (0, 0).
struct KcfState {
    RealGrid templ;          // learned appearance
    ComplexGrid templ_hat;   // DFT of templ
    ComplexGrid alpha_hat;   // dual coefficients
    ComplexGrid target_hat;  // DFT of the Gaussian target response
    RealGrid window;
    EyeBox region;           // size is fixed for the whole track
    KcfParams params;
};

struct TrackResult {
    EyeBox region;
    double score = 0.0;  // peak of the real response map
};

struct ResponseMap {
    RealGrid values;
    double max_imag = 0.0;
};

/// k(tau) = exp(-max(0, |x|^2 + |z|^2 - 2 sum_p x(p + tau) z(p)) / (sigma_k^2 N)),
/// with the circular correlation evaluated through one DFT pair.
RealGrid gaussian_correlation(const RealGrid& x, const RealGrid& z, double sigma_k);

KcfState kcf_init(const GrayFrame& frame, const EyeBox& region, const KcfParams& params = {});

/// Detects at the previous region, moves by the response argmax (lags unwrapped
/// into [-N/2, N/2)), retrains there and blends the model with `interp`.
std::pair<KcfState, TrackResult> kcf_update(KcfState state, const GrayFrame& frame);

/// Response map for `frame` at the state's current region, without updating.
ResponseMap kcf_response(const KcfState& state, const GrayFrame& frame);

}  // namespace blinkwild
