#include "blinkwild/tracker.hpp"

#include <cmath>

#include "blinkwild/dataset.hpp"
#include "blinkwild/error.hpp"

namespace blinkwild {

namespace {

constexpr double kPi = 3.14159265358979323846;

EyeSize padded_size(const EyeBox& region, double padding) {
    return {static_cast<int>(std::lround(region.h * padding)), static_cast<int>(std::lround(region.w * padding))};
}

RealGrid hann_window(int rows, int cols) {
    auto hann = [](int n) {
        Eigen::ArrayXd w(n);
        for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / (n - 1)));
        return w;
    };
    const Eigen::ArrayXd wr = hann(rows);
    const Eigen::ArrayXd wc = hann(cols);
    RealGrid w(rows, cols);
    for (int r = 0; r < rows; ++r) w.row(r) = wr[r] * wc.transpose();
    return w;
}

// Gaussian response centred on lag (0, 0) with circular wrap-around.
RealGrid gaussian_target(int rows, int cols, double sigma) {
    RealGrid y(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const int dr = r < (rows + 1) / 2 ? r : r - rows;
        for (int c = 0; c < cols; ++c) {
            const int dc = c < (cols + 1) / 2 ? c : c - cols;
            y(r, c) = std::exp(-0.5 * (dr * dr + dc * dc) / (sigma * sigma));
        }
    }
    return y;
}

bool outside_frame(const EyeBox& region, const GrayFrame& frame) {
    const double x0 = region.cx - region.w / 2.0;
    const double y0 = region.cy - region.h / 2.0;
    return x0 + region.w <= 0.0 || y0 + region.h <= 0.0 || x0 >= frame.width() || y0 >= frame.height();
}

RealGrid extract_features(const GrayFrame& frame, const EyeBox& region, const RealGrid& window, double padding) {
    const EyeSize size = padded_size(region, padding);
    const GrayFrame patch = crop_eye(frame, region.center(), size);
    RealGrid x(size.height, size.width);
    for (int r = 0; r < size.height; ++r) {
        for (int c = 0; c < size.width; ++c) x(r, c) = patch.at(c, r) / 255.0;
    }
    x -= x.mean();
    return x * window;
}

// Kernel map from spectra of x and z; argument order as in gaussian_correlation.
RealGrid kernel_from_spectra(const ComplexGrid& x_hat, const ComplexGrid& z_hat, double xx, double zz,
                             double sigma_k) {
    const RealGrid corr = idft2_real(x_hat * z_hat.conjugate());
    const double n = static_cast<double>(x_hat.size());
    return (-((xx + zz - 2.0 * corr) / n).max(0.0) / (sigma_k * sigma_k)).exp();
}

struct Trained {
    RealGrid x;
    ComplexGrid x_hat;
    ComplexGrid alpha_hat;
};

Trained train(const GrayFrame& frame, const EyeBox& region, const KcfState& shape) {
    Trained t;
    t.x = extract_features(frame, region, shape.window, shape.params.padding);
    t.x_hat = dft2(t.x);
    const double xx = t.x.square().sum();
    const RealGrid kxx = kernel_from_spectra(t.x_hat, t.x_hat, xx, xx, shape.params.sigma_k);
    t.alpha_hat = shape.target_hat / (dft2(kxx) + shape.params.lambda);
    return t;
}

}  // namespace

RealGrid gaussian_correlation(const RealGrid& x, const RealGrid& z, double sigma_k) {
    if (x.rows() != z.rows() || x.cols() != z.cols()) {
        throw Error(ErrorKind::InvalidArgument, "gaussian correlation needs equally sized inputs");
    }
    return kernel_from_spectra(dft2(x), dft2(z), x.square().sum(), z.square().sum(), sigma_k);
}

KcfState kcf_init(const GrayFrame& frame, const EyeBox& region, const KcfParams& params) {
    if (region.h < 1 || region.w < 1 || params.padding < 1.0 || params.sigma_k <= 0.0 || params.lambda < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "degenerate KCF region or parameters");
    }
    const EyeSize size = padded_size(region, params.padding);
    if (size.height < 2 || size.width < 2 || size.height * size.width < 16) {
        throw Error(ErrorKind::InvalidArgument, "padded KCF region must cover at least 16 px");
    }
    if (outside_frame(region, frame)) throw Error(ErrorKind::TrackLost, "initial region lies outside the frame");
    KcfState state;
    state.params = params;
    state.region = region;
    state.window = hann_window(size.height, size.width);
    const double sigma = params.output_sigma_factor * std::sqrt(static_cast<double>(size.height) * size.width) /
                         params.padding;
    state.target_hat = dft2(gaussian_target(size.height, size.width, sigma));
    Trained t = train(frame, region, state);
    state.templ = std::move(t.x);
    state.templ_hat = std::move(t.x_hat);
    state.alpha_hat = std::move(t.alpha_hat);
    return state;
}

ResponseMap kcf_response(const KcfState& state, const GrayFrame& frame) {
    if (outside_frame(state.region, frame)) throw Error(ErrorKind::TrackLost, "tracked region left the frame");
    const RealGrid z = extract_features(frame, state.region, state.window, state.params.padding);
    const ComplexGrid z_hat = dft2(z);
    const RealGrid kzx =
        kernel_from_spectra(z_hat, state.templ_hat, z.square().sum(), state.templ.square().sum(), state.params.sigma_k);
    ResponseMap map;
    map.values = idft2_real(state.alpha_hat * dft2(kzx), &map.max_imag);
    return map;
}

std::pair<KcfState, TrackResult> kcf_update(KcfState state, const GrayFrame& frame) {
    const ResponseMap response = kcf_response(state, frame);
    Eigen::Index peak_r = 0;
    Eigen::Index peak_c = 0;
    const double score = response.values.maxCoeff(&peak_r, &peak_c);
    const auto rows = response.values.rows();
    const auto cols = response.values.cols();
    const auto dy = peak_r >= rows / 2 + rows % 2 ? peak_r - rows : peak_r;
    const auto dx = peak_c >= cols / 2 + cols % 2 ? peak_c - cols : peak_c;
    state.region.cx += static_cast<double>(dx);
    state.region.cy += static_cast<double>(dy);
    if (outside_frame(state.region, frame)) throw Error(ErrorKind::TrackLost, "tracked region left the frame");

    const Trained t = train(frame, state.region, state);
    const double f = state.params.interp;
    state.templ = (1.0 - f) * state.templ + f * t.x;
    state.templ_hat = (1.0 - f) * state.templ_hat + f * t.x_hat;
    state.alpha_hat = (1.0 - f) * state.alpha_hat + f * t.alpha_hat;
    TrackResult result{state.region, score};
    return {std::move(state), result};
}

}  // namespace blinkwild
