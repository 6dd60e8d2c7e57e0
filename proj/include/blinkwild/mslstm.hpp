#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "blinkwild/dataset.hpp"
#include "blinkwild/features.hpp"

namespace blinkwild {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Gate { Input = 0, Forget = 1, Output = 2, Cell = 3 };
inline constexpr int kGateCount = 4;

enum class LossKind { Softmax, ASoftmax };
std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view text);

struct MsLstmHyper {
    int layers = 2;   // L stacked LSTM layers
    int scales = 2;   // T last top-layer outputs concatenated
    int hidden = 64;
    int input_dim = static_cast<int>(kStepDim);
    int margin = 4;   // angular margin m

    friend bool operator==(const MsLstmHyper&, const MsLstmHyper&) = default;
};

/// Read-only view of one layer. Input weights are input_dim x hidden and
/// recurrent weights hidden x hidden, both row-major: entry (r, c) connects
/// source unit r to hidden unit c.
struct LstmLayerView {
    const double* base = nullptr;
    int input_dim = 0;
    int hidden = 0;

    Eigen::Map<const RowMatrix> input_weights(Gate g) const {
        return {base + static_cast<int>(g) * input_dim * hidden, input_dim, hidden};
    }
    Eigen::Map<const RowMatrix> recurrent_weights(Gate g) const {
        return {base + kGateCount * input_dim * hidden + static_cast<int>(g) * hidden * hidden, hidden, hidden};
    }
    Eigen::Map<const Eigen::VectorXd> bias(Gate g) const {
        return {base + kGateCount * (input_dim + hidden) * hidden + static_cast<int>(g) * hidden, hidden};
    }
};

/// All learnable parameters of the multi-scale stacked LSTM and its two-class
/// angular head, stored in one flat vector in declaration order:
/// per layer W_i, W_f, W_o, W_g, U_i, U_f, U_o, U_g, b_i, b_f, b_o, b_g;
/// then the head weights of class 0 (non-blink) and class 1 (blink).
class MsLstmModel {
public:
    struct Block {
        std::string name;
        std::size_t offset = 0;
        std::size_t rows = 0;
        std::size_t cols = 0;
        std::size_t size() const { return rows * cols; }
    };

    explicit MsLstmModel(const MsLstmHyper& hyper = {});

    /// Seeded initialisation: weights uniform in +-1/sqrt(fan_in), forget-gate
    /// bias +1, other biases 0, head weights Gaussian then unit-normalised.
    static MsLstmModel initialize(const MsLstmHyper& hyper, std::uint64_t seed);

    const MsLstmHyper& hyper() const noexcept { return hyper_; }
    std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(hyper_.scales * hyper_.hidden); }

    Eigen::VectorXd& parameters() noexcept { return params_; }
    const Eigen::VectorXd& parameters() const noexcept { return params_; }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }

    LstmLayerView layer(int index) const;
    Eigen::Map<const Eigen::VectorXd> head(int cls) const;
    Eigen::Map<Eigen::VectorXd> head(int cls);

    /// Projects both head weight vectors back onto the unit sphere.
    void normalize_head();

    friend bool operator==(const MsLstmModel& a, const MsLstmModel& b) {
        return a.hyper_ == b.hyper_ && a.params_ == b.params_;
    }

    std::size_t layer_offset(int index) const;
    std::size_t head_offset(int cls) const;

private:
    MsLstmHyper hyper_;
    Eigen::VectorXd params_;
    std::vector<Block> blocks_;
};

void validate_hyper(const MsLstmHyper& hyper);

struct CellState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;
};

/// One LSTM step: i, f, o = sigmoid(.), g = tanh(.), c = f*c_prev + i*g, h = o*tanh(c).
CellState lstm_cell(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev,
                    const LstmLayerView& layer);

struct ForwardResult {
    Eigen::VectorXd feature;  // last T top-layer hidden states, oldest first
    double norm = 0.0;        // |x|
    std::array<double, 2> cos{};  // cos(theta_c) per class, 0 = non-blink, 1 = blink
};

ForwardResult forward(const MsLstmModel& model, const FeatureSequence& seq);

struct LossValue {
    double loss = 0.0;
    double d_norm = 0.0;       // dL/d|x|
    double d_cos_true = 0.0;   // dL/dcos(theta_y)
    double d_cos_other = 0.0;  // dL/dcos(theta_other)
};

/// psi(theta) = (-1)^k cos(m theta) - 2k on [k pi/m, (k+1) pi/m]; evaluated from
/// cos(theta) through Chebyshev polynomials. Returns {psi, dpsi/dcos}.
std::pair<double, double> angular_psi(double cos_theta, int m);

/// -log(e^{|x| psi(theta_y)} / (e^{|x| psi(theta_y)} + e^{|x| cos theta_other})).
LossValue asoftmax_loss(double norm, double cos_true, double cos_other, int m);

struct SoftmaxValue {
    double loss = 0.0;
    std::array<double, 2> d_logits{};
};

/// Two-class cross-entropy with log-sum-exp stabilisation.
SoftmaxValue softmax_loss(const std::array<double, 2>& logits, int label);

struct TrainingSample {
    FeatureSequence sequence;
    Label label = Label::NonBlink;
};

/// Mean loss over the samples. With LossKind::Softmax the logits are the
/// angular-head scores |x| cos(theta_c).
double batch_loss(const MsLstmModel& model, std::span<const TrainingSample> samples, LossKind loss);

/// Mean loss and its gradient with respect to every parameter (same layout as
/// MsLstmModel::parameters()).
double loss_and_gradient(const MsLstmModel& model, std::span<const TrainingSample> samples, LossKind loss,
                         Eigen::VectorXd& gradient);

struct GradientCheckBlock {
    std::string name;
    double relative_error = 0.0;  // |analytic - numeric| / max(|analytic|, |numeric|), block-wise L2
};

/// Central finite differences over every parameter.
std::vector<GradientCheckBlock> check_gradients(const MsLstmModel& model, std::span<const TrainingSample> samples,
                                                LossKind loss, double step = 1e-5);

struct ScheduleSegment {
    int first_step = 1;
    int last_step = 1;
    double learning_rate = 0.0;
};

/// Declining learning-rate schedule over steps 1..50000.
std::vector<ScheduleSegment> default_schedule();

struct TrainConfig {
    std::vector<ScheduleSegment> schedule = default_schedule();
    double beta1 = 0.5;
    double beta2 = 0.9;
    double epsilon = 1e-8;
    int max_steps = 50000;
    int batch_size = 32;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::ASoftmax;
};

/// Learning rate for a 1-based step; throws if the schedule does not cover it.
double learning_rate_at(const std::vector<ScheduleSegment>& schedule, int step);

struct TrainResult {
    MsLstmModel model;
    std::vector<double> loss_history;  // mean mini-batch loss per step
};

using TrainProgress = std::function<void(int step, double loss)>;

/// ADAM training; deterministic given config.seed. Head weights are
/// re-normalised after every step.
TrainResult train(const MsLstmHyper& hyper, std::span<const TrainingSample> samples, const TrainConfig& config,
                  const TrainProgress& progress = {});

/// Continues training an existing model.
TrainResult train(MsLstmModel model, std::span<const TrainingSample> samples, const TrainConfig& config,
                  const TrainProgress& progress = {});

struct Prediction {
    Label label = Label::NonBlink;
    double confidence = 0.0;  // blink-class probability
};

/// Plain two-class softmax over |x| cos(theta_c); the margin only shapes training.
Prediction predict(const MsLstmModel& model, const FeatureSequence& seq);

/// Binary model file: "MSL1", u32 L, T, hidden, input_dim, m, then float64
/// parameters, all little-endian.
void save_model(const MsLstmModel& model, const std::filesystem::path& path);
MsLstmModel load_model(const std::filesystem::path& path);
std::string serialize_model(const MsLstmModel& model);
MsLstmModel deserialize_model(std::string_view bytes);

}  // namespace blinkwild
