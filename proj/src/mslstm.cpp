#include "blinkwild/mslstm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "blinkwild/error.hpp"
#include "blinkwild/io.hpp"
#include "blinkwild/random.hpp"

namespace blinkwild {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr const char* kGateNames[kGateCount] = {"i", "f", "o", "g"};

using Matrix = Eigen::MatrixXd;

std::size_t layer_size(int input_dim, int hidden) {
    return static_cast<std::size_t>(kGateCount) * (static_cast<std::size_t>(input_dim) * hidden +
                                                   static_cast<std::size_t>(hidden) * hidden + hidden);
}

int layer_input_dim(const MsLstmHyper& h, int layer) { return layer == 0 ? h.input_dim : h.hidden; }

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

double softplus(double d) { return std::max(d, 0.0) + std::log1p(std::exp(-std::abs(d))); }

double logistic(double d) { return d >= 0.0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d)); }

struct StepCache {
    Matrix i, f, o, g, c, tc, h;
};

using LayerTrace = std::vector<StepCache>;

// Input sequences packed per time step: inputs[t] is input_dim x batch.
std::vector<Matrix> pack_inputs(std::span<const TrainingSample> samples, std::span<const std::size_t> indices,
                                int input_dim) {
    const std::size_t steps = samples[indices[0]].sequence.size();
    std::vector<Matrix> inputs(steps, Matrix(input_dim, static_cast<Eigen::Index>(indices.size())));
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const FeatureSequence& seq = samples[indices[b]].sequence;
        for (std::size_t t = 0; t < steps; ++t) {
            const auto values = seq.steps[t].concatenated();
            inputs[t].col(static_cast<Eigen::Index>(b)) = Eigen::Map<const Eigen::VectorXd>(values.data(), input_dim);
        }
    }
    return inputs;
}

std::vector<LayerTrace> run_layers(const MsLstmModel& model, const std::vector<Matrix>& inputs) {
    const MsLstmHyper& hp = model.hyper();
    const Eigen::Index batch = inputs.front().cols();
    std::vector<LayerTrace> traces(static_cast<std::size_t>(hp.layers));
    std::vector<Matrix> layer_in = inputs;
    for (int l = 0; l < hp.layers; ++l) {
        const LstmLayerView view = model.layer(l);
        LayerTrace& trace = traces[static_cast<std::size_t>(l)];
        trace.resize(layer_in.size());
        Matrix h = Matrix::Zero(hp.hidden, batch);
        Matrix c = Matrix::Zero(hp.hidden, batch);
        for (std::size_t t = 0; t < layer_in.size(); ++t) {
            const Matrix& x = layer_in[t];
            auto pre = [&](Gate g) {
                Matrix z = view.input_weights(g).transpose() * x;
                z.noalias() += view.recurrent_weights(g).transpose() * h;
                z.colwise() += view.bias(g);
                return z;
            };
            StepCache& st = trace[t];
            st.i = sigmoid(pre(Gate::Input));
            st.f = sigmoid(pre(Gate::Forget));
            st.o = sigmoid(pre(Gate::Output));
            st.g = pre(Gate::Cell).array().tanh().matrix();
            st.c = (st.f.array() * c.array() + st.i.array() * st.g.array()).matrix();
            st.tc = st.c.array().tanh().matrix();
            st.h = (st.o.array() * st.tc.array()).matrix();
            h = st.h;
            c = st.c;
        }
        for (std::size_t t = 0; t < layer_in.size(); ++t) layer_in[t] = trace[t].h;
    }
    return traces;
}

// Concatenation of the last T top-layer outputs, oldest first: (T*hidden) x batch.
Matrix head_features(const MsLstmHyper& hp, const LayerTrace& top) {
    const std::size_t steps = top.size();
    Matrix x(static_cast<Eigen::Index>(hp.scales) * hp.hidden, top.front().h.cols());
    for (int j = 0; j < hp.scales; ++j) {
        x.middleRows(static_cast<Eigen::Index>(j) * hp.hidden, hp.hidden) = top[steps - hp.scales + j].h;
    }
    return x;
}

void check_sequences(const MsLstmModel& model, std::span<const TrainingSample> samples) {
    if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "no samples");
    const std::size_t steps = samples.front().sequence.size();
    if (steps < static_cast<std::size_t>(model.hyper().scales)) {
        throw Error(ErrorKind::InvalidArgument, "sequence shorter than the temporal scale count");
    }
    if (model.hyper().input_dim != static_cast<int>(kStepDim)) {
        throw Error(ErrorKind::InvalidArgument, "model input dimension does not match step features");
    }
    for (const TrainingSample& s : samples) {
        if (s.sequence.size() != steps) {
            throw Error(ErrorKind::InvalidArgument, "sequences in one batch must share a length");
        }
    }
}

struct HeadTerms {
    double loss = 0.0;
    Eigen::VectorXd d_feature;
    std::array<Eigen::VectorXd, 2> d_head;
};

// Loss of one sample given its head feature, with gradients scaled by `scale`.
HeadTerms head_loss(const MsLstmModel& model, const Eigen::VectorXd& x, int label, LossKind kind, double scale) {
    HeadTerms out;
    out.d_feature = Eigen::VectorXd::Zero(x.size());
    out.d_head = {Eigen::VectorXd::Zero(x.size()), Eigen::VectorXd::Zero(x.size())};
    const double s = x.norm();
    std::array<double, 2> wn{model.head(0).norm(), model.head(1).norm()};
    std::array<double, 2> cos{0.0, 0.0};
    if (s > 0.0) {
        for (int c = 0; c < 2; ++c) cos[c] = model.head(c).dot(x) / (wn[c] * s);
    }
    const int other = 1 - label;
    double d_norm = 0.0;
    std::array<double, 2> d_cos{0.0, 0.0};
    if (kind == LossKind::ASoftmax) {
        const LossValue lv = asoftmax_loss(s, cos[label], cos[other], model.hyper().margin);
        out.loss = lv.loss;
        d_norm = lv.d_norm;
        d_cos[label] = lv.d_cos_true;
        d_cos[other] = lv.d_cos_other;
    } else {
        const SoftmaxValue sv = softmax_loss({s * cos[0], s * cos[1]}, label);
        out.loss = sv.loss;
        for (int c = 0; c < 2; ++c) {
            d_norm += sv.d_logits[c] * cos[c];
            d_cos[c] = sv.d_logits[c] * s;
        }
    }
    if (s == 0.0) return out;
    out.d_feature = (scale * d_norm / s) * x;
    for (int c = 0; c < 2; ++c) {
        const auto w = model.head(c);
        out.d_feature += (scale * d_cos[c]) * (w / (wn[c] * s) - (cos[c] / (s * s)) * x);
        out.d_head[c] = (scale * d_cos[c]) * (x / (wn[c] * s) - (cos[c] / (wn[c] * wn[c])) * w);
    }
    return out;
}

double run_batch(const MsLstmModel& model, std::span<const TrainingSample> samples,
                 std::span<const std::size_t> indices, LossKind kind, Eigen::VectorXd* gradient) {
    const MsLstmHyper& hp = model.hyper();
    const std::vector<Matrix> inputs = pack_inputs(samples, indices, hp.input_dim);
    const std::vector<LayerTrace> traces = run_layers(model, inputs);
    const Matrix features = head_features(hp, traces.back());
    const auto batch = static_cast<Eigen::Index>(indices.size());
    const double scale = 1.0 / static_cast<double>(batch);

    double total = 0.0;
    Matrix d_features(features.rows(), batch);
    if (gradient != nullptr) gradient->setZero(model.parameters().size());
    for (Eigen::Index b = 0; b < batch; ++b) {
        const int label = static_cast<int>(samples[indices[static_cast<std::size_t>(b)]].label);
        const HeadTerms terms = head_loss(model, features.col(b), label, kind, scale);
        total += terms.loss;
        if (gradient != nullptr) {
            d_features.col(b) = terms.d_feature;
            for (int c = 0; c < 2; ++c) {
                gradient->segment(static_cast<Eigen::Index>(model.head_offset(c)), features.rows()) += terms.d_head[c];
            }
        }
    }
    if (gradient == nullptr) return total * scale;

    // Backpropagation through time, top layer first.
    const std::size_t steps = inputs.size();
    std::vector<Matrix> d_h_in(steps, Matrix::Zero(hp.hidden, batch));
    for (int j = 0; j < hp.scales; ++j) {
        d_h_in[steps - hp.scales + j] = d_features.middleRows(static_cast<Eigen::Index>(j) * hp.hidden, hp.hidden);
    }
    for (int l = hp.layers - 1; l >= 0; --l) {
        const LstmLayerView view = model.layer(l);
        const LayerTrace& trace = traces[static_cast<std::size_t>(l)];
        const int in_dim = layer_input_dim(hp, l);
        double* base = gradient->data() + model.layer_offset(l);
        auto d_w = [&](Gate g) {
            return Eigen::Map<RowMatrix>(base + static_cast<int>(g) * in_dim * hp.hidden, in_dim, hp.hidden);
        };
        auto d_u = [&](Gate g) {
            return Eigen::Map<RowMatrix>(base + kGateCount * in_dim * hp.hidden + static_cast<int>(g) * hp.hidden * hp.hidden,
                                         hp.hidden, hp.hidden);
        };
        auto d_b = [&](Gate g) {
            return Eigen::Map<Eigen::VectorXd>(base + kGateCount * (in_dim + hp.hidden) * hp.hidden +
                                                   static_cast<int>(g) * hp.hidden,
                                               hp.hidden);
        };
        const Matrix zero = Matrix::Zero(hp.hidden, batch);
        Matrix dh_next = zero;
        Matrix dc_next = zero;
        std::vector<Matrix> d_x(l > 0 ? steps : 0);
        for (std::size_t t = steps; t-- > 0;) {
            const StepCache& st = trace[t];
            const Matrix& c_prev = t > 0 ? trace[t - 1].c : zero;
            const Matrix& h_prev = t > 0 ? trace[t - 1].h : zero;
            const Matrix& x = l == 0 ? inputs[t] : traces[static_cast<std::size_t>(l - 1)][t].h;
            const Matrix dh = d_h_in[t] + dh_next;
            const auto one = 1.0;
            const Matrix dc = dc_next + (dh.array() * st.o.array() * (one - st.tc.array().square())).matrix();
            std::array<Matrix, kGateCount> dz;
            dz[0] = (dc.array() * st.g.array() * st.i.array() * (one - st.i.array())).matrix();
            dz[1] = (dc.array() * c_prev.array() * st.f.array() * (one - st.f.array())).matrix();
            dz[2] = (dh.array() * st.tc.array() * st.o.array() * (one - st.o.array())).matrix();
            dz[3] = (dc.array() * st.i.array() * (one - st.g.array().square())).matrix();
            dc_next = (dc.array() * st.f.array()).matrix();
            dh_next.setZero();
            if (l > 0) d_x[t] = Matrix::Zero(in_dim, batch);
            for (int g = 0; g < kGateCount; ++g) {
                const Gate gate = static_cast<Gate>(g);
                d_w(gate).noalias() += x * dz[g].transpose();
                d_u(gate).noalias() += h_prev * dz[g].transpose();
                d_b(gate) += dz[g].rowwise().sum();
                dh_next.noalias() += view.recurrent_weights(gate) * dz[g];
                if (l > 0) d_x[t].noalias() += view.input_weights(gate) * dz[g];
            }
        }
        if (l > 0) d_h_in = std::move(d_x);
    }
    return total * scale;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

std::uint64_t get_le(std::string_view in, std::size_t offset, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    return v;
}

}  // namespace

std::string_view to_string(LossKind kind) { return kind == LossKind::ASoftmax ? "asoftmax" : "softmax"; }

LossKind parse_loss_kind(std::string_view text) {
    if (text == "asoftmax") return LossKind::ASoftmax;
    if (text == "softmax") return LossKind::Softmax;
    throw Error(ErrorKind::InvalidArgument, "unknown loss '" + std::string(text) + "'");
}

void validate_hyper(const MsLstmHyper& h) {
    if (h.layers < 1 || h.scales < 1 || h.hidden < 1 || h.input_dim < 1) {
        throw Error(ErrorKind::InvalidArgument, "layers, scales, hidden and input_dim must be positive");
    }
    if (h.margin < 1) throw Error(ErrorKind::InvalidArgument, "angular margin m must be at least 1");
}

MsLstmModel::MsLstmModel(const MsLstmHyper& hyper) : hyper_(hyper) {
    validate_hyper(hyper);
    std::size_t offset = 0;
    for (int l = 0; l < hyper.layers; ++l) {
        const auto in = static_cast<std::size_t>(layer_input_dim(hyper, l));
        const auto h = static_cast<std::size_t>(hyper.hidden);
        const std::string prefix = "layer" + std::to_string(l) + ".";
        for (const char* g : kGateNames) {
            blocks_.push_back({prefix + "W_" + g, offset, in, h});
            offset += in * h;
        }
        for (const char* g : kGateNames) {
            blocks_.push_back({prefix + "U_" + g, offset, h, h});
            offset += h * h;
        }
        for (const char* g : kGateNames) {
            blocks_.push_back({prefix + "b_" + g, offset, h, 1});
            offset += h;
        }
    }
    for (int c = 0; c < 2; ++c) {
        blocks_.push_back({"head.W_" + std::to_string(c), offset, feature_dim(), 1});
        offset += feature_dim();
    }
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

std::size_t MsLstmModel::layer_offset(int index) const {
    std::size_t offset = 0;
    for (int l = 0; l < index; ++l) offset += layer_size(layer_input_dim(hyper_, l), hyper_.hidden);
    return offset;
}

std::size_t MsLstmModel::head_offset(int cls) const {
    return layer_offset(hyper_.layers) + static_cast<std::size_t>(cls) * feature_dim();
}

LstmLayerView MsLstmModel::layer(int index) const {
    return {params_.data() + layer_offset(index), layer_input_dim(hyper_, index), hyper_.hidden};
}

Eigen::Map<const Eigen::VectorXd> MsLstmModel::head(int cls) const {
    return {params_.data() + head_offset(cls), static_cast<Eigen::Index>(feature_dim())};
}

Eigen::Map<Eigen::VectorXd> MsLstmModel::head(int cls) {
    return {params_.data() + head_offset(cls), static_cast<Eigen::Index>(feature_dim())};
}

void MsLstmModel::normalize_head() {
    for (int c = 0; c < 2; ++c) {
        auto w = head(c);
        const double n = w.norm();
        if (n > 0.0) w /= n;
    }
}

MsLstmModel MsLstmModel::initialize(const MsLstmHyper& hyper, std::uint64_t seed) {
    MsLstmModel model(hyper);
    Rng rng(seed);
    for (const Block& b : model.blocks_) {
        double* p = model.params_.data() + b.offset;
        if (b.name.find(".W_") != std::string::npos && b.name.rfind("head", 0) != 0) {
            const double r = 1.0 / std::sqrt(static_cast<double>(b.rows));
            for (std::size_t k = 0; k < b.size(); ++k) p[k] = rng.uniform(-r, r);
        } else if (b.name.find(".U_") != std::string::npos) {
            const double r = 1.0 / std::sqrt(static_cast<double>(b.rows));
            for (std::size_t k = 0; k < b.size(); ++k) p[k] = rng.uniform(-r, r);
        } else if (b.name.find(".b_f") != std::string::npos) {
            std::fill(p, p + b.size(), 1.0);
        } else if (b.name.rfind("head", 0) == 0) {
            for (std::size_t k = 0; k < b.size(); ++k) p[k] = rng.normal();
        }
    }
    model.normalize_head();
    return model;
}

CellState lstm_cell(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev,
                    const LstmLayerView& layer) {
    if (x.size() != layer.input_dim || h_prev.size() != layer.hidden || c_prev.size() != layer.hidden) {
        throw Error(ErrorKind::InvalidArgument, "lstm_cell dimension mismatch");
    }
    if (!x.allFinite() || !h_prev.allFinite() || !c_prev.allFinite()) {
        throw Error(ErrorKind::Numeric, "lstm_cell received a non-finite input");
    }
    auto pre = [&](Gate g) -> Eigen::VectorXd {
        return layer.input_weights(g).transpose() * x + layer.recurrent_weights(g).transpose() * h_prev + layer.bias(g);
    };
    const Eigen::VectorXd i = sigmoid(pre(Gate::Input));
    const Eigen::VectorXd f = sigmoid(pre(Gate::Forget));
    const Eigen::VectorXd o = sigmoid(pre(Gate::Output));
    const Eigen::VectorXd g = pre(Gate::Cell).array().tanh().matrix();
    CellState out;
    out.c = (f.array() * c_prev.array() + i.array() * g.array()).matrix();
    out.h = (o.array() * out.c.array().tanh()).matrix();
    return out;
}

ForwardResult forward(const MsLstmModel& model, const FeatureSequence& seq) {
    if (seq.size() < static_cast<std::size_t>(model.hyper().scales)) {
        throw Error(ErrorKind::InvalidArgument, "sequence shorter than the temporal scale count");
    }
    const TrainingSample sample{seq, Label::NonBlink};
    check_sequences(model, std::span(&sample, 1));
    const std::size_t index = 0;
    const std::vector<Matrix> inputs = pack_inputs(std::span(&sample, 1), std::span(&index, 1), model.hyper().input_dim);
    const std::vector<LayerTrace> traces = run_layers(model, inputs);
    ForwardResult out;
    out.feature = head_features(model.hyper(), traces.back()).col(0);
    out.norm = out.feature.norm();
    for (int c = 0; c < 2; ++c) {
        const double wn = model.head(c).norm();
        out.cos[c] = out.norm > 0.0 && wn > 0.0 ? model.head(c).dot(out.feature) / (wn * out.norm) : 0.0;
    }
    return out;
}

std::pair<double, double> angular_psi(double cos_theta, int m) {
    if (m < 1) throw Error(ErrorKind::InvalidArgument, "angular margin m must be at least 1");
    const double c = std::clamp(cos_theta, -1.0, 1.0);
    const double theta = std::acos(c);
    const int k = std::min(m - 1, static_cast<int>(std::floor(theta * m / kPi)));
    // T_m(c) = cos(m theta) and dT_m/dc = m U_{m-1}(c).
    double t_prev = 1.0;
    double t_cur = c;
    double u_prev = 0.0;
    double u_cur = 1.0;
    for (int n = 1; n < m; ++n) {
        const double t_next = 2.0 * c * t_cur - t_prev;
        const double u_next = 2.0 * c * u_cur - u_prev;
        t_prev = t_cur;
        t_cur = t_next;
        u_prev = u_cur;
        u_cur = u_next;
    }
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    return {sign * t_cur - 2.0 * k, sign * m * u_cur};
}

LossValue asoftmax_loss(double norm, double cos_true, double cos_other, int m) {
    if (m < 1) throw Error(ErrorKind::InvalidArgument, "angular margin m must be at least 1");
    const auto [psi, dpsi] = angular_psi(cos_true, m);
    const double d = norm * (cos_other - psi);
    const double p = logistic(d);
    LossValue out;
    out.loss = softplus(d);
    out.d_norm = p * (cos_other - psi);
    out.d_cos_true = -p * norm * dpsi;
    out.d_cos_other = p * norm;
    return out;
}

SoftmaxValue softmax_loss(const std::array<double, 2>& logits, int label) {
    if (label != 0 && label != 1) throw Error(ErrorKind::InvalidArgument, "label must be 0 or 1");
    const double mx = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - mx);
    const double e1 = std::exp(logits[1] - mx);
    const double lse = mx + std::log(e0 + e1);
    SoftmaxValue out;
    out.loss = lse - logits[label];
    out.d_logits = {e0 / (e0 + e1), e1 / (e0 + e1)};
    out.d_logits[label] -= 1.0;
    return out;
}

double batch_loss(const MsLstmModel& model, std::span<const TrainingSample> samples, LossKind loss) {
    check_sequences(model, samples);
    const auto idx = all_indices(samples.size());
    return run_batch(model, samples, idx, loss, nullptr);
}

double loss_and_gradient(const MsLstmModel& model, std::span<const TrainingSample> samples, LossKind loss,
                         Eigen::VectorXd& gradient) {
    check_sequences(model, samples);
    const auto idx = all_indices(samples.size());
    return run_batch(model, samples, idx, loss, &gradient);
}

std::vector<GradientCheckBlock> check_gradients(const MsLstmModel& model, std::span<const TrainingSample> samples,
                                                LossKind loss, double step) {
    Eigen::VectorXd analytic;
    loss_and_gradient(model, samples, loss, analytic);
    MsLstmModel probe = model;
    std::vector<GradientCheckBlock> out;
    for (const MsLstmModel::Block& b : model.blocks()) {
        Eigen::VectorXd numeric(static_cast<Eigen::Index>(b.size()));
        for (std::size_t k = 0; k < b.size(); ++k) {
            double& p = probe.parameters()[static_cast<Eigen::Index>(b.offset + k)];
            const double saved = p;
            p = saved + step;
            const double up = batch_loss(probe, samples, loss);
            p = saved - step;
            const double down = batch_loss(probe, samples, loss);
            p = saved;
            numeric[static_cast<Eigen::Index>(k)] = (up - down) / (2.0 * step);
        }
        const auto a = analytic.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.size()));
        const double denom = std::max(a.norm(), numeric.norm());
        out.push_back({b.name, denom > 0.0 ? (a - numeric).norm() / denom : 0.0});
    }
    return out;
}

std::vector<ScheduleSegment> default_schedule() {
    return {{1, 100, 0.01}, {101, 3000, 0.001}, {3001, 30000, 0.0001}, {30001, 50000, 0.00001}};
}

double learning_rate_at(const std::vector<ScheduleSegment>& schedule, int step) {
    for (const ScheduleSegment& s : schedule) {
        if (step >= s.first_step && step <= s.last_step) return s.learning_rate;
    }
    throw Error(ErrorKind::InvalidArgument, "learning-rate schedule does not cover step " + std::to_string(step));
}

namespace {

void validate_config(const TrainConfig& config) {
    if (config.max_steps < 1 || config.batch_size < 1) {
        throw Error(ErrorKind::InvalidArgument, "max_steps and batch_size must be positive");
    }
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "ADAM betas must lie in [0, 1)");
    }
    int expected = 1;
    for (const ScheduleSegment& s : config.schedule) {
        if (s.first_step != expected || s.last_step < s.first_step || !(s.learning_rate > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "learning-rate schedule must be contiguous from step 1");
        }
        expected = s.last_step + 1;
    }
    if (expected <= config.max_steps) {
        throw Error(ErrorKind::InvalidArgument, "learning-rate schedule ends before max_steps");
    }
}

}  // namespace

TrainResult train(const MsLstmHyper& hyper, std::span<const TrainingSample> samples, const TrainConfig& config,
                  const TrainProgress& progress) {
    return train(MsLstmModel::initialize(hyper, mix_seed(config.seed, 1)), samples, config, progress);
}

TrainResult train(MsLstmModel model, std::span<const TrainingSample> samples, const TrainConfig& config,
                  const TrainProgress& progress) {
    validate_config(config);
    if (samples.empty()) throw Error(ErrorKind::InvalidDataset, "training set is empty");
    const bool has_blink = std::any_of(samples.begin(), samples.end(), [](const auto& s) { return s.label == Label::Blink; });
    const bool has_other = std::any_of(samples.begin(), samples.end(), [](const auto& s) { return s.label == Label::NonBlink; });
    if (!has_blink || !has_other) throw Error(ErrorKind::InvalidDataset, "training set must contain both classes");
    check_sequences(model, samples);
    model.normalize_head();

    Rng shuffle_rng(mix_seed(config.seed, 2));
    std::vector<std::size_t> order = all_indices(samples.size());
    std::size_t cursor = order.size();
    const auto n_params = model.parameters().size();
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(n_params);
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(n_params);
    Eigen::VectorXd grad;
    double beta1_power = 1.0;
    double beta2_power = 1.0;

    TrainResult result{model, {}};
    result.loss_history.reserve(static_cast<std::size_t>(config.max_steps));
    for (int step = 1; step <= config.max_steps; ++step) {
        if (cursor >= order.size()) {
            shuffle_rng.shuffle(order.begin(), order.end());
            cursor = 0;
        }
        const std::size_t take = std::min(static_cast<std::size_t>(config.batch_size), order.size() - cursor);
        const std::span<const std::size_t> batch(order.data() + cursor, take);
        cursor += take;

        const double loss = run_batch(result.model, samples, batch, config.loss, &grad);
        if (!std::isfinite(loss) || !grad.allFinite()) {
            throw Error(ErrorKind::Numeric, "training diverged at step " + std::to_string(step));
        }
        const double lr = learning_rate_at(config.schedule, step);
        beta1_power *= config.beta1;
        beta2_power *= config.beta2;
        m1 = config.beta1 * m1 + (1.0 - config.beta1) * grad;
        m2 = config.beta2 * m2 + (1.0 - config.beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - beta1_power;
        const double c2 = 1.0 - beta2_power;
        result.model.parameters().array() -=
            lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + config.epsilon);
        result.model.normalize_head();
        result.loss_history.push_back(loss);
        if (progress) progress(step, loss);
    }
    return result;
}

Prediction predict(const MsLstmModel& model, const FeatureSequence& seq) {
    const ForwardResult f = forward(model, seq);
    Prediction p;
    p.confidence = logistic(f.norm * (f.cos[1] - f.cos[0]));
    p.label = p.confidence > 0.5 ? Label::Blink : Label::NonBlink;
    return p;
}

std::string serialize_model(const MsLstmModel& model) {
    const MsLstmHyper& h = model.hyper();
    std::string out = "MSL1";
    for (int v : {h.layers, h.scales, h.hidden, h.input_dim, h.margin}) put_u32(out, static_cast<std::uint32_t>(v));
    for (Eigen::Index i = 0; i < model.parameters().size(); ++i) {
        put_u64(out, std::bit_cast<std::uint64_t>(model.parameters()[i]));
    }
    return out;
}

MsLstmModel deserialize_model(std::string_view bytes) {
    if (bytes.size() < 24 || bytes.substr(0, 4) != "MSL1") throw Error(ErrorKind::Parse, "not an MS-LSTM model file");
    MsLstmHyper h;
    h.layers = static_cast<int>(get_le(bytes, 4, 4));
    h.scales = static_cast<int>(get_le(bytes, 8, 4));
    h.hidden = static_cast<int>(get_le(bytes, 12, 4));
    h.input_dim = static_cast<int>(get_le(bytes, 16, 4));
    h.margin = static_cast<int>(get_le(bytes, 20, 4));
    if (h.layers > 64 || h.scales > 4096 || h.hidden > 65536 || h.input_dim > 65536) {
        throw Error(ErrorKind::Parse, "implausible model dimensions");
    }
    MsLstmModel model(h);
    const auto n = static_cast<std::size_t>(model.parameters().size());
    if (bytes.size() != 24 + 8 * n) throw Error(ErrorKind::Parse, "model file size does not match its header");
    for (std::size_t i = 0; i < n; ++i) {
        model.parameters()[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(get_le(bytes, 24 + 8 * i, 8));
    }
    return model;
}

void save_model(const MsLstmModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_model(model));
}

MsLstmModel load_model(const std::filesystem::path& path) {
    try {
        return deserialize_model(read_text_file(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Parse) throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
        throw;
    }
}

}  // namespace blinkwild
