#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include "blinkwild/error.hpp"
#include "blinkwild/io.hpp"
#include "blinkwild/mslstm.hpp"
#include "fixtures.hpp"

using namespace blinkwild;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no exception";
    return ErrorKind::Io;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Independent LSTM step over a flat buffer laid out as W_i, W_f, W_o, W_g
// (in x hid, row-major), U_i..U_g (hid x hid), b_i..b_g.
struct RefState {
    std::vector<double> h, c;
};

RefState ref_cell(const double* p, int in, int hid, const std::vector<double>& x, const RefState& prev) {
    std::vector<double> pre(4 * static_cast<std::size_t>(hid), 0.0);
    for (int g = 0; g < 4; ++g) {
        for (int j = 0; j < hid; ++j) {
            double s = p[4 * (in + hid) * hid + g * hid + j];
            for (int r = 0; r < in; ++r) s += x[r] * p[g * in * hid + r * hid + j];
            for (int r = 0; r < hid; ++r) s += prev.h[r] * p[4 * in * hid + g * hid * hid + r * hid + j];
            pre[g * hid + j] = s;
        }
    }
    RefState out{std::vector<double>(hid), std::vector<double>(hid)};
    for (int j = 0; j < hid; ++j) {
        const double i = sigmoid(pre[j]);
        const double f = sigmoid(pre[hid + j]);
        const double o = sigmoid(pre[2 * hid + j]);
        const double g = std::tanh(pre[3 * hid + j]);
        out.c[j] = f * prev.c[j] + i * g;
        out.h[j] = o * std::tanh(out.c[j]);
    }
    return out;
}

std::vector<double> random_buffer(Rng& rng, std::size_t n, double scale) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-scale, scale);
    return v;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

std::size_t cell_size(int in, int hid) { return static_cast<std::size_t>(4 * (in + hid + 1) * hid); }

MsLstmHyper tiny(int layers, int scales, int hidden) {
    MsLstmHyper h;
    h.layers = layers;
    h.scales = scales;
    h.hidden = hidden;
    return h;
}

// Twenty sequences whose class is written into two distinct histogram bins.
std::vector<TrainingSample> separable_set() {
    Rng rng(31);
    std::vector<TrainingSample> out;
    for (int i = 0; i < 20; ++i) {
        const Label label = i % 2 ? Label::Blink : Label::NonBlink;
        FeatureSequence seq = fixture::random_sequence(rng, 4, 0.2);
        for (StepFeature& s : seq.steps) s.appearance[label == Label::Blink ? 3 : 40] += 0.5;
        out.push_back({std::move(seq), label});
    }
    return out;
}

}  // namespace

TEST(LstmCell, ZeroParametersGiveZeroState) {
    const std::vector<double> params(cell_size(3, 2), 0.0);
    const LstmLayerView layer{params.data(), 3, 2};
    const CellState s = lstm_cell(Eigen::Vector3d(1.0, -2.0, 5.0), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), layer);
    EXPECT_EQ(s.c, Eigen::Vector2d::Zero());
    EXPECT_EQ(s.h, Eigen::Vector2d::Zero());
}

TEST(LstmCell, SaturatedGatesKeepMemory) {
    Rng rng(2);
    std::vector<double> params = random_buffer(rng, cell_size(3, 2), 0.1);
    double* bias = params.data() + 4 * (3 + 2) * 2;
    bias[0] = bias[1] = -60.0;  // input gate shut
    bias[2] = bias[3] = 60.0;   // forget gate open
    const LstmLayerView layer{params.data(), 3, 2};
    const Eigen::Vector2d c_prev(0.7, -1.3);
    const CellState s = lstm_cell(Eigen::Vector3d(0.2, 0.1, -0.4), Eigen::Vector2d(0.5, 0.5), c_prev, layer);
    EXPECT_NEAR(s.c[0], c_prev[0], 1e-15);
    EXPECT_NEAR(s.c[1], c_prev[1], 1e-15);
}

TEST(LstmCell, MatchesIndependentStep) {
    Rng rng(7);
    const std::vector<double> params = random_buffer(rng, cell_size(3, 2), 1.0);
    const LstmLayerView layer{params.data(), 3, 2};
    RefState ref{random_buffer(rng, 2, 1.0), random_buffer(rng, 2, 1.0)};
    Eigen::VectorXd h = to_vector(ref.h);
    Eigen::VectorXd c = to_vector(ref.c);
    for (int t = 0; t < 6; ++t) {
        const std::vector<double> x = random_buffer(rng, 3, 2.0);
        const CellState s = lstm_cell(to_vector(x), h, c, layer);
        ref = ref_cell(params.data(), 3, 2, x, ref);
        for (int j = 0; j < 2; ++j) {
            EXPECT_NEAR(s.h[j], ref.h[j], 1e-12);
            EXPECT_NEAR(s.c[j], ref.c[j], 1e-12);
        }
        h = s.h;
        c = s.c;
    }
}

TEST(LstmCell, RejectsBadInputs) {
    const std::vector<double> params(cell_size(3, 2), 0.0);
    const LstmLayerView layer{params.data(), 3, 2};
    EXPECT_EQ(kind_of([&] { lstm_cell(Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), layer); }),
              ErrorKind::InvalidArgument);
    const Eigen::Vector3d bad(0.0, std::numeric_limits<double>::quiet_NaN(), 0.0);
    EXPECT_EQ(kind_of([&] { lstm_cell(bad, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), layer); }),
              ErrorKind::Numeric);
}

TEST(Forward, FeatureIsLastTopLayerStates) {
    const MsLstmModel model = MsLstmModel::initialize(tiny(2, 2, 2), 3);
    Rng rng(4);
    const FeatureSequence seq = fixture::random_sequence(rng, 5, 3.0);
    const ForwardResult r = forward(model, seq);
    ASSERT_EQ(r.feature.size(), 4);

    std::vector<Eigen::VectorXd> inputs;
    for (const StepFeature& s : seq.steps) {
        const auto v = s.concatenated();
        inputs.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()));
    }
    for (int l = 0; l < 2; ++l) {
        Eigen::VectorXd h = Eigen::VectorXd::Zero(2);
        Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
        for (Eigen::VectorXd& x : inputs) {
            const CellState s = lstm_cell(x, h, c, model.layer(l));
            h = s.h;
            c = s.c;
            x = h;
        }
    }
    EXPECT_NEAR((r.feature.head(2) - inputs[3]).norm(), 0.0, 1e-12);
    EXPECT_NEAR((r.feature.tail(2) - inputs[4]).norm(), 0.0, 1e-12);
    EXPECT_NEAR(r.norm, r.feature.norm(), 1e-12);
    for (int cls = 0; cls < 2; ++cls) EXPECT_NEAR(r.cos[cls], model.head(cls).dot(r.feature) / r.norm, 1e-12);
}

TEST(Forward, AnglesIgnoreFeatureScale) {
    const MsLstmModel model = MsLstmModel::initialize(tiny(2, 2, 3), 5);
    Rng rng(5);
    const ForwardResult r = forward(model, fixture::random_sequence(rng, 5));
    const Eigen::VectorXd scaled = 3.0 * r.feature;
    EXPECT_NEAR(scaled.norm(), 3.0 * r.norm, 1e-12);
    for (int cls = 0; cls < 2; ++cls) EXPECT_NEAR(model.head(cls).dot(scaled) / scaled.norm(), r.cos[cls], 1e-12);
}

TEST(Forward, SequenceShorterThanScalesThrows) {
    const MsLstmModel model = MsLstmModel::initialize(tiny(1, 3, 2), 1);
    Rng rng(6);
    EXPECT_EQ(kind_of([&] { forward(model, fixture::random_sequence(rng, 2)); }), ErrorKind::InvalidArgument);
}

TEST(Forward, SingleLayerSingleScaleMatchesReference) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const MsLstmModel model = MsLstmModel::initialize(tiny(1, 1, 4), seed);
        Rng rng(mix_seed(8, seed));
        const FeatureSequence seq = fixture::random_sequence(rng, 6, 5.0);
        const double* p = model.parameters().data();
        const int in = static_cast<int>(kStepDim);
        RefState st{std::vector<double>(4, 0.0), std::vector<double>(4, 0.0)};
        for (const StepFeature& s : seq.steps) {
            const auto v = s.concatenated();
            st = ref_cell(p, in, 4, std::vector<double>(v.begin(), v.end()), st);
        }
        const double* head = p + cell_size(in, 4);
        double norm = 0.0;
        for (double v : st.h) norm += v * v;
        norm = std::sqrt(norm);
        const ForwardResult r = forward(model, seq);
        for (int cls = 0; cls < 2; ++cls) {
            double dot = 0.0;
            for (int j = 0; j < 4; ++j) dot += head[cls * 4 + j] * st.h[j];
            EXPECT_NEAR(r.cos[cls], dot / norm, 1e-12) << "seed " << seed;
        }
        EXPECT_NEAR(r.norm, norm, 1e-12);
    }
}

TEST(Forward, HiddenStatesAreBounded) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        MsLstmModel model = MsLstmModel::initialize(tiny(2, 3, 5), seed);
        model.parameters() *= 10.0;
        Rng rng(mix_seed(9, seed));
        const ForwardResult r = forward(model, fixture::random_sequence(rng, 8, 20.0));
        EXPECT_LE(r.feature.cwiseAbs().maxCoeff(), 1.0);
    }
}

TEST(AngularPsi, EqualsOneAtZeroAngle) {
    for (int m = 1; m <= 6; ++m) EXPECT_NEAR(angular_psi(1.0, m).first, 1.0, 1e-12) << "m " << m;
}

TEST(AngularPsi, MatchesPiecewiseDefinition) {
    Rng rng(10);
    for (int i = 0; i < 200; ++i) {
        const int m = 1 + static_cast<int>(rng.index(5));
        const double theta = rng.uniform(0.0, std::numbers::pi);
        const int k = std::min(m - 1, static_cast<int>(std::floor(theta * m / std::numbers::pi)));
        const double expect = (k % 2 ? -1.0 : 1.0) * std::cos(m * theta) - 2.0 * k;
        EXPECT_NEAR(angular_psi(std::cos(theta), m).first, expect, 1e-9);
    }
}

TEST(AngularPsi, DecreasesWithAngle) {
    for (int m = 1; m <= 5; ++m) {
        double previous = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 300; ++i) {
            const double psi = angular_psi(std::cos(std::numbers::pi * i / 300.0), m).first;
            EXPECT_LE(psi, previous + 1e-12);
            previous = psi;
        }
    }
}

TEST(AngularPsi, DerivativeMatchesDifferences) {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        const int m = 1 + static_cast<int>(rng.index(5));
        const double c = rng.uniform(-0.99, 0.99);
        const double numeric = (angular_psi(c + 1e-6, m).first - angular_psi(c - 1e-6, m).first) / 2e-6;
        EXPECT_NEAR(angular_psi(c, m).second, numeric, 1e-5 * std::max(1.0, std::abs(numeric)));
    }
}

TEST(AsoftmaxLoss, UnitMarginIsModifiedSoftmax) {
    Rng rng(12);
    for (int i = 0; i < 100; ++i) {
        const double n = rng.uniform(0.0, 10.0);
        const double ct = rng.uniform(-1.0, 1.0);
        const double co = rng.uniform(-1.0, 1.0);
        EXPECT_NEAR(asoftmax_loss(n, ct, co, 1).loss, softmax_loss({n * co, n * ct}, 1).loss, 1e-12);
    }
}

TEST(AsoftmaxLoss, GrowsWithMargin) {
    double previous = 0.0;
    for (int m : {1, 2, 3, 4}) {
        const double loss = asoftmax_loss(3.0, std::cos(0.6), std::cos(1.2), m).loss;
        EXPECT_GE(loss, previous) << "m " << m;
        previous = loss;
    }
}

TEST(AsoftmaxLoss, GradientsMatchDifferences) {
    Rng rng(13);
    constexpr double h = 1e-6;
    for (int i = 0; i < 200; ++i) {
        const int m = 1 + static_cast<int>(rng.index(4));
        const double n = rng.uniform(0.1, 8.0);
        const double ct = rng.uniform(-0.98, 0.98);
        const double co = rng.uniform(-0.98, 0.98);
        const LossValue v = asoftmax_loss(n, ct, co, m);
        EXPECT_GE(v.loss, 0.0);
        const auto at = [&](double a, double b, double c) { return asoftmax_loss(a, b, c, m).loss; };
        EXPECT_NEAR(v.d_norm, (at(n + h, ct, co) - at(n - h, ct, co)) / (2 * h), 1e-5);
        EXPECT_NEAR(v.d_cos_true, (at(n, ct + h, co) - at(n, ct - h, co)) / (2 * h), 1e-5 * std::max(1.0, n));
        EXPECT_NEAR(v.d_cos_other, (at(n, ct, co + h) - at(n, ct, co - h)) / (2 * h), 1e-5 * std::max(1.0, n));
    }
}

TEST(AsoftmaxLoss, RejectsZeroMargin) {
    EXPECT_EQ(kind_of([] { asoftmax_loss(1.0, 0.5, 0.5, 0); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([] { angular_psi(0.5, 0); }), ErrorKind::InvalidArgument);
}

TEST(SoftmaxLoss, EqualLogitsGiveLn2) {
    for (double v : {-50.0, 0.0, 3.5, 700.0}) {
        EXPECT_NEAR(softmax_loss({v, v}, 0).loss, std::numbers::ln2, 1e-12);
        EXPECT_NEAR(softmax_loss({v, v}, 1).loss, std::numbers::ln2, 1e-12);
    }
}

TEST(SoftmaxLoss, SaturatesToZero) {
    EXPECT_NEAR(softmax_loss({0.0, 800.0}, 1).loss, 0.0, 1e-300);
    EXPECT_TRUE(std::isfinite(softmax_loss({0.0, 800.0}, 0).loss));
}

TEST(SoftmaxLoss, GradientsMatchDifferences) {
    Rng rng(14);
    for (int i = 0; i < 100; ++i) {
        const std::array<double, 2> z{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        const int label = static_cast<int>(rng.index(2));
        const SoftmaxValue v = softmax_loss(z, label);
        for (int k = 0; k < 2; ++k) {
            std::array<double, 2> up = z;
            std::array<double, 2> down = z;
            up[k] += 1e-6;
            down[k] -= 1e-6;
            EXPECT_NEAR(v.d_logits[k], (softmax_loss(up, label).loss - softmax_loss(down, label).loss) / 2e-6, 1e-6);
        }
    }
}

TEST(Gradients, MatchFiniteDifferencesForBothLosses) {
    Rng rng(15);
    std::vector<TrainingSample> samples;
    for (int i = 0; i < 4; ++i) {
        samples.push_back({fixture::random_sequence(rng, 5, 4.0), i % 2 ? Label::Blink : Label::NonBlink});
    }
    const MsLstmModel model = MsLstmModel::initialize(tiny(2, 2, 3), 16);
    for (LossKind loss : {LossKind::Softmax, LossKind::ASoftmax}) {
        const auto blocks = check_gradients(model, samples, loss);
        EXPECT_FALSE(blocks.empty());
        for (const GradientCheckBlock& b : blocks) EXPECT_LE(b.relative_error, 1e-4) << b.name << " " << to_string(loss);
    }
}

TEST(Gradients, LossMatchesBatchLoss) {
    Rng rng(17);
    std::vector<TrainingSample> samples{{fixture::random_sequence(rng, 4), Label::Blink},
                                        {fixture::random_sequence(rng, 4), Label::NonBlink}};
    const MsLstmModel model = MsLstmModel::initialize(tiny(1, 2, 4), 2);
    Eigen::VectorXd grad;
    EXPECT_DOUBLE_EQ(loss_and_gradient(model, samples, LossKind::ASoftmax, grad),
                     batch_loss(model, samples, LossKind::ASoftmax));
    EXPECT_EQ(grad.size(), model.parameters().size());
}

TEST(Schedule, FollowsTheDecliningTable) {
    const auto s = default_schedule();
    EXPECT_EQ(learning_rate_at(s, 1), 0.01);
    EXPECT_EQ(learning_rate_at(s, 100), 0.01);
    EXPECT_EQ(learning_rate_at(s, 101), 0.001);
    EXPECT_EQ(learning_rate_at(s, 3000), 0.001);
    EXPECT_EQ(learning_rate_at(s, 3001), 0.0001);
    EXPECT_EQ(learning_rate_at(s, 30000), 0.0001);
    EXPECT_EQ(learning_rate_at(s, 30001), 0.00001);
    EXPECT_EQ(learning_rate_at(s, 50000), 0.00001);
    EXPECT_EQ(kind_of([&] { learning_rate_at(s, 50001); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([&] { learning_rate_at(s, 0); }), ErrorKind::InvalidArgument);
}

TEST(Train, AdamDefaults) {
    const TrainConfig c;
    EXPECT_EQ(c.beta1, 0.5);
    EXPECT_EQ(c.beta2, 0.9);
    EXPECT_EQ(c.max_steps, 50000);
}

TEST(Train, SingleClassSetIsRejected) {
    Rng rng(18);
    std::vector<TrainingSample> samples{{fixture::random_sequence(rng, 4), Label::Blink},
                                        {fixture::random_sequence(rng, 4), Label::Blink}};
    TrainConfig c;
    c.max_steps = 5;
    EXPECT_EQ(kind_of([&] { train(tiny(1, 2, 3), samples, c); }), ErrorKind::InvalidDataset);
    EXPECT_EQ(kind_of([&] { train(tiny(1, 2, 3), std::vector<TrainingSample>{}, c); }), ErrorKind::InvalidDataset);
}

TEST(Train, ScheduleGapIsRejected) {
    TrainConfig c;
    c.max_steps = 10;
    c.schedule = {{1, 4, 0.01}, {6, 10, 0.01}};
    EXPECT_EQ(kind_of([&] { train(tiny(1, 2, 3), separable_set(), c); }), ErrorKind::InvalidArgument);
}

TEST(Train, IsDeterministic) {
    TrainConfig c;
    c.max_steps = 40;
    c.batch_size = 8;
    c.seed = 9;
    const TrainResult a = train(tiny(2, 2, 6), separable_set(), c);
    const TrainResult b = train(tiny(2, 2, 6), separable_set(), c);
    EXPECT_EQ(a.loss_history, b.loss_history);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.loss_history.size(), 40u);
}

TEST(Train, HeadStaysUnitNorm) {
    for (int steps : {1, 2, 7, 25}) {
        TrainConfig c;
        c.max_steps = steps;
        c.batch_size = 8;
        const MsLstmModel m = train(tiny(2, 2, 6), separable_set(), c).model;
        for (int cls = 0; cls < 2; ++cls) EXPECT_NEAR(m.head(cls).norm(), 1.0, 1e-9);
    }
}

TEST(Train, SeparableSetIsLearned) {
    const auto samples = separable_set();
    for (LossKind loss : {LossKind::ASoftmax, LossKind::Softmax}) {
        TrainConfig c;
        c.max_steps = 500;
        c.batch_size = 10;
        c.loss = loss;
        const MsLstmModel m = train(tiny(2, 2, 8), samples, c).model;
        int correct = 0;
        for (const TrainingSample& s : samples) {
            const Prediction p = predict(m, s.sequence);
            correct += p.label == s.label;
            if (s.label == Label::Blink) {
                EXPECT_GT(p.confidence, 0.99) << to_string(loss);
            }
        }
        EXPECT_EQ(correct, 20) << to_string(loss);
    }
}

TEST(Train, LossFallsOnSyntheticClips) {
    TrainConfig c;
    c.max_steps = 300;
    const TrainResult r = train(tiny(2, 2, 16), fixture::clip_samples(3, 10), c);
    const auto mean = [](auto first, auto last) { return std::accumulate(first, last, 0.0) / 50.0; };
    EXPECT_LT(mean(r.loss_history.end() - 50, r.loss_history.end()), mean(r.loss_history.begin(), r.loss_history.begin() + 50));
}

TEST(Predict, IdenticalHeadsGiveHalf) {
    MsLstmModel m = MsLstmModel::initialize(tiny(2, 2, 4), 4);
    m.head(1) = m.head(0);
    Rng rng(19);
    EXPECT_NEAR(predict(m, fixture::random_sequence(rng, 5)).confidence, 0.5, 1e-15);
}

TEST(Predict, SwappingHeadsSwapsDecisions) {
    const MsLstmModel m = MsLstmModel::initialize(tiny(2, 2, 4), 5);
    MsLstmModel swapped = m;
    swapped.head(0) = m.head(1);
    swapped.head(1) = m.head(0);
    Rng rng(20);
    for (int i = 0; i < 50; ++i) {
        const FeatureSequence seq = fixture::random_sequence(rng, 5, 5.0);
        const Prediction a = predict(m, seq);
        const Prediction b = predict(swapped, seq);
        if (a.confidence == 0.5) continue;
        EXPECT_NE(a.label, b.label);
        EXPECT_NEAR(a.confidence, 1.0 - b.confidence, 1e-12);
    }
}

TEST(Predict, HeadRescaleThenNormalizeIsInvisible) {
    const MsLstmModel m = MsLstmModel::initialize(tiny(2, 2, 4), 6);
    MsLstmModel scaled = m;
    scaled.head(0) *= 5.0;
    scaled.head(1) *= 5.0;
    Rng rng(21);
    for (int i = 0; i < 20; ++i) {
        const FeatureSequence seq = fixture::random_sequence(rng, 5, 5.0);
        EXPECT_EQ(predict(scaled, seq).label, predict(m, seq).label);
    }
    scaled.normalize_head();
    for (int i = 0; i < 20; ++i) {
        const FeatureSequence seq = fixture::random_sequence(rng, 5, 5.0);
        EXPECT_NEAR(predict(scaled, seq).confidence, predict(m, seq).confidence, 1e-12);
    }
}

TEST(ModelFile, RoundTripsExactly) {
    const MsLstmModel m = MsLstmModel::initialize(tiny(3, 2, 5), 22);
    const fixture::TempDir dir("model");
    save_model(m, dir.path() / "m.msl");
    EXPECT_EQ(load_model(dir.path() / "m.msl"), m);
    const std::string bytes = serialize_model(m);
    EXPECT_EQ(bytes.substr(0, 4), "MSL1");
    EXPECT_EQ(bytes.size(), 24 + 8 * static_cast<std::size_t>(m.parameters().size()));
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 3);  // layers, little-endian
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 5);  // hidden
}

TEST(ModelFile, RejectsDamagedBytes) {
    const std::string bytes = serialize_model(MsLstmModel::initialize(tiny(1, 1, 2), 1));
    EXPECT_EQ(kind_of([&] { deserialize_model("MSL2" + bytes.substr(4)); }), ErrorKind::Parse);
    EXPECT_EQ(kind_of([&] { deserialize_model(bytes.substr(0, bytes.size() - 1)); }), ErrorKind::Parse);
    EXPECT_EQ(kind_of([&] { deserialize_model(bytes + "x"); }), ErrorKind::Parse);
    EXPECT_EQ(kind_of([&] { deserialize_model("MSL"); }), ErrorKind::Parse);
    EXPECT_EQ(kind_of([] { load_model("/nonexistent/blinkwild/model.msl"); }), ErrorKind::MissingAsset);
}

TEST(Hyper, Validation) {
    EXPECT_EQ(kind_of([] { validate_hyper(tiny(0, 2, 3)); }), ErrorKind::InvalidArgument);
    MsLstmHyper h;
    h.margin = 0;
    EXPECT_EQ(kind_of([&] { validate_hyper(h); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(MsLstmHyper{}.layers, 2);
    EXPECT_EQ(MsLstmHyper{}.scales, 2);
    EXPECT_EQ(MsLstmHyper{}.input_dim, 118);
}
