#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace pista;

namespace {

void randomize(ConvLayerParams& p, std::mt19937_64& rng, double scale = 0.3)
{
    std::normal_distribution<double> n(0.0, scale);
    for (auto& w : p.weights) w = n(rng);
    for (auto& b : p.bias) b = n(rng);
}

RealFeatureMap random_map(int c, int h, int w, std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    RealFeatureMap m(c, h, w);
    for (auto& v : m.values()) v = n(rng);
    return m;
}

double max_diff(const RealFeatureMap& a, const RealFeatureMap& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

RealFeatureMap relu(RealFeatureMap m)
{
    for (auto& v : m.values()) v = std::max(v, 0.0);
    return m;
}

RealFeatureMap two_channels(const ComplexImage& x)
{
    RealFeatureMap m(2, x.height(), x.width());
    for (int r = 0; r < x.height(); ++r)
        for (int c = 0; c < x.width(); ++c) {
            m(0, r, c) = x(r, c).real();
            m(1, r, c) = x(r, c).imag();
        }
    return m;
}

Sample tiny_sample(int size, int coils, std::uint64_t seed, double af = 2.0)
{
    PhantomSpec p;
    p.height = p.width = size;
    p.smooth_phase = true;
    AcquisitionSpec a;
    a.coils = coils;
    a.af = af;
    a.seed = seed;
    return make_sample(p, a, 0);
}

/// Zero-weight network whose data are noise-free and fully sampled.
Sample full_sample(int size, int coils, std::uint64_t seed)
{
    Sample s = tiny_sample(size, coils, seed);
    s.mask = SamplingMask::full(size, size);
    s.kspace = sense_forward(s.truth, s.coils, s.mask);
    return s;
}

} // namespace

TEST(Conv, IdentityKernel)
{
    std::mt19937_64 rng(40);
    ConvLayerParams id(1, 1, 3);
    id.weight(0, 0, 1, 1) = 1.0;
    const RealFeatureMap x = random_map(1, 6, 7, rng);
    EXPECT_EQ(conv2d_same(x, id), x);
}

TEST(Conv, OnesKernelCountsPadding)
{
    ConvLayerParams ones(1, 1, 3);
    std::fill(ones.weights.begin(), ones.weights.end(), 1.0);
    RealFeatureMap x(1, 5, 5);
    for (auto& v : x.values()) v = 2.0;
    const auto y = conv2d_same(x, ones);
    EXPECT_EQ(y(0, 2, 2), 18.0);
    EXPECT_EQ(y(0, 0, 0), 8.0);
    EXPECT_EQ(y(0, 4, 4), 8.0);
    EXPECT_EQ(y(0, 0, 2), 12.0);
}

TEST(Conv, MatchesNestedLoopOracle)
{
    std::mt19937_64 rng(41);
    ConvLayerParams p(2, 1, 3);
    randomize(p, rng);
    const RealFeatureMap x = random_map(1, 5, 5, rng);
    EXPECT_LE(max_diff(conv2d_same(x, p), oracle::conv(x, p)), 1e-12);

    ConvLayerParams q(7, 4, 5);
    randomize(q, rng);
    const RealFeatureMap z = random_map(4, 9, 6, rng);
    EXPECT_LE(max_diff(conv2d_same(z, q), oracle::conv(z, q)), 1e-12);
}

TEST(Conv, BackwardMatchesAdjointAndFiniteDifferences)
{
    std::mt19937_64 rng(42);
    ConvLayerParams p(3, 2, 3);
    randomize(p, rng);
    const RealFeatureMap x = random_map(2, 6, 5, rng);
    const RealFeatureMap g = random_map(3, 6, 5, rng);
    ConvLayerParams gp(3, 2, 3);
    RealFeatureMap gx;
    conv2d_same_backward(x, p, g, gp, &gx);

    // L = <g, conv(x)>; dL/dx, dL/dW and dL/db from central differences of the oracle
    const auto objective = [&](const RealFeatureMap& in, const ConvLayerParams& layer) {
        const auto y = oracle::conv(in, layer);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += g[i] * y[i];
        return s;
    };
    const double h = 1e-6;
    for (std::size_t i = 0; i < x.size(); i += 7) {
        RealFeatureMap up = x, down = x;
        up[i] += h;
        down[i] -= h;
        EXPECT_NEAR(gx[i], (objective(up, p) - objective(down, p)) / (2 * h), 1e-7);
    }
    for (std::size_t i = 0; i < p.weights.size(); i += 5) {
        ConvLayerParams up = p, down = p;
        up.weights[i] += h;
        down.weights[i] -= h;
        EXPECT_NEAR(gp.weights[i], (objective(x, up) - objective(x, down)) / (2 * h), 1e-7);
    }
    for (std::size_t i = 0; i < p.bias.size(); ++i) {
        ConvLayerParams up = p, down = p;
        up.bias[i] += h;
        down.bias[i] -= h;
        EXPECT_NEAR(gp.bias[i], (objective(x, up) - objective(x, down)) / (2 * h), 1e-7);
    }
}

TEST(Conv, ChannelMismatch)
{
    ConvLayerParams p(2, 3, 3);
    EXPECT_THROW(conv2d_same(RealFeatureMap(2, 4, 4), p), ShapeError);
    EXPECT_THROW(ConvLayerParams(2, 2, 2), ShapeError);
}

TEST(ForwardOperation, ZeroWeightsGiveZero)
{
    std::mt19937_64 rng(43);
    const auto block = NetworkParams::zeros({1, 3, 4, 3}, Variant::ResNet).blocks[0];
    const auto a = forward_operation(oracle::random_image(8, 8, rng), block.forward_layers);
    EXPECT_EQ(a.channels(), 4);
    for (double v : a.values()) EXPECT_EQ(v, 0.0);
}

TEST(ForwardOperation, SingleLayerCopiesRealPart)
{
    std::mt19937_64 rng(44);
    ConvLayerParams copy(3, 2, 3);
    copy.weight(0, 0, 1, 1) = 1.0;
    const ComplexImage t = oracle::random_image(6, 6, rng);
    const auto a = forward_operation(t, {copy});
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) {
            EXPECT_EQ(a(0, r, c), t(r, c).real());
            EXPECT_EQ(a(1, r, c), 0.0);
        }
}

TEST(ForwardOperation, MatchesLayerByLayerOracle)
{
    std::mt19937_64 rng(45);
    std::vector<ConvLayerParams> layers{ConvLayerParams(4, 2, 3), ConvLayerParams(4, 4, 3), ConvLayerParams(3, 4, 3)};
    for (auto& l : layers) randomize(l, rng);
    const ComplexImage t = oracle::random_image(7, 8, rng);
    RealFeatureMap ref = two_channels(t);
    ref = relu(oracle::conv(ref, layers[0]));
    ref = relu(oracle::conv(ref, layers[1]));
    ref = oracle::conv(ref, layers[2]);
    EXPECT_LE(max_diff(forward_operation(t, layers), ref), 1e-12);

    RealFeatureMap lin = oracle::conv(oracle::conv(oracle::conv(two_channels(t), layers[0]), layers[1]), layers[2]);
    EXPECT_LE(max_diff(forward_operation(t, layers, Activation::Identity), lin), 1e-12);
}

TEST(LearnedThreshold, Examples)
{
    RealFeatureMap a(1, 1, 3, {1.0, -0.2, -1.0});
    const auto out = learned_soft_threshold(a, 1.0, 0.3);
    EXPECT_DOUBLE_EQ(out[0], 0.7);
    EXPECT_EQ(out[1], 0.0);
    EXPECT_DOUBLE_EQ(out[2], -0.7);
    EXPECT_EQ(learned_soft_threshold(a, 1.0, 0.0), a);
    // negative product thresholds by its magnitude
    EXPECT_EQ(learned_soft_threshold(a, -1.0, 0.3), out);
}

TEST(LearnedThreshold, MonotoneInLambda)
{
    std::mt19937_64 rng(46);
    const RealFeatureMap a = random_map(3, 5, 5, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda = 0.0; lambda < 3.0; lambda += 0.1) {
        const auto out = learned_soft_threshold(a, 1.0, lambda);
        double n = 0.0;
        for (double v : out.values()) n += v * v;
        EXPECT_LE(n, prev);
        prev = n;
    }
}

TEST(BackwardOperation, ZeroWeightsGiveZeroImage)
{
    const auto block = NetworkParams::zeros({1, 2, 4, 3}, Variant::ResNet).blocks[0];
    std::mt19937_64 rng(47);
    const auto x = backward_operation(random_map(4, 6, 6, rng), block.backward_layers);
    EXPECT_EQ(norm(x), 0.0);
}

TEST(BackwardOperation, CopyKernelsRebuildComplexImage)
{
    std::mt19937_64 rng(48);
    ConvLayerParams copy(2, 2, 3);
    copy.weight(0, 0, 1, 1) = 1.0;
    copy.weight(1, 1, 1, 1) = 1.0;
    const RealFeatureMap m = random_map(2, 5, 6, rng);
    const ComplexImage x = backward_operation(m, {copy});
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 6; ++c) EXPECT_EQ(x(r, c), Complex(m(0, r, c), m(1, r, c)));
}

TEST(BackwardOperation, MatchesLayerByLayerOracle)
{
    std::mt19937_64 rng(49);
    std::vector<ConvLayerParams> layers{ConvLayerParams(5, 3, 3), ConvLayerParams(2, 5, 3)};
    for (auto& l : layers) randomize(l, rng);
    const RealFeatureMap a = random_map(3, 6, 6, rng);
    const RealFeatureMap ref = oracle::conv(relu(oracle::conv(a, layers[0])), layers[1]);
    const ComplexImage x = backward_operation(a, layers);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) {
            EXPECT_NEAR(x(r, c).real(), ref(0, r, c), 1e-12);
            EXPECT_NEAR(x(r, c).imag(), ref(1, r, c), 1e-12);
        }
    EXPECT_THROW(backward_operation(a, {ConvLayerParams(3, 3, 3)}), ShapeError);
}

TEST(IterationBlock, ZeroWeightsReduceToDataConsistency)
{
    const Sample s = tiny_sample(16, 2, 50);
    std::mt19937_64 rng(50);
    const ComplexImage x = oracle::random_image(16, 16, rng);
    const auto block = NetworkParams::zeros({1, 2, 4, 3}, Variant::ResNet).blocks[0];
    const ComplexImage t = data_consistency(x, s.kspace, s.coils, s.mask, block.gamma);
    EXPECT_EQ(iteration_block(x, s.kspace, s.coils, s.mask, block, Variant::ResNet), t);
    EXPECT_EQ(norm(iteration_block(x, s.kspace, s.coils, s.mask, block, Variant::Net)), 0.0);
}

TEST(IterationBlock, FullSamplingZeroWeightsRecoverTruth)
{
    const Sample s = full_sample(16, 3, 51);
    std::mt19937_64 rng(51);
    const auto block = NetworkParams::zeros({1, 2, 4, 3}, Variant::ResNet).blocks[0];
    const ComplexImage out = iteration_block(oracle::random_image(16, 16, rng), s.kspace, s.coils, s.mask, block,
                                             Variant::ResNet);
    EXPECT_LE(norm(out - s.truth), 1e-12 * norm(s.truth));
}

TEST(NetworkForward, ZeroWeightsFullSamplingResNetAndNet)
{
    const Sample s = full_sample(16, 2, 52);
    const auto res = network_forward(s.kspace, s.coils, s.mask, NetworkParams::zeros({4, 2, 4, 3}, Variant::ResNet));
    ASSERT_EQ(res.size(), 4u);
    for (const auto& x : res) EXPECT_LE(norm(x - s.truth), 1e-12 * norm(s.truth));
    const auto net = network_forward(s.kspace, s.coils, s.mask, NetworkParams::zeros({3, 2, 4, 3}, Variant::Net));
    for (const auto& x : net) EXPECT_EQ(norm(x), 0.0);
}

TEST(NetworkForward, ResidualIdentityIsRepeatedDataConsistency)
{
    const Sample s = tiny_sample(16, 2, 53, 3.0);
    auto params = NetworkParams::zeros({4, 2, 4, 3}, Variant::ResNet);
    params.blocks[1].gamma = 0.5;
    const auto outs = network_forward(s.kspace, s.coils, s.mask, params);
    ComplexImage x = sense_adjoint(s.kspace, s.coils, s.mask);
    for (std::size_t k = 0; k < outs.size(); ++k) {
        x = data_consistency(x, s.kspace, s.coils, s.mask, params.blocks[k].gamma);
        EXPECT_EQ(outs[k], x);
    }
}

TEST(NetworkForward, MatchesManualBlockComposition)
{
    const Sample s = tiny_sample(16, 2, 54);
    for (Variant v : {Variant::ResNet, Variant::Net}) {
        const NetworkParams p = xavier_init({3, 2, 4, 3}, v, 9);
        const auto outs = network_forward(s.kspace, s.coils, s.mask, p);
        ComplexImage x = sense_adjoint(s.kspace, s.coils, s.mask);
        for (std::size_t k = 0; k < 3; ++k) {
            x = iteration_block(x, s.kspace, s.coils, s.mask, p.blocks[k], v);
            EXPECT_EQ(outs[k], x);
            EXPECT_EQ(x.height(), 16);
            EXPECT_EQ(x.width(), 16);
        }
    }
}

TEST(NetworkForward, ShapeErrors)
{
    const Sample s = tiny_sample(16, 2, 55);
    const NetworkParams p = xavier_init({2, 2, 4, 3}, Variant::ResNet, 1);
    const Sample other = tiny_sample(16, 3, 55);
    EXPECT_THROW(network_forward(s.kspace, other.coils, s.mask, p), ShapeError);
    NetworkParams broken = p;
    broken.blocks[1].forward_layers.pop_back();
    EXPECT_THROW(network_forward(s.kspace, s.coils, s.mask, broken), ShapeError);
}

TEST(Loss, Examples)
{
    std::mt19937_64 rng(56);
    const ComplexImage truth = oracle::random_image(6, 6, rng);
    EXPECT_EQ(loss({truth, truth, truth}, truth), 0.0);
    const ComplexImage e = oracle::random_image(6, 6, rng);
    EXPECT_NEAR(loss({truth + e}, truth), squared_norm(e), 1e-12 * squared_norm(e));

    std::vector<ComplexImage> outs{oracle::random_image(6, 6, rng), oracle::random_image(6, 6, rng)};
    double ref = 0.0;
    for (const auto& x : outs)
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) {
                const double dr = truth(r, c).real() - x(r, c).real();
                const double di = truth(r, c).imag() - x(r, c).imag();
                ref += dr * dr + di * di;
            }
    EXPECT_NEAR(loss(outs, truth), ref, 1e-12 * ref);
    EXPECT_THROW(loss({ComplexImage(5, 6)}, truth), ShapeError);
}

TEST(NetworkBackward, ZeroGradientAtExactMinimum)
{
    const Sample s = full_sample(16, 2, 57);
    const auto r = network_backward(s.kspace, s.coils, s.mask, NetworkParams::zeros({2, 2, 4, 3}, Variant::ResNet), s.truth);
    EXPECT_LE(r.loss, 1e-20);
    GradientSet g = r.gradients;
    for (const auto& t : parameter_tensors(g))
        for (double v : t.values) EXPECT_LE(std::abs(v), 1e-9);
}

TEST(NetworkBackward, LossMatchesForward)
{
    const Sample s = tiny_sample(16, 2, 58);
    const NetworkParams p = xavier_init({2, 2, 8, 3}, Variant::Net, 4);
    const auto r = network_backward(s.kspace, s.coils, s.mask, p, s.truth);
    EXPECT_EQ(r.loss, loss(network_forward(s.kspace, s.coils, s.mask, p), s.truth));
}

TEST(NetworkBackward, GammaAndLambdaMatchFiniteDifferences)
{
    const Sample s = tiny_sample(16, 2, 59);
    for (Variant v : {Variant::ResNet, Variant::Net}) {
        NetworkParams p = xavier_init({2, 2, 8, 3}, v, 5);
        p.blocks[0].lambda = 0.05;
        p.blocks[1].gamma = 0.8;
        p.blocks[1].lambda = 0.02;
        const auto r = network_backward(s.kspace, s.coils, s.mask, p, s.truth);
        const auto eval = [&](const NetworkParams& q, ActivationPattern& pattern) {
            pattern.bits.clear();
            return loss(detail::run_network(s.kspace, s.coils, s.mask, q, nullptr, &pattern), s.truth);
        };
        ActivationPattern base, pu, pd;
        eval(p, base);
        for (int b = 0; b < 2; ++b)
            for (double BlockParams::*field : {&BlockParams::gamma, &BlockParams::lambda}) {
                // shrink the step until no branch flips
                double numeric = 0.0;
                bool clean = false;
                for (double h = 1e-5; !clean && h > 1e-8; h /= 10.0) {
                    NetworkParams up = p, down = p;
                    up.blocks[b].*field += h;
                    down.blocks[b].*field -= h;
                    numeric = (eval(up, pu) - eval(down, pd)) / (2 * h);
                    clean = pu == base && pd == base;
                }
                ASSERT_TRUE(clean);
                const double exact = r.gradients.blocks[b].*field;
                EXPECT_LE(std::abs(numeric - exact), 1e-4 * std::max({std::abs(numeric), std::abs(exact), 1e-6}))
                    << "block " << b << " numeric " << numeric << " exact " << exact;
            }
    }
}

TEST(NetworkBackward, Deterministic)
{
    const Sample s = tiny_sample(16, 2, 60);
    const NetworkParams p = xavier_init({2, 2, 8, 3}, Variant::ResNet, 6);
    const auto a = network_backward(s.kspace, s.coils, s.mask, p, s.truth);
    const auto b = network_backward(s.kspace, s.coils, s.mask, p, s.truth);
    EXPECT_EQ(a.loss, b.loss);
    EXPECT_EQ(a.gradients, b.gradients);
}

TEST(Xavier, DeterministicWithDocumentedScalars)
{
    const NetworkShape shape = NetworkShape::desk();
    const auto a = xavier_init(shape, Variant::ResNet, 7);
    EXPECT_EQ(a, xavier_init(shape, Variant::ResNet, 7));
    EXPECT_NE(a, xavier_init(shape, Variant::ResNet, 8));
    for (const auto& b : a.blocks) {
        EXPECT_EQ(b.gamma, 1.0);
        EXPECT_EQ(b.lambda, 0.001);
        for (const auto* layers : {&b.forward_layers, &b.backward_layers})
            for (const auto& l : *layers)
                for (double v : l.bias) EXPECT_EQ(v, 0.0);
    }
}

TEST(Xavier, WeightVarianceMatchesGlorot)
{
    // 16 → 16 channels, 3×3: 2304 weights per layer, 45 layers per 10⁵ samples
    const NetworkShape shape{8, 3, 16, 3};
    std::vector<double> w;
    for (std::uint64_t seed = 0; w.size() < 100000; ++seed) {
        const auto p = xavier_init(shape, Variant::ResNet, seed);
        for (const auto& b : p.blocks) {
            w.insert(w.end(), b.forward_layers[1].weights.begin(), b.forward_layers[1].weights.end());
            w.insert(w.end(), b.backward_layers[0].weights.begin(), b.backward_layers[0].weights.end());
        }
    }
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(w.size());
    double var = 0.0;
    for (double v : w) var += (v - mean) * (v - mean);
    var /= static_cast<double>(w.size() - 1);
    const double expected = 2.0 / ((16 + 16) * 9.0);
    EXPECT_LE(std::abs(var - expected), 0.1 * expected);
}

TEST(Parameters, CountAndOrder)
{
    auto p = NetworkParams::zeros({2, 2, 4, 3}, Variant::ResNet);
    // per block: γ, λ, P: (4·2·9 + 4) + (4·4·9 + 4), Q: (4·4·9 + 4) + (2·4·9 + 2)
    EXPECT_EQ(parameter_count(p), 2u * (2 + 76 + 148 + 148 + 74));
    const auto t = parameter_tensors(p);
    ASSERT_EQ(t.size(), 2u * 10);
    EXPECT_EQ(t[0].kind, TensorKind::Gamma);
    EXPECT_EQ(t[1].kind, TensorKind::Lambda);
    EXPECT_EQ(t[2].kind, TensorKind::ForwardWeight);
    EXPECT_EQ(t[3].kind, TensorKind::ForwardBias);
    EXPECT_EQ(t[6].kind, TensorKind::BackwardWeight);
    EXPECT_EQ(t[9].kind, TensorKind::BackwardBias);
    EXPECT_EQ(t[10].block, 1);
}
