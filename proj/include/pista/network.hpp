#pragma once

// Unrolled pISTA-SENSE network: S iteration blocks of
//   t_s     = x_s + γ_s A^H (y − A x_s)           (data consistency)
//   a_s     = P_s t_s                             (forward CNN)
//   ã_s     = shrink(a_s, |γ_s λ_s|)              (learned soft threshold)
//   x_{s+1} = t_s + Q_s ã_s   (ResNet)  or  Q_s ã_s  (Net)
// with hand-written reverse-mode gradients of Σ_s ‖x_truth − x_{s+1}‖².

#include <pista/sense.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pista {

enum class Variant { ResNet, Net };

/// Nonlinearity between conv layers. Identity exists so gradient checks can run on a smooth network.
enum class Activation { Relu, Identity };

inline std::string to_string(Variant v) { return v == Variant::ResNet ? "resnet" : "net"; }

inline Variant parse_variant(const std::string& s)
{
    if (s == "resnet") return Variant::ResNet;
    if (s == "net") return Variant::Net;
    throw ConfigError("unknown network variant '" + s + "' (expected resnet|net)");
}

struct ConvLayerParams {
    int out_channels = 0;
    int in_channels = 0;
    int kernel = 0;
    std::vector<double> weights; ///< out × in × kernel × kernel, row-major
    std::vector<double> bias;    ///< out

    ConvLayerParams() = default;

    ConvLayerParams(int out, int in, int k)
        : out_channels(out), in_channels(in), kernel(k),
          weights(static_cast<std::size_t>(out) * in * k * k, 0.0), bias(static_cast<std::size_t>(out), 0.0)
    {
        validate();
    }

    void validate() const
    {
        detail::require_shape(out_channels > 0 && in_channels > 0, "ConvLayerParams: channel counts must be positive");
        detail::require_shape(kernel > 0 && kernel % 2 == 1, "ConvLayerParams: kernel size must be odd");
        detail::require_shape(weights.size() == static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel,
                              "ConvLayerParams: weight tensor size mismatch");
        detail::require_shape(bias.size() == static_cast<std::size_t>(out_channels),
                              "ConvLayerParams: bias size mismatch");
    }

    double& weight(int o, int i, int ky, int kx) noexcept
    {
        return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel + kx];
    }

    friend bool operator==(const ConvLayerParams&, const ConvLayerParams&) = default;
};

struct BlockParams {
    double gamma = 1.0;
    double lambda = 0.001;
    std::vector<ConvLayerParams> forward_layers;  ///< P_s
    std::vector<ConvLayerParams> backward_layers; ///< Q_s

    friend bool operator==(const BlockParams&, const BlockParams&) = default;
};

/// Architecture hyper-parameters: S blocks, L layers per operator, K filters of size h×h.
struct NetworkShape {
    int blocks = 5;
    int layers = 3;
    int channels = 16;
    int kernel = 3;

    static NetworkShape desk() { return {5, 3, 16, 3}; }
    static NetworkShape paper() { return {10, 3, 48, 3}; }

    void validate() const
    {
        detail::require_config(blocks >= 1, "NetworkShape: at least one block required");
        detail::require_config(layers >= 1, "NetworkShape: at least one layer per operator required");
        detail::require_config(channels >= 1, "NetworkShape: channel count must be positive");
        detail::require_config(kernel >= 1 && kernel % 2 == 1, "NetworkShape: kernel size must be odd");
    }

    friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

namespace detail {

inline BlockParams zero_block(const NetworkShape& shape)
{
    BlockParams b;
    for (int l = 0; l < shape.layers; ++l) {
        const int in = l == 0 ? 2 : shape.channels;
        b.forward_layers.emplace_back(shape.channels, in, shape.kernel);
    }
    for (int l = 0; l < shape.layers; ++l) {
        const int out = l == shape.layers - 1 ? 2 : shape.channels;
        b.backward_layers.emplace_back(out, shape.channels, shape.kernel);
    }
    return b;
}

} // namespace detail

struct NetworkParams {
    std::vector<BlockParams> blocks;
    Variant variant = Variant::ResNet;
    Activation activation = Activation::Relu;

    /// All weights, biases zero; γ_s = 1, λ_s = 0.001.
    static NetworkParams zeros(const NetworkShape& shape, Variant variant)
    {
        shape.validate();
        NetworkParams p;
        p.variant = variant;
        p.blocks.assign(shape.blocks, detail::zero_block(shape));
        return p;
    }

    NetworkShape shape() const
    {
        detail::require_shape(!blocks.empty() && !blocks.front().forward_layers.empty(), "NetworkParams: empty network");
        const auto& first = blocks.front().forward_layers.front();
        return {static_cast<int>(blocks.size()), static_cast<int>(blocks.front().forward_layers.size()),
                first.out_channels, first.kernel};
    }

    void validate() const
    {
        const NetworkShape s = shape();
        s.validate();
        const BlockParams reference = detail::zero_block(s);
        for (const auto& b : blocks) {
            detail::require_shape(b.forward_layers.size() == reference.forward_layers.size() &&
                                      b.backward_layers.size() == reference.backward_layers.size(),
                                  "NetworkParams: blocks differ in depth");
            for (std::size_t l = 0; l < b.forward_layers.size(); ++l) {
                const auto& got = b.forward_layers[l];
                const auto& want = reference.forward_layers[l];
                got.validate();
                detail::require_shape(got.in_channels == want.in_channels && got.out_channels == want.out_channels &&
                                          got.kernel == want.kernel,
                                      "NetworkParams: forward layer layout mismatch");
            }
            for (std::size_t l = 0; l < b.backward_layers.size(); ++l) {
                const auto& got = b.backward_layers[l];
                const auto& want = reference.backward_layers[l];
                got.validate();
                detail::require_shape(got.in_channels == want.in_channels && got.out_channels == want.out_channels &&
                                          got.kernel == want.kernel,
                                      "NetworkParams: backward layer layout mismatch");
            }
        }
    }

    friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// Gradients (or any per-parameter accumulator) laid out exactly like NetworkParams.
struct GradientSet {
    std::vector<BlockParams> blocks;

    static GradientSet zeros_like(const NetworkParams& params)
    {
        GradientSet g;
        g.blocks = params.blocks;
        for (auto& b : g.blocks) {
            b.gamma = 0.0;
            b.lambda = 0.0;
            for (auto* layers : {&b.forward_layers, &b.backward_layers})
                for (auto& layer : *layers) {
                    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
                    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
                }
        }
        return g;
    }

    friend bool operator==(const GradientSet&, const GradientSet&) = default;
};

enum class TensorKind { Gamma, Lambda, ForwardWeight, ForwardBias, BackwardWeight, BackwardBias };

struct TensorRef {
    std::span<double> values;
    TensorKind kind;
    int block;
    int layer; ///< -1 for γ/λ
};

/// Every parameter tensor in declaration order: per block γ, λ, then (W, b) of each P layer and each Q layer.
inline std::vector<TensorRef> parameter_tensors(std::vector<BlockParams>& blocks)
{
    std::vector<TensorRef> out;
    for (int s = 0; s < static_cast<int>(blocks.size()); ++s) {
        auto& b = blocks[s];
        out.push_back({std::span<double>(&b.gamma, 1), TensorKind::Gamma, s, -1});
        out.push_back({std::span<double>(&b.lambda, 1), TensorKind::Lambda, s, -1});
        for (int l = 0; l < static_cast<int>(b.forward_layers.size()); ++l) {
            out.push_back({b.forward_layers[l].weights, TensorKind::ForwardWeight, s, l});
            out.push_back({b.forward_layers[l].bias, TensorKind::ForwardBias, s, l});
        }
        for (int l = 0; l < static_cast<int>(b.backward_layers.size()); ++l) {
            out.push_back({b.backward_layers[l].weights, TensorKind::BackwardWeight, s, l});
            out.push_back({b.backward_layers[l].bias, TensorKind::BackwardBias, s, l});
        }
    }
    return out;
}

inline std::vector<TensorRef> parameter_tensors(NetworkParams& p) { return parameter_tensors(p.blocks); }
inline std::vector<TensorRef> parameter_tensors(GradientSet& g) { return parameter_tensors(g.blocks); }

inline std::size_t parameter_count(const NetworkParams& p)
{
    std::size_t n = 0;
    for (const auto& t : parameter_tensors(const_cast<NetworkParams&>(p))) n += t.values.size();
    return n;
}

// ---------------------------------------------------------------------------
// Convolution

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Lowers a C×H×W map into a (C·k·k)×(H·W) patch matrix with zero same-padding.
inline void im2col(const RealFeatureMap& in, int k, RowMatrix& cols)
{
    const int channels = in.channels();
    const int h = in.height();
    const int w = in.width();
    const int pad = k / 2;
    cols.resize(static_cast<Eigen::Index>(channels) * k * k, static_cast<Eigen::Index>(h) * w);
    for (int c = 0; c < channels; ++c) {
        const double* plane = in.channel(c).data();
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                double* row = cols.row((static_cast<Eigen::Index>(c) * k + ky) * k + kx).data();
                const int dx = kx - pad;
                const int x_lo = std::max(0, -dx);
                const int x_hi = std::min(w, w - dx);
                for (int y = 0; y < h; ++y) {
                    double* dst = row + static_cast<std::size_t>(y) * w;
                    const int ys = y + ky - pad;
                    if (ys < 0 || ys >= h || x_lo >= x_hi) {
                        std::fill(dst, dst + w, 0.0);
                        continue;
                    }
                    const double* src = plane + static_cast<std::size_t>(ys) * w;
                    std::fill(dst, dst + x_lo, 0.0);
                    for (int x = x_lo; x < x_hi; ++x) dst[x] = src[x + dx];
                    std::fill(dst + x_hi, dst + w, 0.0);
                }
            }
        }
    }
}

/// Adjoint of im2col: scatters patch gradients back onto the map (accumulating).
inline void col2im_add(const RowMatrix& cols, int k, RealFeatureMap& out)
{
    const int channels = out.channels();
    const int h = out.height();
    const int w = out.width();
    const int pad = k / 2;
    for (int c = 0; c < channels; ++c) {
        double* plane = out.channel(c).data();
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const double* row = cols.row((static_cast<Eigen::Index>(c) * k + ky) * k + kx).data();
                const int dx = kx - pad;
                const int x_lo = std::max(0, -dx);
                const int x_hi = std::min(w, w - dx);
                for (int y = 0; y < h; ++y) {
                    const int ys = y + ky - pad;
                    if (ys < 0 || ys >= h) continue;
                    const double* src = row + static_cast<std::size_t>(y) * w;
                    double* dst = plane + static_cast<std::size_t>(ys) * w;
                    for (int x = x_lo; x < x_hi; ++x) dst[x + dx] += src[x];
                }
            }
        }
    }
}

inline RowMatrix& scratch_cols()
{
    thread_local RowMatrix cols;
    return cols;
}

} // namespace detail

/// Stride-1 cross-correlation with zero same-padding, plus bias.
inline RealFeatureMap conv2d_same(const RealFeatureMap& input, const ConvLayerParams& layer)
{
    layer.validate();
    detail::require_shape(input.channels() == layer.in_channels, "conv2d_same: input channel mismatch");
    const Eigen::Index pixels = static_cast<Eigen::Index>(input.plane_size());
    const Eigen::Index patch = static_cast<Eigen::Index>(layer.in_channels) * layer.kernel * layer.kernel;

    auto& cols = detail::scratch_cols();
    detail::im2col(input, layer.kernel, cols);

    RealFeatureMap out(layer.out_channels, input.height(), input.width());
    Eigen::Map<const detail::RowMatrix> w(layer.weights.data(), layer.out_channels, patch);
    Eigen::Map<detail::RowMatrix> o(out.data(), layer.out_channels, pixels);
    o.noalias() = w * cols;
    o.colwise() += Eigen::Map<const Eigen::VectorXd>(layer.bias.data(), layer.out_channels);
    return out;
}

/// Accumulates dL/dW and dL/db into grad_layer; returns dL/dinput when requested.
inline void conv2d_same_backward(const RealFeatureMap& input, const ConvLayerParams& layer,
                                 const RealFeatureMap& grad_output, ConvLayerParams& grad_layer,
                                 RealFeatureMap* grad_input)
{
    detail::require_shape(grad_output.channels() == layer.out_channels && grad_output.height() == input.height() &&
                              grad_output.width() == input.width(),
                          "conv2d_same_backward: gradient shape mismatch");
    const Eigen::Index pixels = static_cast<Eigen::Index>(input.plane_size());
    const Eigen::Index patch = static_cast<Eigen::Index>(layer.in_channels) * layer.kernel * layer.kernel;

    auto& cols = detail::scratch_cols();
    detail::im2col(input, layer.kernel, cols);

    Eigen::Map<const detail::RowMatrix> g(grad_output.data(), layer.out_channels, pixels);
    Eigen::Map<detail::RowMatrix> gw(grad_layer.weights.data(), layer.out_channels, patch);
    gw.noalias() += g * cols.transpose();
    // plain loop: Eigen's vectorized reduction peels by address, so its rounding would vary per allocation
    for (int o = 0; o < layer.out_channels; ++o) {
        const double* row = grad_output.data() + static_cast<std::size_t>(o) * pixels;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < pixels; ++i) acc += row[i];
        grad_layer.bias[static_cast<std::size_t>(o)] += acc;
    }

    if (grad_input) {
        Eigen::Map<const detail::RowMatrix> w(layer.weights.data(), layer.out_channels, patch);
        cols.noalias() = w.transpose() * g;
        *grad_input = RealFeatureMap(layer.in_channels, input.height(), input.width());
        detail::col2im_add(cols, layer.kernel, *grad_input);
    }
}

// ---------------------------------------------------------------------------
// Network pieces

/// Records every ReLU / shrinkage branch decision of a forward pass, in evaluation order.
struct ActivationPattern {
    std::vector<std::uint8_t> bits;
    friend bool operator==(const ActivationPattern&, const ActivationPattern&) = default;
};

namespace detail {

struct StackTrace {
    std::vector<RealFeatureMap> inputs;  ///< input of layer l
    std::vector<RealFeatureMap> outputs; ///< conv output of layer l, before activation
};

inline RealFeatureMap run_stack(RealFeatureMap x, const std::vector<ConvLayerParams>& layers, Activation act,
                                StackTrace* trace, ActivationPattern* pattern)
{
    for (std::size_t l = 0; l < layers.size(); ++l) {
        RealFeatureMap z = conv2d_same(x, layers[l]);
        if (trace) {
            trace->inputs.push_back(std::move(x));
            trace->outputs.push_back(z);
        }
        if (l + 1 < layers.size() && act == Activation::Relu) {
            for (auto& v : z.values()) {
                if (pattern) pattern->bits.push_back(v > 0.0);
                if (!(v > 0.0)) v = 0.0;
            }
        }
        x = std::move(z);
    }
    return x;
}

/// Backpropagates through a conv stack; returns the gradient with respect to its input.
inline RealFeatureMap backprop_stack(const StackTrace& trace, const std::vector<ConvLayerParams>& layers,
                                     Activation act, RealFeatureMap grad, std::vector<ConvLayerParams>& grad_layers)
{
    for (std::size_t l = layers.size(); l-- > 0;) {
        RealFeatureMap grad_in;
        conv2d_same_backward(trace.inputs[l], layers[l], grad, grad_layers[l], &grad_in);
        if (l > 0 && act == Activation::Relu) {
            const auto& pre = trace.outputs[l - 1];
            for (std::size_t i = 0; i < grad_in.size(); ++i)
                if (!(pre[i] > 0.0)) grad_in[i] = 0.0;
        }
        grad = std::move(grad_in);
    }
    return grad;
}

inline RealFeatureMap realify(const ComplexImage& x)
{
    RealFeatureMap out(2, x.height(), x.width());
    auto re = out.channel(0);
    auto im = out.channel(1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        re[i] = x[i].real();
        im[i] = x[i].imag();
    }
    return out;
}

inline ComplexImage complexify(const RealFeatureMap& m)
{
    require_shape(m.channels() == 2, "complexify: expected a 2-channel map");
    ComplexImage out(m.height(), m.width());
    auto re = m.channel(0);
    auto im = m.channel(1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {re[i], im[i]};
    return out;
}

inline double shrink(double a, double theta) noexcept
{
    if (a > theta) return a - theta;
    if (a < -theta) return a + theta;
    return 0.0;
}

inline void require_stack(const std::vector<ConvLayerParams>& layers, int in_channels, int out_channels,
                          const char* what)
{
    require_shape(!layers.empty(), std::string(what) + ": no layers");
    require_shape(layers.front().in_channels == in_channels, std::string(what) + ": input width mismatch");
    require_shape(layers.back().out_channels == out_channels, std::string(what) + ": output width mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].validate();
        if (l > 0)
            require_shape(layers[l].in_channels == layers[l - 1].out_channels,
                          std::string(what) + ": consecutive layer widths disagree");
    }
}

} // namespace detail

/// P_s: complex image → 2 real channels → L conv layers (ReLU between, none after the last).
inline RealFeatureMap forward_operation(const ComplexImage& t, const std::vector<ConvLayerParams>& layers,
                                        Activation act = Activation::Relu)
{
    detail::require_stack(layers, 2, layers.empty() ? 0 : layers.back().out_channels, "forward_operation");
    return detail::run_stack(detail::realify(t), layers, act, nullptr, nullptr);
}

/// Elementwise sign(a)·max(|a| − |γλ|, 0).
inline RealFeatureMap learned_soft_threshold(const RealFeatureMap& a, double gamma, double lambda)
{
    const double theta = std::abs(gamma * lambda);
    RealFeatureMap out = a;
    for (auto& v : out.values()) v = detail::shrink(v, theta);
    return out;
}

/// Q_s: L conv layers ending in 2 channels, recombined as real + i·imag.
inline ComplexImage backward_operation(const RealFeatureMap& coeffs, const std::vector<ConvLayerParams>& layers,
                                       Activation act = Activation::Relu)
{
    detail::require_stack(layers, coeffs.channels(), 2, "backward_operation");
    return detail::complexify(detail::run_stack(coeffs, layers, act, nullptr, nullptr));
}

namespace detail {

struct BlockTrace {
    ComplexImage residual; ///< A^H (y − A x_s)
    StackTrace p;
    RealFeatureMap coeffs; ///< a_s before shrinkage
    StackTrace q;
};

inline ComplexImage run_block(const ComplexImage& x, const MultiCoilKSpace& y, const CoilSensitivities& coils,
                              const SamplingMask& mask, const BlockParams& block, Variant variant, Activation act,
                              BlockTrace* trace, ActivationPattern* pattern)
{
    ComplexImage residual = sense_residual(x, y, coils, mask);
    ComplexImage t = x;
    t.add_scaled(block.gamma, residual);

    RealFeatureMap coeffs = run_stack(realify(t), block.forward_layers, act, trace ? &trace->p : nullptr, pattern);
    const double theta = std::abs(block.gamma * block.lambda);
    RealFeatureMap shrunk = coeffs;
    for (auto& v : shrunk.values()) {
        if (pattern) pattern->bits.push_back(std::abs(v) > theta);
        v = shrink(v, theta);
    }
    ComplexImage update = complexify(run_stack(std::move(shrunk), block.backward_layers, act,
                                               trace ? &trace->q : nullptr, pattern));
    if (trace) {
        trace->residual = std::move(residual);
        trace->coeffs = std::move(coeffs);
    }
    if (variant == Variant::ResNet) update += t;
    return update;
}

inline void require_network(const NetworkParams& params, const MultiCoilKSpace& y, const CoilSensitivities& coils,
                            const SamplingMask& mask)
{
    params.validate();
    require_shape(y.coils() == coils.coils(), "network: coil count mismatch");
    require_operands(y[0], coils, mask);
}

struct NetworkTrace {
    std::vector<BlockTrace> blocks;
    std::vector<ComplexImage> inputs; ///< x_s entering block s
};

inline std::vector<ComplexImage> run_network(const MultiCoilKSpace& y, const CoilSensitivities& coils,
                                             const SamplingMask& mask, const NetworkParams& params,
                                             NetworkTrace* trace, ActivationPattern* pattern)
{
    require_network(params, y, coils, mask);
    std::vector<ComplexImage> outputs;
    outputs.reserve(params.blocks.size());
    ComplexImage x = sense_adjoint(y, coils, mask);
    for (const auto& block : params.blocks) {
        BlockTrace* bt = nullptr;
        if (trace) {
            trace->inputs.push_back(x);
            bt = &trace->blocks.emplace_back();
        }
        x = run_block(x, y, coils, mask, block, params.variant, params.activation, bt, pattern);
        outputs.push_back(x);
    }
    return outputs;
}

} // namespace detail

/// One unrolled iteration x_s → x_{s+1}.
inline ComplexImage iteration_block(const ComplexImage& x, const MultiCoilKSpace& y, const CoilSensitivities& coils,
                                    const SamplingMask& mask, const BlockParams& block, Variant variant,
                                    Activation act = Activation::Relu)
{
    detail::require_operands(x, coils, mask);
    detail::require_stack(block.forward_layers, 2, block.forward_layers.empty() ? 0 : block.forward_layers.back().out_channels,
                          "iteration_block P");
    detail::require_stack(block.backward_layers, block.forward_layers.back().out_channels, 2, "iteration_block Q");
    return detail::run_block(x, y, coils, mask, block, variant, act, nullptr, nullptr);
}

/// Starts from the zero-filled image A^H y and returns the output of every block, last one being the reconstruction.
inline std::vector<ComplexImage> network_forward(const MultiCoilKSpace& y, const CoilSensitivities& coils,
                                                 const SamplingMask& mask, const NetworkParams& params)
{
    return detail::run_network(y, coils, mask, params, nullptr, nullptr);
}

/// Σ_s ‖x_truth − x_s‖² over the block outputs.
inline double loss(const std::vector<ComplexImage>& outputs, const ComplexImage& truth)
{
    double acc = 0.0;
    for (const auto& x : outputs) {
        detail::require_shape(x.same_shape(truth), "loss: shape mismatch");
        for (std::size_t i = 0; i < x.size(); ++i) acc += std::norm(truth[i] - x[i]);
    }
    return acc;
}

struct BackwardResult {
    double loss = 0.0;
    GradientSet gradients;
};

/// Loss and its exact gradient with respect to every network parameter.
/// Kinks: ReLU'(0) = 0 and the shrinkage derivative at |a| = θ is taken from the zero region.
inline BackwardResult network_backward(const MultiCoilKSpace& y, const CoilSensitivities& coils,
                                       const SamplingMask& mask, const NetworkParams& params,
                                       const ComplexImage& truth)
{
    detail::NetworkTrace trace;
    const auto outputs = detail::run_network(y, coils, mask, params, &trace, nullptr);
    detail::require_shape(truth.same_shape(outputs.front()), "network_backward: truth shape mismatch");

    BackwardResult result;
    result.loss = loss(outputs, truth);
    result.gradients = GradientSet::zeros_like(params);

    ComplexImage grad(truth.height(), truth.width());
    for (std::size_t s = params.blocks.size(); s-- > 0;) {
        const auto& out = outputs[s];
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += 2.0 * (out[i] - truth[i]);

        const BlockParams& block = params.blocks[s];
        BlockParams& g = result.gradients.blocks[s];
        const detail::BlockTrace& bt = trace.blocks[s];

        RealFeatureMap g_shrunk = detail::backprop_stack(bt.q, block.backward_layers, params.activation,
                                                         detail::realify(grad), g.backward_layers);

        const double product = block.gamma * block.lambda;
        const double theta = std::abs(product);
        const double sign_product = product > 0.0 ? 1.0 : (product < 0.0 ? -1.0 : 0.0);
        double g_theta = 0.0;
        RealFeatureMap g_coeffs = std::move(g_shrunk);
        for (std::size_t i = 0; i < g_coeffs.size(); ++i) {
            const double a = bt.coeffs[i];
            if (std::abs(a) > theta) {
                g_theta -= (a > 0.0 ? 1.0 : -1.0) * g_coeffs[i];
            } else {
                g_coeffs[i] = 0.0;
            }
        }
        g.gamma += g_theta * sign_product * block.lambda;
        g.lambda += g_theta * sign_product * block.gamma;

        ComplexImage g_t = detail::complexify(
            detail::backprop_stack(bt.p, block.forward_layers, params.activation, std::move(g_coeffs), g.forward_layers));
        if (params.variant == Variant::ResNet) g_t += grad;

        // t = x + γ r with r = A^H y − A^H A x
        double g_gamma = 0.0;
        for (std::size_t i = 0; i < g_t.size(); ++i)
            g_gamma += g_t[i].real() * bt.residual[i].real() + g_t[i].imag() * bt.residual[i].imag();
        g.gamma += g_gamma;

        grad = g_t;
        grad.add_scaled(-block.gamma, sense_normal(g_t, coils, mask));
    }
    return result;
}

/// Glorot-uniform weights on ±sqrt(6 / (fan_in + fan_out)) with fans counting the kernel area;
/// zero biases, γ_s = 1, λ_s = 0.001.
inline NetworkParams xavier_init(const NetworkShape& shape, Variant variant, std::uint64_t seed)
{
    NetworkParams p = NetworkParams::zeros(shape, variant);
    std::mt19937_64 rng(seed);
    for (auto& block : p.blocks) {
        for (auto* layers : {&block.forward_layers, &block.backward_layers}) {
            for (auto& layer : *layers) {
                const double area = static_cast<double>(layer.kernel) * layer.kernel;
                const double limit = std::sqrt(6.0 / ((layer.in_channels + layer.out_channels) * area));
                std::uniform_real_distribution<double> dist(-limit, limit);
                for (auto& w : layer.weights) w = dist(rng);
            }
        }
    }
    return p;
}

} // namespace pista
