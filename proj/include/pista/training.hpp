#pragma once

// Adam training of the unrolled network and a finite-difference gradient checker.

#include <pista/metrics.hpp>
#include <pista/network.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace pista {

struct TrainConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 30;
    int batch_size = 1;
    std::uint64_t seed = 0;
    Variant variant = Variant::ResNet;
    NetworkShape shape = NetworkShape::desk();

    void validate() const
    {
        detail::require_config(learning_rate > 0.0, "TrainConfig: learning_rate must be positive");
        detail::require_config(beta1 >= 0.0 && beta1 < 1.0, "TrainConfig: beta1 must lie in [0, 1)");
        detail::require_config(beta2 >= 0.0 && beta2 < 1.0, "TrainConfig: beta2 must lie in [0, 1)");
        detail::require_config(epsilon > 0.0, "TrainConfig: epsilon must be positive");
        detail::require_config(epochs >= 1, "TrainConfig: epochs must be positive");
        detail::require_config(batch_size >= 1, "TrainConfig: batch_size must be positive");
        shape.validate();
    }
};

struct AdamState {
    GradientSet m;
    GradientSet v;
    std::int64_t step = 0;

    static AdamState zeros_like(const NetworkParams& params)
    {
        return {GradientSet::zeros_like(params), GradientSet::zeros_like(params), 0};
    }

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

namespace detail {

inline void require_congruent(std::vector<TensorRef>& a, std::vector<TensorRef>& b, const char* what)
{
    require_shape(a.size() == b.size(), std::string(what) + ": tensor count mismatch");
    for (std::size_t i = 0; i < a.size(); ++i)
        require_shape(a[i].values.size() == b[i].values.size(), std::string(what) + ": tensor size mismatch");
}

} // namespace detail

/// Bias-corrected Adam update in place. Returns the largest absolute parameter change.
inline double adam_step(NetworkParams& params, const GradientSet& grads, AdamState& state, const TrainConfig& cfg)
{
    auto p = parameter_tensors(params);
    auto g = parameter_tensors(const_cast<GradientSet&>(grads));
    auto m = parameter_tensors(state.m);
    auto v = parameter_tensors(state.v);
    detail::require_congruent(p, g, "adam_step (gradients)");
    detail::require_congruent(p, m, "adam_step (first moments)");
    detail::require_congruent(p, v, "adam_step (second moments)");

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    double largest = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        for (std::size_t i = 0; i < p[k].values.size(); ++i) {
            const double gi = g[k].values[i];
            double& mi = m[k].values[i];
            double& vi = v[k].values[i];
            mi = cfg.beta1 * mi + (1.0 - cfg.beta1) * gi;
            vi = cfg.beta2 * vi + (1.0 - cfg.beta2) * gi * gi;
            const double m_hat = mi / correction1;
            const double v_hat = vi / correction2;
            const double delta = cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
            p[k].values[i] -= delta;
            largest = std::max(largest, std::abs(delta));
        }
    }
    return largest;
}

/// this += other, tensor by tensor.
inline void accumulate(GradientSet& into, const GradientSet& other)
{
    auto a = parameter_tensors(into);
    auto b = parameter_tensors(const_cast<GradientSet&>(other));
    detail::require_congruent(a, b, "accumulate");
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t i = 0; i < a[k].values.size(); ++i) a[k].values[i] += b[k].values[i];
}

struct TrainingHistory {
    std::vector<double> loss;           ///< mean per-sample training loss of each epoch
    std::vector<double> validation_rlne; ///< mean RLNE on the validation set after each epoch
    double max_update = 0.0;             ///< largest single-parameter Adam step taken
};

struct TrainResult {
    NetworkParams params;
    AdamState state;
    TrainingHistory history;
};

struct EpochReport {
    int epoch = 0;
    double loss = 0.0;
    double validation_rlne = -1.0; ///< negative when no validation set was supplied
};

/// Mean RLNE of the final block output over a sample set.
inline double mean_network_rlne(const NetworkParams& params, const std::vector<Sample>& samples)
{
    double acc = 0.0;
    for (const auto& s : samples) acc += rlne(s.truth, network_forward(s.kspace, s.coils, s.mask, params).back());
    return acc / static_cast<double>(samples.size());
}

/// Continues training from the given parameters and optimizer state. Batch gradients are sums
/// over samples; the sample order of every epoch is a seeded shuffle, so the inputs fully
/// determine the result. cfg.shape and cfg.variant are ignored in favour of the parameters.
inline TrainResult train_from(NetworkParams initial, AdamState state, const std::vector<Sample>& data,
                              const TrainConfig& cfg, const std::vector<Sample>* validation = nullptr,
                              const std::function<void(const EpochReport&)>& on_epoch = {})
{
    cfg.validate();
    initial.validate();
    detail::require_config(!data.empty(), "train: empty dataset");

    TrainResult result;
    result.params = std::move(initial);
    result.state = std::move(state);

    std::mt19937_64 order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            GradientSet batch = GradientSet::zeros_like(result.params);
            for (std::size_t i = start; i < stop; ++i) {
                const Sample& s = data[order[i]];
                BackwardResult r = network_backward(s.kspace, s.coils, s.mask, result.params, s.truth);
                epoch_loss += r.loss;
                accumulate(batch, r.gradients);
            }
            const double step = adam_step(result.params, batch, result.state, cfg);
            result.history.max_update = std::max(result.history.max_update, step);
        }
        EpochReport report{epoch + 1, epoch_loss / static_cast<double>(data.size()), -1.0};
        result.history.loss.push_back(report.loss);
        if (validation && !validation->empty()) {
            report.validation_rlne = mean_network_rlne(result.params, *validation);
            result.history.validation_rlne.push_back(report.validation_rlne);
        }
        if (on_epoch) on_epoch(report);
    }
    return result;
}

/// Trains from Xavier initialization with fresh Adam moments.
inline TrainResult train(const std::vector<Sample>& data, const TrainConfig& cfg,
                         const std::vector<Sample>* validation = nullptr,
                         const std::function<void(const EpochReport&)>& on_epoch = {})
{
    cfg.validate();
    NetworkParams initial = xavier_init(cfg.shape, cfg.variant, cfg.seed);
    AdamState state = AdamState::zeros_like(initial);
    return train_from(std::move(initial), std::move(state), data, cfg, validation, on_epoch);
}

struct GradCheckOptions {
    int min_entries = 200;
    std::uint64_t seed = 0;
    /// Relative error is |analytic − numeric| / max(|analytic|, |numeric|, floor).
    double denominator_floor = 1e-6;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
    int checked = 0;
    int excluded = 0; ///< entries whose perturbation crossed a ReLU or shrinkage kink even at step/1000
    std::vector<TensorKind> kinds_covered;
};

/// Central finite differences of the loss over a random subsample of parameter entries
/// spanning every tensor. Entries whose perturbation changes the activation pattern are skipped.
inline GradCheckReport grad_check(const NetworkParams& params, const Sample& sample, double step,
                                  const GradCheckOptions& options = {})
{
    detail::require_config(step > 0.0, "grad_check: step must be positive");
    const BackwardResult analytic = network_backward(sample.kspace, sample.coils, sample.mask, params, sample.truth);

    NetworkParams probe = params;
    auto probe_tensors = parameter_tensors(probe);
    auto grad_tensors = parameter_tensors(const_cast<GradientSet&>(analytic.gradients));

    const auto evaluate = [&](ActivationPattern& pattern) {
        pattern.bits.clear();
        return loss(detail::run_network(sample.kspace, sample.coils, sample.mask, probe, nullptr, &pattern),
                    sample.truth);
    };
    ActivationPattern base;
    evaluate(base);

    // Walk the tensors round-robin, taking the next entry of each shuffled pool, until
    // min_entries entries have been compared or every pool is exhausted.
    std::mt19937_64 rng(options.seed);
    std::vector<std::vector<std::size_t>> pools(probe_tensors.size());
    for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
        pools[k].resize(probe_tensors[k].values.size());
        std::iota(pools[k].begin(), pools[k].end(), std::size_t{0});
        std::shuffle(pools[k].begin(), pools[k].end(), rng);
    }

    GradCheckReport report;
    ActivationPattern plus_pattern, minus_pattern;
    for (std::size_t round = 0; report.checked < options.min_entries; ++round) {
        bool any = false;
        for (std::size_t k = 0; k < probe_tensors.size() && report.checked < options.min_entries; ++k) {
            if (round >= pools[k].size()) continue;
            any = true;
            const std::size_t i = pools[k][round];
            double& entry = probe_tensors[k].values[i];
            const double original = entry;
            // a step that flips any ReLU or shrinkage branch is retried at h/10, h/100 and h/1000 before exclusion
            double numeric = 0.0;
            bool clean = false;
            for (double h = step; !clean && h >= step / 1000.0 * 0.999; h /= 10.0) {
                entry = original + h;
                const double up = evaluate(plus_pattern);
                entry = original - h;
                const double down = evaluate(minus_pattern);
                entry = original;
                clean = plus_pattern == base && minus_pattern == base;
                numeric = (up - down) / (2.0 * h);
            }
            if (!clean) {
                ++report.excluded;
                continue;
            }
            const double exact = grad_tensors[k].values[i];
            const double abs_err = std::abs(numeric - exact);
            const double denom = std::max({std::abs(numeric), std::abs(exact), options.denominator_floor});
            report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
            report.max_relative_error = std::max(report.max_relative_error, abs_err / denom);
            ++report.checked;
            const TensorKind kind = probe_tensors[k].kind;
            if (std::find(report.kinds_covered.begin(), report.kinds_covered.end(), kind) == report.kinds_covered.end())
                report.kinds_covered.push_back(kind);
        }
        if (!any) break;
    }
    return report;
}

} // namespace pista
