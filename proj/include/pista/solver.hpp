#pragma once

// Classical projected iterative soft-thresholding for the sparse-SENSE model
//   min_x λ‖Ψx‖₁ + ½ Σ_j ‖U F C_j x − y_j‖²
// with Ψ the undecimated Haar frame and Φ = Ψ^H.

#include <pista/frame.hpp>
#include <pista/sense.hpp>

#include <optional>
#include <vector>

namespace pista {

struct SolverConfig {
    double gamma = 1.0;
    double lambda = 1e-3;
    int max_iters = 200;
    double tol = 1e-6;
    /// FISTA extrapolation between iterations; off reproduces the plain iteration.
    bool momentum = false;

    void validate() const
    {
        detail::require_config(gamma > 0.0 && gamma < 2.0, "SolverConfig: gamma must lie in (0, 2)");
        detail::require_config(lambda >= 0.0, "SolverConfig: lambda must be nonnegative");
        detail::require_config(max_iters >= 1, "SolverConfig: max_iters must be positive");
        detail::require_config(tol >= 0.0, "SolverConfig: tol must be nonnegative");
    }
};

struct SolverDiagnostics {
    std::vector<double> objective;
    std::vector<double> rlne; ///< empty unless a reference image was supplied
    int iterations_run = 0;
};

struct PistaResult {
    ComplexImage image;
    SolverDiagnostics diagnostics;
};

/// λ‖analyze(x)‖₁ + ½ Σ_j ‖sense_forward(x)_j − y_j‖², ‖·‖₁ summing complex magnitudes.
inline double objective(const ComplexImage& x, const MultiCoilKSpace& y, const CoilSensitivities& coils,
                        const SamplingMask& mask, double lambda)
{
    detail::require_config(lambda >= 0.0, "objective: lambda must be nonnegative");
    detail::require_shape(y.coils() == coils.coils(), "objective: coil count mismatch");
    const MultiCoilKSpace predicted = sense_forward(x, coils, mask);
    double data_term = 0.0;
    for (int j = 0; j < y.coils(); ++j) {
        detail::require_shape(y[j].same_shape(x), "objective: k-space/image shape mismatch");
        for (std::size_t i = 0; i < x.size(); ++i) data_term += std::norm(predicted[j][i] - y[j][i]);
    }
    const double sparsity = lambda > 0.0 ? lambda * analyze(x).l1_norm() : 0.0;
    return sparsity + 0.5 * data_term;
}

inline PistaResult reconstruct_pista(const MultiCoilKSpace& y, const CoilSensitivities& coils, const SamplingMask& mask,
                                     const SolverConfig& cfg, const ComplexImage* reference = nullptr)
{
    cfg.validate();
    detail::require_shape(y.coils() == coils.coils(), "reconstruct_pista: coil count mismatch");
    detail::require_operands(y[0], coils, mask);
    if (reference) detail::require_shape(reference->same_shape(y[0]), "reconstruct_pista: reference shape mismatch");
    const double ref_norm = reference ? norm(*reference) : 0.0;

    const double threshold = cfg.lambda * cfg.gamma;
    ComplexImage x(coils.height(), coils.width());
    ComplexImage z = x; // extrapolated point; equals x without momentum
    double momentum_t = 1.0;

    PistaResult result;
    for (int s = 0; s < cfg.max_iters; ++s) {
        const ComplexImage t = data_consistency(z, y, coils, mask, cfg.gamma);
        ComplexImage next = synthesize(soft_threshold(analyze(t), threshold));

        const double step = norm(next - x);
        const double prev = norm(x);

        if (cfg.momentum) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_t * momentum_t));
            z = next;
            z.add_scaled((momentum_t - 1.0) / t_next, next - x);
            momentum_t = t_next;
        } else {
            z = next;
        }
        x = std::move(next);

        auto& diag = result.diagnostics;
        diag.objective.push_back(objective(x, y, coils, mask, cfg.lambda));
        if (reference) diag.rlne.push_back(norm(*reference - x) / ref_norm);
        diag.iterations_run = s + 1;

        if (step == 0.0 || (prev > 0.0 && step / prev < cfg.tol)) break;
    }
    result.image = std::move(x);
    return result;
}

} // namespace pista
