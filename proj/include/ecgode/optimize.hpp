#pragma once

// Descent on the simulator distance: fitting model parameters to observed
// beats, estimating per-class distributions from fits, and refining whole
// 12-lead waveforms against the combined loss.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ecgode/edm.hpp"
#include "ecgode/fidelity.hpp"
#include "ecgode/leads.hpp"
#include "ecgode/params.hpp"

namespace ecgode {

struct OptimConfig {
    std::size_t max_iter = 5000;
    double step = 1.0;       // first trial step
    double backtrack = 0.5;  // step shrink factor on a rejected trial
    double tol = 1e-10;      // stop once the relative loss decrease drops below this

    void validate() const;
};

struct FitResult {
    EdmParams eta;
    double final_distance = 0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Gradient descent with backtracking on D(h, eta) over the 15 wave
/// parameters. Steps are scaled per parameter by the inverse diagonal of the
/// Gauss-Newton matrix, b is projected onto b >= 1e-3 and theta re-wrapped
/// after every step. Returns the best iterate when max_iter runs out; throws
/// DivergedError if the loss becomes non-finite.
FitResult fit_params(const LeadSignal& h, const EdmParams& eta0, const RhythmParams& rhythm,
                     const Trajectory& ref, const OptimConfig& cfg = {});

/// Fits every beat from `eta0` and summarises the converged fits by their
/// per-parameter mean and population standard deviation. Beats must share the
/// sampling grid. Throws InsufficientDataError with fewer than two converged fits.
ParamDistribution estimate_distribution(std::span<const LeadSignal> beats,
                                        const AbnormalityClass& cls, LeadId lead,
                                        const RhythmParams& rhythm, const OptimConfig& cfg = {},
                                        const EdmParams& eta0 = EdmParams::defaults(),
                                        double gain = 1.0);

struct RefineResult {
    Heartbeat beat;
    std::vector<double> loss_trace;  // combined loss after every accepted step, first entry initial
    std::size_t iterations = 0;
    bool converged = false;
};

/// Descends the combined loss over the samples of the eight free leads,
/// re-deriving III, aVR, aVL and aVF after every step. Uses cfg.max_iter steps
/// at most. Parameter draws are fixed by `seed` for the whole run.
RefineResult refine_waveform_traced(const Heartbeat& beat0, const ParamSet& dists,
                                    LossWeights weights, const OptimConfig& cfg,
                                    std::uint64_t seed, std::size_t n_samples = 8);

Heartbeat refine_waveform(const Heartbeat& beat0, const ParamSet& dists, LossWeights weights,
                          const OptimConfig& cfg, std::uint64_t seed, std::size_t n_samples = 8);

}  // namespace ecgode
