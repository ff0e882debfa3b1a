#include "ecgode/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ecgode/error.hpp"

namespace ecgode {

namespace {

// Trial steps below this fraction of the configured step mean no descent is
// left in the search direction.
constexpr double kMinStepFraction = 1e-30;
constexpr double kMaxStepGrowth = 1e6;

// Largest change of one parameter in a single step.
constexpr double kMaxThetaMove = 0.05;
constexpr double kMaxRelativeMove = 0.1;

EtaVector project(EtaVector p) {
    for (Wave w : kWaves) {
        p(theta_index(w)) = wrap_angle(p(theta_index(w)));
        p(width_index(w)) = std::max(p(width_index(w)), kMinWidth);
    }
    return p;
}

// Diagonal of the Gauss-Newton matrix 2 sum_l (dF_l/dp)^2 along the orbit.
EtaVector gauss_newton_diagonal(const Eigen::VectorXd& phase, const EdmParams& eta) {
    EtaVector diag = EtaVector::Zero();
    const Eigen::Index n = phase.size() - 1;
    for (Eigen::Index l = 0; l < n; ++l) {
        for (Wave w : kWaves) {
            const auto& e = eta[w];
            const double d = wrap_angle(phase(l) - e.theta);
            const double b2 = e.b * e.b;
            const double g = std::exp(-d * d / (2.0 * b2));
            const double d_theta = e.a * g * (1.0 - d * d / b2);
            const double d_a = -d * g;
            const double d_b = -e.a * d * g * d * d / (b2 * e.b);
            diag(theta_index(w)) += 2.0 * d_theta * d_theta;
            diag(amplitude_index(w)) += 2.0 * d_a * d_a;
            diag(width_index(w)) += 2.0 * d_b * d_b;
        }
    }
    return diag;
}

EtaVector preconditioner(const Eigen::VectorXd& phase, const EdmParams& eta) {
    const EtaVector diag = gauss_newton_diagonal(phase, eta);
    const double floor = std::max(diag.maxCoeff(), 1.0) * 1e-12;
    return (diag.array() + floor).inverse().matrix();
}

// Largest multiple of `direction` that keeps every parameter within its move limit.
double step_limit(const EtaVector& p, const EtaVector& direction) {
    double limit = std::numeric_limits<double>::infinity();
    auto clamp = [&](Eigen::Index i, double cap) {
        if (direction(i) != 0.0) limit = std::min(limit, cap / std::abs(direction(i)));
    };
    for (Wave w : kWaves) {
        clamp(theta_index(w), kMaxThetaMove);
        clamp(amplitude_index(w), kMaxRelativeMove * std::max(std::abs(p(amplitude_index(w))), 0.1));
        clamp(width_index(w), kMaxRelativeMove * p(width_index(w)));
    }
    return limit;
}

void require_finite(double loss, std::size_t iteration) {
    if (!std::isfinite(loss)) throw DivergedError(iteration, "loss is not finite");
}

}  // namespace

void OptimConfig::validate() const {
    if (max_iter < 1) throw InvalidArgument("optimizer: max_iter must be >= 1");
    if (!(std::isfinite(step) && step > 0)) throw InvalidArgument("optimizer: step must be > 0");
    if (!(backtrack > 0 && backtrack < 1)) {
        throw InvalidArgument("optimizer: backtrack factor must lie in (0, 1)");
    }
    if (!(std::isfinite(tol) && tol > 0)) throw InvalidArgument("optimizer: tol must be > 0");
}

FitResult fit_params(const LeadSignal& h, const EdmParams& eta0, const RhythmParams& rhythm,
                     const Trajectory& ref, const OptimConfig& cfg) {
    cfg.validate();
    for (Wave w : kWaves) {
        if (!(eta0[w].b >= kMinWidth)) {
            throw DomainError("initial width b of wave " + std::string(wave_name(w)) +
                              " is below the 1e-3 floor");
        }
    }
    const Eigen::VectorXd phase = ref.phase();

    EtaVector p = eta0.to_vector();
    EtaVector grad;
    double loss = sim_distance_with_eta_gradient(h, eta0, rhythm, ref, grad);
    require_finite(loss, 0);

    FitResult result{eta0, loss, 0, false};
    if (loss == 0.0 || grad.isZero(0.0)) {
        result.converged = true;
        return result;
    }

    double step = cfg.step;
    while (result.iterations < cfg.max_iter) {
        const EdmParams current = EdmParams::from_vector(p);
        const EtaVector direction = -preconditioner(phase, current).cwiseProduct(grad);
        step = std::min(step, step_limit(p, direction));

        bool accepted = false;
        EtaVector trial;
        EtaVector trial_grad;
        double trial_loss = loss;
        while (step >= cfg.step * kMinStepFraction) {
            trial = project(p + step * direction);
            trial_loss = sim_distance_with_eta_gradient(h, EdmParams::from_vector(trial), rhythm,
                                                        ref, trial_grad);
            if (std::isfinite(trial_loss) && trial_loss < loss) {
                accepted = true;
                break;
            }
            step *= cfg.backtrack;
        }
        if (!accepted) {
            // No decrease along the scaled gradient: relative decrease is zero.
            result.converged = true;
            break;
        }

        const double rel_decrease = (loss - trial_loss) / loss;
        p = trial;
        loss = trial_loss;
        grad = trial_grad;
        ++result.iterations;
        result.eta = EdmParams::from_vector(p);
        result.final_distance = loss;
        if (rel_decrease < cfg.tol || loss == 0.0) {
            result.converged = true;
            break;
        }
        step = std::min(step / cfg.backtrack, cfg.step * kMaxStepGrowth);
    }
    return result;
}

ParamDistribution estimate_distribution(std::span<const LeadSignal> beats,
                                        const AbnormalityClass& cls, LeadId lead,
                                        const RhythmParams& rhythm, const OptimConfig& cfg,
                                        const EdmParams& eta0, double gain) {
    if (beats.size() < 2) {
        throw InsufficientDataError("need at least 2 beats to estimate a distribution, got " +
                                    std::to_string(beats.size()));
    }
    const Trajectory ref = reference_orbit(rhythm, beats.front().grid);

    // Welford accumulation.
    EtaVector mean = EtaVector::Zero();
    EtaVector m2 = EtaVector::Zero();
    std::size_t count = 0;
    for (const auto& beat : beats) {
        const FitResult fit = fit_params(beat, eta0, rhythm, ref, cfg);
        if (!fit.converged) continue;
        ++count;
        const EtaVector v = fit.eta.to_vector();
        const EtaVector delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta.cwiseProduct(v - mean);
    }
    if (count < 2) {
        throw InsufficientDataError("only " + std::to_string(count) +
                                    " fits converged; need at least 2");
    }

    ParamDistribution dist;
    dist.cls = cls;
    dist.lead = lead;
    dist.mean = mean;
    dist.std = (m2 / static_cast<double>(count)).cwiseMax(0.0).cwiseSqrt();
    dist.gain_mean = gain;
    dist.gain_std = 0.0;
    dist.rhythm = rhythm;
    dist.validate();
    return dist;
}

namespace {

// Folds the gradient of the dependent rows back onto rows I and II and zeros
// the dependent rows, leaving a gradient over the free leads only.
void fold_derived_gradient(LeadMatrix& grad) {
    for (const auto& d : limb_derivations()) {
        const Eigen::RowVectorXd g = grad.row(row_of(d.target));
        grad.row(row_of(LeadId::I)) += d.from_I * g;
        grad.row(row_of(LeadId::II)) += d.from_II * g;
        grad.row(row_of(d.target)).setZero();
    }
}

}  // namespace

RefineResult refine_waveform_traced(const Heartbeat& beat0, const ParamSet& dists,
                                    LossWeights weights, const OptimConfig& cfg,
                                    std::uint64_t seed, std::size_t n_samples) {
    cfg.validate();
    if (!beat0.label) throw ConfigError("heartbeat has no class label");
    const CombinedLoss loss_fn(beat0.grid, dists, *beat0.label, weights, n_samples, seed);

    LeadMatrix x = beat0.leads;
    derive_limb_leads(x);
    LeadMatrix grad;
    double loss = loss_fn.gradient(x, grad).total;
    require_finite(loss, 0);
    fold_derived_gradient(grad);

    RefineResult result{Heartbeat(beat0.grid, x, beat0.label), {loss}, 0, false};
    if (loss == 0.0 || grad.isZero(0.0)) {
        result.converged = true;
        return result;
    }

    double step = cfg.step;
    LeadMatrix trial;
    LeadMatrix trial_grad;
    while (result.iterations < cfg.max_iter) {
        bool accepted = false;
        double trial_loss = loss;
        while (step >= cfg.step * kMinStepFraction) {
            trial = x - step * grad;
            derive_limb_leads(trial);
            trial_loss = loss_fn.evaluate(trial).total;
            if (std::isfinite(trial_loss) && trial_loss < loss) {
                accepted = true;
                break;
            }
            step *= cfg.backtrack;
        }
        if (!accepted) {
            result.converged = true;
            break;
        }

        const double rel_decrease = (loss - trial_loss) / loss;
        x = trial;
        loss = loss_fn.gradient(x, trial_grad).total;
        fold_derived_gradient(trial_grad);
        grad = trial_grad;
        ++result.iterations;
        result.loss_trace.push_back(loss);
        if (rel_decrease < cfg.tol || loss == 0.0) {
            result.converged = true;
            break;
        }
        step = std::min(step / cfg.backtrack, cfg.step * kMaxStepGrowth);
    }
    result.beat = Heartbeat(beat0.grid, x, beat0.label);
    return result;
}

Heartbeat refine_waveform(const Heartbeat& beat0, const ParamSet& dists, LossWeights weights,
                          const OptimConfig& cfg, std::uint64_t seed, std::size_t n_samples) {
    return refine_waveform_traced(beat0, dists, weights, cfg, seed, n_samples).beat;
}

}  // namespace ecgode
