#pragma once

// Simulator distance: how far a waveform h is from satisfying the discrete
// z-equation of the dynamical model along a reference (x, y) orbit,
//
//   D(h, eta) = sum_{l=0}^{L-2} ((h_{l+1} - h_l) / dt - f_z(x_l, y_l, h_l, t_l; eta))^2
//
// (the printed 1-based sum over l = 1..L-1 shifted to 0-based indices), its
// inter-lead variant where f_z is replaced by beta f_z(.; eta1) + gamma f_z(.; eta2),
// and the delta-weighted Monte-Carlo combination over a 12-lead beat.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "ecgode/edm.hpp"
#include "ecgode/integrator.hpp"
#include "ecgode/leads.hpp"
#include "ecgode/params.hpp"

namespace ecgode {

struct LeadSignal {
    SamplingGrid grid;
    Eigen::VectorXd samples;  // model units (mV divided by the lead gain)
    LeadId lead = LeadId::II;

    LeadSignal(const SamplingGrid& g, Eigen::VectorXd h, LeadId id = LeadId::II);
};

struct LossWeights {
    double delta = 0.6;  // weight of the single-lead term, in [0, 1]

    void validate() const;
};

/// (x, y) orbit of the model on `grid`, integrated with Euler from `init`.
/// x and y do not depend on the wave parameters; z is left at the baseline-only
/// solution and is not used by the distances.
Trajectory reference_orbit(const RhythmParams& rhythm, const SamplingGrid& grid,
                           const State& init = beat_start_state());

/// Every distance reduces to residuals of the form
///   r_l = (h_{l+1} - h_l) / dt + kappa h_l - drive_l,   l = 0..L-2,
/// where drive and kappa are independent of h. The single-lead case has
/// kappa = 1 and drive = F(eta) + z0; the inter-lead case has
/// kappa = beta + gamma and drive = beta F(eta1) + gamma F(eta2) + kappa z0.
struct ResidualTerm {
    Eigen::VectorXd drive;  // length L-1
    double kappa = 1.0;
    double dt = 1.0;

    Eigen::VectorXd residuals(const Eigen::Ref<const Eigen::VectorXd>& h) const;
    double distance(const Eigen::Ref<const Eigen::VectorXd>& h) const;
    /// Gradient of distance() with respect to every sample of h.
    Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& h) const;
};

/// Gaussian-event forcing F(eta) at every sample of the reference orbit.
Eigen::VectorXd orbit_forcing(const Trajectory& ref, const EdmParams& eta);

ResidualTerm single_lead_term(const Trajectory& ref, const EdmParams& eta,
                              const RhythmParams& rhythm);
ResidualTerm inter_lead_term(const Trajectory& ref, const EdmParams& eta1, const EdmParams& eta2,
                             const LeadRelation& rel, const RhythmParams& rhythm);

double sim_distance(const LeadSignal& h, const EdmParams& eta, const RhythmParams& rhythm,
                    const Trajectory& ref);

double sim_distance_interlead(const LeadSignal& h, const EdmParams& eta1, const EdmParams& eta2,
                              const LeadRelation& rel, const RhythmParams& rhythm,
                              const Trajectory& ref);

Eigen::VectorXd grad_sim_distance_wrt_h(const LeadSignal& h, const EdmParams& eta,
                                        const RhythmParams& rhythm, const Trajectory& ref);

Eigen::VectorXd grad_sim_distance_interlead_wrt_h(const LeadSignal& h, const EdmParams& eta1,
                                                  const EdmParams& eta2, const LeadRelation& rel,
                                                  const RhythmParams& rhythm,
                                                  const Trajectory& ref);

/// Partial derivatives with respect to [theta_P..T, a_P..T, b_P..T]. The wrap
/// of dtheta is treated as locally constant. Throws DomainError if any
/// b < 1e-3.
EtaVector grad_sim_distance_wrt_eta(const LeadSignal& h, const EdmParams& eta,
                                    const RhythmParams& rhythm, const Trajectory& ref);

/// Distance and eta-gradient in one pass.
double sim_distance_with_eta_gradient(const LeadSignal& h, const EdmParams& eta,
                                      const RhythmParams& rhythm, const Trajectory& ref,
                                      EtaVector& grad);

/// Combined Euler loss over a 12-lead beat, with the parameter draws fixed at
/// construction so that repeated evaluations see the same objective.
///
///   single = mean over draws and the 8 free leads of D(row / gain, eta)
///   inter  = mean over draws and the 6 limb relations of
///            D(target row / gain, eta_src1, eta_src2)
///   total  = delta * single + (1 - delta) * inter
class CombinedLoss {
public:
    struct Value {
        double total = 0;
        double single = 0;
        double inter = 0;
    };

    CombinedLoss(const SamplingGrid& grid, const ParamSet& dists, const AbnormalityClass& cls,
                 LossWeights weights, std::size_t n_samples, std::uint64_t seed,
                 const State& init = beat_start_state());

    Value evaluate(const LeadMatrix& leads) const;

    /// Gradient of the total with respect to all 12 rows (mV). Returns the value.
    Value gradient(const LeadMatrix& leads, LeadMatrix& grad) const;

    const SamplingGrid& grid() const { return grid_; }

private:
    struct Term {
        LeadId lead;
        double inv_gain;
        ResidualTerm residual;
    };

    SamplingGrid grid_;
    LossWeights weights_;
    std::vector<Term> single_;
    std::vector<Term> inter_;
};

/// Throws ConfigError if the beat has no label or the label's class lacks a
/// lead distribution.
double euler_loss_combined(const Heartbeat& beat, const ParamSet& dists, LossWeights weights,
                           std::size_t n_samples = 8, std::uint64_t seed = 0);

CombinedLoss::Value euler_loss_components(const Heartbeat& beat, const ParamSet& dists,
                                          LossWeights weights, std::size_t n_samples = 8,
                                          std::uint64_t seed = 0);

}  // namespace ecgode
