#include "ecgode/fidelity.hpp"

#include <cmath>
#include <string>

#include "ecgode/error.hpp"

namespace ecgode {

LeadSignal::LeadSignal(const SamplingGrid& g, Eigen::VectorXd h, LeadId id)
    : grid(g), samples(std::move(h)), lead(id) {
    if (static_cast<std::size_t>(samples.size()) != grid.size()) {
        throw DimensionError("lead signal has " + std::to_string(samples.size()) +
                             " samples but grid has " + std::to_string(grid.size()));
    }
    if (!samples.allFinite()) throw InvalidArgument("lead signal: non-finite sample");
}

void LossWeights::validate() const {
    if (!(delta >= 0.0 && delta <= 1.0)) {
        throw InvalidArgument("loss weight delta must lie in [0, 1]");
    }
}

Trajectory reference_orbit(const RhythmParams& rhythm, const SamplingGrid& grid, const State& init) {
    EdmParams flat = EdmParams::defaults();
    for (auto& e : flat.waves) e.a = 0.0;
    return integrate_euler(flat, rhythm, grid, init);
}

Eigen::VectorXd ResidualTerm::residuals(const Eigen::Ref<const Eigen::VectorXd>& h) const {
    const Eigen::Index n = drive.size();
    if (h.size() != n + 1) {
        throw DimensionError("waveform has " + std::to_string(h.size()) + " samples, expected " +
                             std::to_string(n + 1));
    }
    return (h.tail(n) - h.head(n)) / dt + kappa * h.head(n) - drive;
}

double ResidualTerm::distance(const Eigen::Ref<const Eigen::VectorXd>& h) const {
    return residuals(h).squaredNorm();
}

Eigen::VectorXd ResidualTerm::gradient(const Eigen::Ref<const Eigen::VectorXd>& h) const {
    const Eigen::VectorXd r = residuals(h);
    const Eigen::Index n = r.size();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n + 1);
    g.tail(n) += (2.0 / dt) * r;
    g.head(n) += (2.0 * (kappa - 1.0 / dt)) * r;
    return g;
}

namespace {

void check_grid(const LeadSignal& h, const Trajectory& ref) {
    if (!(h.grid == ref.grid)) {
        throw DimensionError("lead signal and reference orbit are on different grids");
    }
}

Eigen::VectorXd orbit_baseline(const Trajectory& ref, const RhythmParams& rhythm) {
    Eigen::VectorXd z0(static_cast<Eigen::Index>(ref.size()));
    for (std::size_t l = 0; l < ref.size(); ++l) {
        z0(static_cast<Eigen::Index>(l)) = baseline(ref.time(l), rhythm);
    }
    return z0;
}

Eigen::VectorXd forcing_at(const Eigen::VectorXd& phase, const EdmParams& eta) {
    return phase.unaryExpr([&eta](double p) { return wave_forcing(p, eta); });
}

ResidualTerm make_term(Eigen::VectorXd combined_forcing, const Eigen::VectorXd& z0, double kappa,
                       double dt) {
    const Eigen::Index n = combined_forcing.size() - 1;
    ResidualTerm term;
    term.drive = combined_forcing.head(n) + kappa * z0.head(n);
    term.kappa = kappa;
    term.dt = dt;
    return term;
}

void check_widths(const EdmParams& eta) {
    for (Wave w : kWaves) {
        if (!(eta[w].b >= kMinWidth)) {
            throw DomainError("width b of wave " + std::string(wave_name(w)) +
                              " is below the 1e-3 floor");
        }
    }
}

}  // namespace

Eigen::VectorXd orbit_forcing(const Trajectory& ref, const EdmParams& eta) {
    return forcing_at(ref.phase(), eta);
}

ResidualTerm single_lead_term(const Trajectory& ref, const EdmParams& eta,
                              const RhythmParams& rhythm) {
    return make_term(orbit_forcing(ref, eta), orbit_baseline(ref, rhythm), 1.0, ref.grid.dt());
}

ResidualTerm inter_lead_term(const Trajectory& ref, const EdmParams& eta1, const EdmParams& eta2,
                             const LeadRelation& rel, const RhythmParams& rhythm) {
    const Eigen::VectorXd phase = ref.phase();
    Eigen::VectorXd f = rel.beta * forcing_at(phase, eta1) + rel.gamma * forcing_at(phase, eta2);
    return make_term(std::move(f), orbit_baseline(ref, rhythm), rel.beta + rel.gamma,
                     ref.grid.dt());
}

double sim_distance(const LeadSignal& h, const EdmParams& eta, const RhythmParams& rhythm,
                    const Trajectory& ref) {
    check_grid(h, ref);
    return single_lead_term(ref, eta, rhythm).distance(h.samples);
}

double sim_distance_interlead(const LeadSignal& h, const EdmParams& eta1, const EdmParams& eta2,
                              const LeadRelation& rel, const RhythmParams& rhythm,
                              const Trajectory& ref) {
    check_grid(h, ref);
    if (rel.target != h.lead) {
        throw InvalidArgument("relation targets lead " + std::string(lead_name(rel.target)) +
                              " but signal is lead " + std::string(lead_name(h.lead)));
    }
    return inter_lead_term(ref, eta1, eta2, rel, rhythm).distance(h.samples);
}

Eigen::VectorXd grad_sim_distance_wrt_h(const LeadSignal& h, const EdmParams& eta,
                                        const RhythmParams& rhythm, const Trajectory& ref) {
    check_grid(h, ref);
    return single_lead_term(ref, eta, rhythm).gradient(h.samples);
}

Eigen::VectorXd grad_sim_distance_interlead_wrt_h(const LeadSignal& h, const EdmParams& eta1,
                                                  const EdmParams& eta2, const LeadRelation& rel,
                                                  const RhythmParams& rhythm,
                                                  const Trajectory& ref) {
    check_grid(h, ref);
    if (rel.target != h.lead) {
        throw InvalidArgument("relation target does not match the signal's lead");
    }
    return inter_lead_term(ref, eta1, eta2, rel, rhythm).gradient(h.samples);
}

double sim_distance_with_eta_gradient(const LeadSignal& h, const EdmParams& eta,
                                      const RhythmParams& rhythm, const Trajectory& ref,
                                      EtaVector& grad) {
    check_grid(h, ref);
    check_widths(eta);
    const Eigen::VectorXd phase = ref.phase();
    const ResidualTerm term =
        make_term(forcing_at(phase, eta), orbit_baseline(ref, rhythm), 1.0, ref.grid.dt());
    const Eigen::VectorXd r = term.residuals(h.samples);

    // dD/dp = -2 sum_l r_l dF_l/dp
    grad.setZero();
    for (Eigen::Index l = 0; l < r.size(); ++l) {
        const double scale = -2.0 * r(l);
        for (Wave w : kWaves) {
            const auto& e = eta[w];
            const double d = wrap_angle(phase(l) - e.theta);
            const double b2 = e.b * e.b;
            const double g = std::exp(-d * d / (2.0 * b2));
            grad(theta_index(w)) += scale * e.a * g * (1.0 - d * d / b2);
            grad(amplitude_index(w)) += scale * (-d * g);
            grad(width_index(w)) += scale * (-e.a * d * g * d * d / (b2 * e.b));
        }
    }
    return r.squaredNorm();
}

EtaVector grad_sim_distance_wrt_eta(const LeadSignal& h, const EdmParams& eta,
                                    const RhythmParams& rhythm, const Trajectory& ref) {
    EtaVector grad;
    sim_distance_with_eta_gradient(h, eta, rhythm, ref, grad);
    return grad;
}

CombinedLoss::CombinedLoss(const SamplingGrid& grid, const ParamSet& dists,
                           const AbnormalityClass& cls, LossWeights weights, std::size_t n_samples,
                           std::uint64_t seed, const State& init)
    : grid_(grid), weights_(weights) {
    weights_.validate();
    if (n_samples < 1) throw InvalidArgument("combined loss needs at least one parameter draw");
    for (LeadId id : kAllLeads) dists.at(cls, id);
    const RhythmParams rhythm = dists.class_rhythm(cls);

    const Trajectory ref = reference_orbit(rhythm, grid, init);
    const Eigen::VectorXd phase = ref.phase();
    const Eigen::VectorXd z0 = orbit_baseline(ref, rhythm);
    const double dt = grid.dt();

    for (std::size_t s = 0; s < n_samples; ++s) {
        std::array<EtaDraw, kLeadCount> draw;
        std::array<Eigen::VectorXd, kLeadCount> forcing;
        for (LeadId id : kAllLeads) {
            const auto i = static_cast<std::size_t>(id);
            draw[i] = sample_eta(dists.at(cls, id), derive_seed(seed, {s, i}));
            if (draw[i].gain == 0.0) throw DomainError("sampled lead gain is zero");
            forcing[i] = forcing_at(phase, draw[i].eta);
        }
        for (LeadId id : kFreeLeads) {
            const auto i = static_cast<std::size_t>(id);
            single_.push_back({id, 1.0 / draw[i].gain, make_term(forcing[i], z0, 1.0, dt)});
        }
        for (const auto& rel : limb_relations()) {
            const auto t = static_cast<std::size_t>(rel.target);
            Eigen::VectorXd f = rel.beta * forcing[static_cast<std::size_t>(rel.src1)] +
                                rel.gamma * forcing[static_cast<std::size_t>(rel.src2)];
            inter_.push_back(
                {rel.target, 1.0 / draw[t].gain, make_term(std::move(f), z0, rel.beta + rel.gamma, dt)});
        }
    }
}

CombinedLoss::Value CombinedLoss::evaluate(const LeadMatrix& leads) const {
    if (static_cast<std::size_t>(leads.cols()) != grid_.size()) {
        throw DimensionError("beat length does not match the loss grid");
    }
    Value v;
    for (const auto& term : single_) {
        v.single += term.residual.distance(term.inv_gain * leads.row(row_of(term.lead)).transpose());
    }
    for (const auto& term : inter_) {
        v.inter += term.residual.distance(term.inv_gain * leads.row(row_of(term.lead)).transpose());
    }
    v.single /= static_cast<double>(single_.size());
    v.inter /= static_cast<double>(inter_.size());
    v.total = weights_.delta * v.single + (1.0 - weights_.delta) * v.inter;
    return v;
}

CombinedLoss::Value CombinedLoss::gradient(const LeadMatrix& leads, LeadMatrix& grad) const {
    if (static_cast<std::size_t>(leads.cols()) != grid_.size()) {
        throw DimensionError("beat length does not match the loss grid");
    }
    grad.setZero(leads.rows(), leads.cols());
    Value v;
    auto accumulate = [&](const std::vector<Term>& terms, double weight, double& sum) {
        const double w = weight / static_cast<double>(terms.size());
        for (const auto& term : terms) {
            const Eigen::VectorXd h = term.inv_gain * leads.row(row_of(term.lead)).transpose();
            const Eigen::VectorXd r = term.residual.residuals(h);
            sum += r.squaredNorm();
            const Eigen::Index n = r.size();
            const double c = w * term.inv_gain;
            auto row = grad.row(row_of(term.lead));
            row.tail(n) += (c * 2.0 / term.residual.dt) * r.transpose();
            row.head(n) += (c * 2.0 * (term.residual.kappa - 1.0 / term.residual.dt)) * r.transpose();
        }
        sum /= static_cast<double>(terms.size());
    };
    accumulate(single_, weights_.delta, v.single);
    accumulate(inter_, 1.0 - weights_.delta, v.inter);
    v.total = weights_.delta * v.single + (1.0 - weights_.delta) * v.inter;
    return v;
}

CombinedLoss::Value euler_loss_components(const Heartbeat& beat, const ParamSet& dists,
                                          LossWeights weights, std::size_t n_samples,
                                          std::uint64_t seed) {
    if (!beat.label) throw ConfigError("heartbeat has no class label");
    const CombinedLoss loss(beat.grid, dists, *beat.label, weights, n_samples, seed);
    return loss.evaluate(beat.leads);
}

double euler_loss_combined(const Heartbeat& beat, const ParamSet& dists, LossWeights weights,
                           std::size_t n_samples, std::uint64_t seed) {
    return euler_loss_components(beat, dists, weights, n_samples, seed).total;
}

}  // namespace ecgode
