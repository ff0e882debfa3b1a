#include "ecgode/leads.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "ecgode/error.hpp"

namespace ecgode {

namespace {

constexpr std::array<std::string_view, kLeadCount> kLeadNames{
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6"};

}  // namespace

std::string_view lead_name(LeadId id) { return kLeadNames[static_cast<std::size_t>(id)]; }

std::optional<LeadId> parse_lead(std::string_view name) {
    for (LeadId id : kAllLeads) {
        if (lead_name(id) == name) return id;
    }
    return std::nullopt;
}

bool is_free_lead(LeadId id) {
    return std::find(kFreeLeads.begin(), kFreeLeads.end(), id) != kFreeLeads.end();
}

const std::array<LeadRelation, 6>& limb_relations() {
    static const std::array<LeadRelation, 6> relations{{
        {LeadId::I, LeadId::II, LeadId::III, 1.0, -1.0},
        {LeadId::II, LeadId::I, LeadId::III, 1.0, 1.0},
        {LeadId::III, LeadId::II, LeadId::I, 1.0, -1.0},
        {LeadId::aVR, LeadId::I, LeadId::II, -0.5, -0.5},
        {LeadId::aVL, LeadId::I, LeadId::III, 0.5, -0.5},
        {LeadId::aVF, LeadId::II, LeadId::III, 0.5, 0.5},
    }};
    return relations;
}

const LeadRelation& relation_for(LeadId target) {
    for (const auto& rel : limb_relations()) {
        if (rel.target == target) return rel;
    }
    throw InvalidArgument("no limb relation targets lead " + std::string(lead_name(target)));
}

const std::array<LimbDerivation, 4>& limb_derivations() {
    // Minimal {I, II} basis; substituting III = II - I into the relation table.
    static const std::array<LimbDerivation, 4> derivations{{
        {LeadId::III, -1.0, 1.0},
        {LeadId::aVR, -0.5, -0.5},
        {LeadId::aVL, 1.0, -0.5},
        {LeadId::aVF, -0.5, 1.0},
    }};
    return derivations;
}

AbnormalityClass::AbnormalityClass(std::string code) : code_(std::move(code)) {
    if (code_.empty()) {
        throw InvalidArgument("abnormality class code must be non-empty");
    }
    for (unsigned char c : code_) {
        if (!(std::isupper(c) || std::isdigit(c))) {
            throw InvalidArgument("abnormality class code must be uppercase alphanumeric: " + code_);
        }
    }
}

Heartbeat::Heartbeat(const SamplingGrid& g, LeadMatrix samples, std::optional<AbnormalityClass> cls)
    : grid(g), leads(std::move(samples)), label(std::move(cls)) {
    if (static_cast<std::size_t>(leads.cols()) != grid.size()) {
        throw DimensionError("heartbeat: " + std::to_string(leads.cols()) +
                             " samples per lead but grid has " + std::to_string(grid.size()));
    }
    if (!leads.allFinite()) {
        throw InvalidArgument("heartbeat: non-finite sample");
    }
}

void derive_limb_leads(LeadMatrix& leads) {
    const auto lead_i = leads.row(row_of(LeadId::I));
    const auto lead_ii = leads.row(row_of(LeadId::II));
    for (const auto& d : limb_derivations()) {
        leads.row(row_of(d.target)) = d.from_I * lead_i + d.from_II * lead_ii;
    }
}

namespace {

const LeadModel& model_for(const LeadModels& models, LeadId id) {
    const auto it = models.find(id);
    if (it == models.end()) {
        throw ConfigError("missing parameters for lead " + std::string(lead_name(id)));
    }
    return it->second;
}

}  // namespace

Heartbeat synthesize_heartbeat(const LeadModels& models, const RhythmParams& rhythm,
                               const SamplingGrid& grid, const State& init) {
    rhythm.validate();
    LeadMatrix leads(static_cast<Eigen::Index>(kLeadCount), static_cast<Eigen::Index>(grid.size()));
    for (LeadId id : kFreeLeads) {
        const LeadModel& m = model_for(models, id);
        const Trajectory traj = integrate_euler(m.eta, rhythm, grid, init);
        leads.row(row_of(id)) = m.gain * traj.z.transpose();
    }
    derive_limb_leads(leads);
    return Heartbeat(grid, std::move(leads));
}

BeatTrain synthesize_beat_train(const LeadModels& models, const RhythmParams& rhythm, double fs,
                                std::span<const double> rates_hz) {
    if (rates_hz.empty()) {
        throw InvalidArgument("beat train needs at least one beat");
    }
    std::vector<std::size_t> lengths;
    std::size_t total = 0;
    for (double f : rates_hz) {
        RhythmParams r = rhythm;
        r.f = f;
        lengths.push_back(SamplingGrid::for_beat(fs, r).size());
        total += lengths.back();
    }

    BeatTrain train{fs, LeadMatrix(static_cast<Eigen::Index>(kLeadCount),
                                   static_cast<Eigen::Index>(total)),
                    {}};
    for (LeadId id : kFreeLeads) {
        const LeadModel& m = model_for(models, id);
        State s = beat_start_state();
        std::size_t start = 0;
        for (std::size_t k = 0; k < rates_hz.size(); ++k) {
            RhythmParams r = rhythm;
            r.f = rates_hz[k];
            // Beat 0 starts at the initial state; later beats continue one
            // Euler step past the previous beat's last sample.
            const std::size_t extra = k == 0 ? 0 : 1;
            const SamplingGrid g(fs, lengths[k] + extra);
            const Trajectory traj = integrate_euler(m.eta, r, g, s);
            const auto n = static_cast<Eigen::Index>(lengths[k]);
            train.leads.row(row_of(id)).segment(static_cast<Eigen::Index>(start), n) =
                m.gain * traj.z.tail(n).transpose();
            s = traj.state(traj.size() - 1);
            start += lengths[k];
        }
    }
    std::size_t start = 0;
    for (std::size_t len : lengths) {
        train.beat_starts.push_back(start);
        start += len;
    }
    derive_limb_leads(train.leads);
    return train;
}

ConsistencyReport check_lead_consistency(const Heartbeat& beat, double tol) {
    ConsistencyReport report{{}, true};
    const auto& relations = limb_relations();
    for (std::size_t i = 0; i < relations.size(); ++i) {
        const auto& rel = relations[i];
        const double dev = (beat.row(rel.target) - (rel.beta * beat.row(rel.src1) +
                                                    rel.gamma * beat.row(rel.src2)))
                               .cwiseAbs()
                               .maxCoeff();
        const bool ok = dev <= tol;
        report.relations[i] = {rel, dev, ok};
        report.pass = report.pass && ok;
    }
    return report;
}

}  // namespace ecgode
