#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ecgode/edm.hpp"
#include "ecgode/integrator.hpp"

namespace ecgode {

enum class LeadId : std::size_t { I = 0, II, III, aVR, aVL, aVF, V1, V2, V3, V4, V5, V6 };

inline constexpr std::size_t kLeadCount = 12;

inline constexpr std::array<LeadId, kLeadCount> kAllLeads{
    LeadId::I,  LeadId::II, LeadId::III, LeadId::aVR, LeadId::aVL, LeadId::aVF,
    LeadId::V1, LeadId::V2, LeadId::V3,  LeadId::V4,  LeadId::V5,  LeadId::V6};

// Leads that are integrated; the other four limb leads are derived from I and II.
inline constexpr std::array<LeadId, 8> kFreeLeads{LeadId::I,  LeadId::II, LeadId::V1, LeadId::V2,
                                                  LeadId::V3, LeadId::V4, LeadId::V5, LeadId::V6};

inline constexpr std::array<LeadId, 4> kDerivedLeads{LeadId::III, LeadId::aVR, LeadId::aVL,
                                                     LeadId::aVF};

constexpr Eigen::Index row_of(LeadId id) { return static_cast<Eigen::Index>(id); }

std::string_view lead_name(LeadId id);
std::optional<LeadId> parse_lead(std::string_view name);
bool is_free_lead(LeadId id);

/// target = beta * src1 + gamma * src2
struct LeadRelation {
    LeadId target;
    LeadId src1;
    LeadId src2;
    double beta;
    double gamma;
};

/// The six Einthoven/Goldberger limb-lead identities, in the order
/// I, II, III, aVR, aVL, aVF of their targets.
const std::array<LeadRelation, 6>& limb_relations();

/// Relation whose target is `target`; throws InvalidArgument for precordials.
const LeadRelation& relation_for(LeadId target);

/// Dependent lead expressed in the {I, II} basis: target = from_I * I + from_II * II.
struct LimbDerivation {
    LeadId target;
    double from_I;
    double from_II;
};

const std::array<LimbDerivation, 4>& limb_derivations();

/// Diagnostic class code such as NORMAL, IAVB or RBBB (uppercase alphanumeric).
class AbnormalityClass {
public:
    explicit AbnormalityClass(std::string code);

    static AbnormalityClass normal() { return AbnormalityClass("NORMAL"); }

    const std::string& code() const { return code_; }

    auto operator<=>(const AbnormalityClass&) const = default;

private:
    std::string code_;
};

// 12 x L samples in millivolts, rows ordered as kAllLeads.
using LeadMatrix = Eigen::Matrix<double, static_cast<int>(kLeadCount), Eigen::Dynamic>;

struct Heartbeat {
    SamplingGrid grid;
    LeadMatrix leads;
    std::optional<AbnormalityClass> label;

    Heartbeat(const SamplingGrid& g, LeadMatrix samples,
              std::optional<AbnormalityClass> cls = std::nullopt);

    auto row(LeadId id) { return leads.row(row_of(id)); }
    auto row(LeadId id) const { return leads.row(row_of(id)); }
};

/// Morphology of one lead: model parameters plus the mV-per-model-unit gain.
struct LeadModel {
    EdmParams eta = EdmParams::defaults();
    double gain = 1.0;
};

using LeadModels = std::map<LeadId, LeadModel>;

/// Overwrites the III, aVR, aVL and aVF rows from rows I and II.
void derive_limb_leads(LeadMatrix& leads);

/// Integrates the eight free leads and derives the remaining four.
/// Throws ConfigError naming the first free lead missing from `models`.
Heartbeat synthesize_heartbeat(const LeadModels& models, const RhythmParams& rhythm,
                               const SamplingGrid& grid,
                               const State& init = beat_start_state());

/// Consecutive beats integrated as one continuous trajectory, each beat at its
/// own rate. `beat_starts[k]` is the first sample of beat k.
struct BeatTrain {
    double fs;
    LeadMatrix leads;
    std::vector<std::size_t> beat_starts;
};

BeatTrain synthesize_beat_train(const LeadModels& models, const RhythmParams& rhythm, double fs,
                                std::span<const double> rates_hz);

struct RelationDeviation {
    LeadRelation relation;
    double max_abs_deviation;
    bool pass;
};

struct ConsistencyReport {
    std::array<RelationDeviation, 6> relations;
    bool pass;
};

ConsistencyReport check_lead_consistency(const Heartbeat& beat, double tol);

}  // namespace ecgode
