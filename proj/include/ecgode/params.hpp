#pragma once

// Per-(class, lead) Gaussian distributions over the model parameters, seeded
// sampling from them, and the flat `key = value` parameter file.
//
// File layout, one key per line, '#' starts a comment:
//
//   NORMAL.II.R.theta_mean = 0
//   NORMAL.II.R.theta_std = 0.02
//   NORMAL.II.R.a_mean = 30
//   ...                          (a_std, b_mean, b_std for every wave P..T)
//   NORMAL.II.gain_mean = 21.6
//   NORMAL.II.gain_std = 0
//   NORMAL.II.rhythm.f = 1
//   NORMAL.II.rhythm.A = 0.005
//   NORMAL.II.rhythm.f2 = 0.25
//
// Every (class, lead) block must define all 35 keys. Values are written with
// 17 significant digits so that read(write(x)) == x.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecgode/edm.hpp"
#include "ecgode/leads.hpp"

namespace ecgode {

struct ParamDistribution {
    AbnormalityClass cls = AbnormalityClass::normal();
    LeadId lead = LeadId::II;
    EtaVector mean = EdmParams::defaults().to_vector();
    EtaVector std = EtaVector::Zero();
    double gain_mean = 1.0;
    double gain_std = 0.0;
    RhythmParams rhythm{};

    /// Throws InvalidArgument naming the offending field.
    void validate() const;

    bool operator==(const ParamDistribution&) const = default;
};

struct EtaDraw {
    EdmParams eta;
    double gain;
};

/// Independent seed for a position in a sampling hierarchy
/// (e.g. {beat index, lead index}) under a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Diagonal Gaussian draw; b is clamped to kMinWidth and theta re-wrapped.
EtaDraw sample_eta(const ParamDistribution& dist, std::mt19937_64& rng);
EtaDraw sample_eta(const ParamDistribution& dist, std::uint64_t seed);

/// Immutable-after-load collection keyed by (class, lead).
class ParamSet {
public:
    using Key = std::pair<AbnormalityClass, LeadId>;
    using Map = std::map<Key, ParamDistribution>;

    /// Throws ConfigError on a duplicate (class, lead) and InvalidArgument on
    /// an invalid distribution.
    void insert(ParamDistribution dist);
    void replace(ParamDistribution dist);

    const ParamDistribution* find(const AbnormalityClass& cls, LeadId lead) const;
    /// Throws ConfigError when absent.
    const ParamDistribution& at(const AbnormalityClass& cls, LeadId lead) const;

    bool has_class(const AbnormalityClass& cls) const;
    std::vector<AbnormalityClass> classes() const;

    /// Rhythm shared by every lead of `cls`; ConfigError if leads disagree or
    /// the class is absent.
    RhythmParams class_rhythm(const AbnormalityClass& cls) const;

    /// Distribution means as synthesis models for the free leads.
    LeadModels mean_models(const AbnormalityClass& cls) const;

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    Map::const_iterator begin() const { return entries_.begin(); }
    Map::const_iterator end() const { return entries_.end(); }

    bool operator==(const ParamSet&) const = default;

private:
    Map entries_;
};

ParamSet read_param_file(std::string_view text);
std::string write_param_file(const ParamSet& set);

ParamSet load_param_file(const std::filesystem::path& path);

/// Per-lead morphology of the shipped NORMAL class (means only).
LeadModels default_lead_models();

/// Shipped NORMAL distributions for all twelve leads.
ParamSet default_param_set();

}  // namespace ecgode
