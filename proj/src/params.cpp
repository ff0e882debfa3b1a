#include "ecgode/params.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include "ecgode/error.hpp"

namespace ecgode {

namespace {

constexpr double kPi = std::numbers::pi;

struct Issue {
    std::string field;  // key suffix after "<CLASS>.<LEAD>."
    std::string message;
};

std::string wave_field(Wave w, std::string_view field) {
    return std::string(wave_name(w)) + "." + std::string(field);
}

std::optional<Issue> find_issue(const ParamDistribution& d) {
    for (Wave w : kWaves) {
        const double theta = d.mean(theta_index(w));
        const double a = d.mean(amplitude_index(w));
        const double b = d.mean(width_index(w));
        if (!std::isfinite(theta) || theta < -kPi || theta >= kPi) {
            return Issue{wave_field(w, "theta_mean"), "must be finite and in [-pi, pi)"};
        }
        if (!std::isfinite(a)) return Issue{wave_field(w, "a_mean"), "must be finite"};
        if (!std::isfinite(b) || b < kMinWidth) {
            return Issue{wave_field(w, "b_mean"), "must be >= 1e-3"};
        }
        const std::array<std::pair<std::size_t, std::string_view>, 3> stds{
            {{theta_index(w), "theta_std"}, {amplitude_index(w), "a_std"}, {width_index(w), "b_std"}}};
        for (const auto& [idx, name] : stds) {
            if (!std::isfinite(d.std(idx)) || d.std(idx) < 0) {
                return Issue{wave_field(w, name), "must be finite and >= 0"};
            }
        }
    }
    for (std::size_t i = 1; i < kWaveCount; ++i) {
        if (!(d.mean(i - 1) < d.mean(i))) {
            return Issue{wave_field(kWaves[i], "theta_mean"),
                         "wave centres must increase from P to T"};
        }
    }
    if (!std::isfinite(d.gain_mean) || d.gain_mean <= 0) {
        return Issue{"gain_mean", "must be finite and positive"};
    }
    if (!std::isfinite(d.gain_std) || d.gain_std < 0) {
        return Issue{"gain_std", "must be finite and >= 0"};
    }
    if (!std::isfinite(d.rhythm.f) || d.rhythm.f <= 0) return Issue{"rhythm.f", "must be positive"};
    if (!std::isfinite(d.rhythm.A) || d.rhythm.A < 0) return Issue{"rhythm.A", "must be >= 0"};
    if (!std::isfinite(d.rhythm.f2) || d.rhythm.f2 < 0) return Issue{"rhythm.f2", "must be >= 0"};
    return std::nullopt;
}

std::string block_prefix(const AbnormalityClass& cls, LeadId lead) {
    return cls.code() + "." + std::string(lead_name(lead)) + ".";
}

std::string format_value(double v) {
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (true) {
        const auto next = s.find(sep, pos);
        parts.push_back(s.substr(pos, next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return parts;
}

// Slot in a ParamDistribution addressed by the key suffix after CLASS.LEAD.
double* slot_for(ParamDistribution& d, const std::vector<std::string_view>& rest) {
    if (rest.size() == 1) {
        if (rest[0] == "gain_mean") return &d.gain_mean;
        if (rest[0] == "gain_std") return &d.gain_std;
        return nullptr;
    }
    if (rest.size() != 2) return nullptr;
    if (rest[0] == "rhythm") {
        if (rest[1] == "f") return &d.rhythm.f;
        if (rest[1] == "A") return &d.rhythm.A;
        if (rest[1] == "f2") return &d.rhythm.f2;
        return nullptr;
    }
    for (Wave w : kWaves) {
        if (rest[0] != wave_name(w)) continue;
        if (rest[1] == "theta_mean") return &d.mean(theta_index(w));
        if (rest[1] == "theta_std") return &d.std(theta_index(w));
        if (rest[1] == "a_mean") return &d.mean(amplitude_index(w));
        if (rest[1] == "a_std") return &d.std(amplitude_index(w));
        if (rest[1] == "b_mean") return &d.mean(width_index(w));
        if (rest[1] == "b_std") return &d.std(width_index(w));
    }
    return nullptr;
}

// Keys every block must define, in canonical output order.
std::vector<std::string> required_fields() {
    std::vector<std::string> fields;
    for (Wave w : kWaves) {
        for (std::string_view f : {"theta_mean", "theta_std", "a_mean", "a_std", "b_mean", "b_std"}) {
            fields.push_back(wave_field(w, f));
        }
    }
    for (std::string_view f : {"gain_mean", "gain_std", "rhythm.f", "rhythm.A", "rhythm.f2"}) {
        fields.emplace_back(f);
    }
    return fields;
}

}  // namespace

void ParamDistribution::validate() const {
    if (const auto issue = find_issue(*this)) {
        throw InvalidArgument(block_prefix(cls, lead) + issue->field + ": " + issue->message);
    }
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                     static_cast<std::uint32_t>(seed >> 32)};
    for (std::uint64_t p : path) {
        words.push_back(static_cast<std::uint32_t>(p));
        words.push_back(static_cast<std::uint32_t>(p >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

EtaDraw sample_eta(const ParamDistribution& dist, std::mt19937_64& rng) {
    std::normal_distribution<double> unit(0.0, 1.0);
    EtaVector v;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = dist.mean(i) + dist.std(i) * unit(rng);
    }
    const double gain = dist.gain_mean + dist.gain_std * unit(rng);
    EdmParams eta = EdmParams::from_vector(v);
    for (auto& e : eta.waves) {
        e.theta = wrap_angle(e.theta);
        e.b = std::max(e.b, kMinWidth);
    }
    return {eta, gain};
}

EtaDraw sample_eta(const ParamDistribution& dist, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_eta(dist, rng);
}

void ParamSet::insert(ParamDistribution dist) {
    dist.validate();
    Key key{dist.cls, dist.lead};
    if (entries_.count(key) != 0) {
        throw ConfigError("duplicate distribution for " + block_prefix(dist.cls, dist.lead));
    }
    entries_.emplace(std::move(key), std::move(dist));
}

void ParamSet::replace(ParamDistribution dist) {
    dist.validate();
    Key key{dist.cls, dist.lead};
    entries_.insert_or_assign(std::move(key), std::move(dist));
}

const ParamDistribution* ParamSet::find(const AbnormalityClass& cls, LeadId lead) const {
    const auto it = entries_.find(Key{cls, lead});
    return it == entries_.end() ? nullptr : &it->second;
}

const ParamDistribution& ParamSet::at(const AbnormalityClass& cls, LeadId lead) const {
    if (const auto* d = find(cls, lead)) return *d;
    throw ConfigError("no parameter distribution for class " + cls.code() + ", lead " +
                      std::string(lead_name(lead)));
}

bool ParamSet::has_class(const AbnormalityClass& cls) const {
    for (const auto& [key, d] : entries_) {
        if (key.first == cls) return true;
    }
    return false;
}

std::vector<AbnormalityClass> ParamSet::classes() const {
    std::vector<AbnormalityClass> out;
    for (const auto& [key, d] : entries_) {
        if (out.empty() || !(out.back() == key.first)) out.push_back(key.first);
    }
    return out;
}

RhythmParams ParamSet::class_rhythm(const AbnormalityClass& cls) const {
    std::optional<RhythmParams> rhythm;
    for (const auto& [key, d] : entries_) {
        if (!(key.first == cls)) continue;
        if (rhythm && !(*rhythm == d.rhythm)) {
            throw ConfigError("class " + cls.code() + ": leads disagree on rhythm parameters");
        }
        rhythm = d.rhythm;
    }
    if (!rhythm) throw ConfigError("no parameter distributions for class " + cls.code());
    return *rhythm;
}

LeadModels ParamSet::mean_models(const AbnormalityClass& cls) const {
    LeadModels models;
    for (LeadId id : kFreeLeads) {
        const auto& d = at(cls, id);
        models[id] = LeadModel{EdmParams::from_vector(d.mean), d.gain_mean};
    }
    return models;
}

ParamSet read_param_file(std::string_view text) {
    struct Block {
        ParamDistribution dist;
        std::map<std::string, std::size_t> seen;  // field -> line
        std::size_t first_line;
    };
    std::map<ParamSet::Key, Block> blocks;
    std::vector<ParamSet::Key> order;

    std::size_t line_no = 0;
    for (std::string_view raw : split(text, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value_text = trim(line.substr(eq + 1));

        const auto parts = split(key, '.');
        if (parts.size() < 3) throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
        std::optional<AbnormalityClass> cls;
        try {
            cls.emplace(std::string(parts[0]));
        } catch (const InvalidArgument& e) {
            throw ParseError(line_no, e.what());
        }
        const auto lead = parse_lead(parts[1]);
        if (!lead) throw ParseError(line_no, "unknown lead '" + std::string(parts[1]) + "'");

        ParamSet::Key bkey{*cls, *lead};
        auto [it, fresh] = blocks.try_emplace(bkey);
        Block& block = it->second;
        if (fresh) {
            block.dist.cls = *cls;
            block.dist.lead = *lead;
            block.dist.mean.setZero();
            block.first_line = line_no;
            order.push_back(bkey);
        }

        const std::vector<std::string_view> rest(parts.begin() + 2, parts.end());
        double* slot = slot_for(block.dist, rest);
        if (slot == nullptr) throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
        const std::string field(key.substr(parts[0].size() + parts[1].size() + 2));
        if (block.seen.count(field) != 0) {
            throw ParseError(line_no, "duplicate key '" + std::string(key) + "'");
        }

        double value = 0;
        const auto [ptr, ec] =
            std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
        if (ec != std::errc() || ptr != value_text.data() + value_text.size() ||
            !std::isfinite(value)) {
            throw ParseError(line_no, "bad number '" + std::string(value_text) + "' for key '" +
                                          std::string(key) + "'");
        }
        *slot = value;
        block.seen.emplace(field, line_no);
    }

    ParamSet set;
    const auto fields = required_fields();
    for (const auto& bkey : order) {
        const Block& block = blocks.at(bkey);
        const std::string prefix = block_prefix(bkey.first, bkey.second);
        for (const auto& f : fields) {
            if (block.seen.count(f) == 0) {
                throw ParseError(block.first_line, "missing required key '" + prefix + f + "'");
            }
        }
        if (const auto issue = find_issue(block.dist)) {
            throw ParseError(block.seen.at(issue->field),
                             "'" + prefix + issue->field + "' " + issue->message);
        }
        set.insert(block.dist);
    }
    return set;
}

std::string write_param_file(const ParamSet& set) {
    std::ostringstream out;
    out << "# ecgode parameter distributions: <CLASS>.<LEAD>.<key> = value\n";
    const auto fields = required_fields();
    for (const auto& [key, d] : set) {
        out << "\n";
        ParamDistribution copy = d;
        const std::string prefix = block_prefix(key.first, key.second);
        for (const auto& f : fields) {
            const auto rest = split(f, '.');
            const double* slot =
                slot_for(copy, std::vector<std::string_view>(rest.begin(), rest.end()));
            out << prefix << f << " = " << format_value(*slot) << "\n";
        }
    }
    return out.str();
}

ParamSet load_param_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open parameter file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_param_file(buf.str());
}

namespace {

// Common mV-per-model-unit gain; puts the lead II R wave at about 1 mV.
constexpr double kDefaultGain = 21.6;

// Per-lead (P, Q, R, S, T) amplitudes for the free leads. Wave centres and
// widths are shared by all leads.
const std::map<LeadId, std::array<double, kWaveCount>>& free_lead_amplitudes() {
    static const std::map<LeadId, std::array<double, kWaveCount>> table{
        {LeadId::I, {0.9, -3.0, 20.0, -5.0, 0.6}},
        {LeadId::II, {1.2, -5.0, 30.0, -7.5, 0.75}},
        {LeadId::V1, {0.6, -1.0, 6.0, -22.0, -0.3}},
        {LeadId::V2, {0.8, -2.0, 12.0, -25.0, 0.9}},
        {LeadId::V3, {0.9, -3.0, 20.0, -18.0, 1.0}},
        {LeadId::V4, {1.0, -4.0, 32.0, -12.0, 1.0}},
        {LeadId::V5, {1.0, -4.5, 30.0, -8.0, 0.9}},
        {LeadId::V6, {1.0, -4.0, 24.0, -5.0, 0.8}},
    };
    return table;
}

}  // namespace

LeadModels default_lead_models() {
    LeadModels models;
    for (const auto& [id, amps] : free_lead_amplitudes()) {
        EdmParams eta = EdmParams::defaults();
        for (Wave w : kWaves) eta[w].a = amps[static_cast<std::size_t>(w)];
        models[id] = LeadModel{eta, kDefaultGain};
    }
    return models;
}

ParamSet default_param_set() {
    const LeadModels free = default_lead_models();
    // Dependent-lead amplitudes use the same {I, II} combination as the samples.
    std::map<LeadId, EdmParams> etas;
    for (const auto& [id, m] : free) etas[id] = m.eta;
    for (const auto& d : limb_derivations()) {
        EdmParams eta = EdmParams::defaults();
        for (Wave w : kWaves) {
            eta[w].a = d.from_I * etas.at(LeadId::I)[w].a + d.from_II * etas.at(LeadId::II)[w].a;
        }
        etas[d.target] = eta;
    }

    ParamSet set;
    for (LeadId id : kAllLeads) {
        ParamDistribution dist;
        dist.cls = AbnormalityClass::normal();
        dist.lead = id;
        dist.mean = etas.at(id).to_vector();
        for (Wave w : kWaves) {
            dist.std(theta_index(w)) = 0.02;
            dist.std(amplitude_index(w)) = 0.05 * std::abs(dist.mean(amplitude_index(w)));
            dist.std(width_index(w)) = 0.05 * dist.mean(width_index(w));
        }
        dist.gain_mean = kDefaultGain;
        dist.gain_std = 0.0;
        dist.rhythm = RhythmParams{};
        set.insert(dist);
    }
    return set;
}

}  // namespace ecgode
