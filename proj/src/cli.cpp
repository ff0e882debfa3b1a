#include "ecgode/cli.hpp"

#include <CLI11.hpp>

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <vector>

#include "ecgode/csv.hpp"
#include "ecgode/error.hpp"
#include "ecgode/fidelity.hpp"
#include "ecgode/optimize.hpp"
#include "ecgode/params.hpp"
#include "ecgode/segmentation.hpp"

namespace ecgode {

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("failed writing " + path.string());
}

std::string num(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), res.ptr};
}

ParamSet load_params(const std::string& path) {
    return path.empty() ? default_param_set() : load_param_file(path);
}

void write_beats(const fs::path& path, const std::vector<Heartbeat>& beats) {
    write_file(path, beats.size() == 1 ? write_heartbeat_csv(beats.front()) : write_beats_csv(beats));
}

struct SynthesizeArgs {
    std::string params;
    std::string cls = "NORMAL";
    double fs = 500.0;
    std::size_t beats = 1;
    std::uint64_t seed = 0;
    std::string out;
};

int synthesize(const SynthesizeArgs& a) {
    const ParamSet set = load_params(a.params);
    const AbnormalityClass cls(a.cls);
    const RhythmParams rhythm = set.class_rhythm(cls);
    const SamplingGrid grid = SamplingGrid::for_beat(a.fs, rhythm);

    std::vector<Heartbeat> beats;
    for (std::size_t k = 0; k < a.beats; ++k) {
        LeadModels models;
        for (LeadId id : kFreeLeads) {
            const auto draw = sample_eta(set.at(cls, id),
                                         derive_seed(a.seed, {k, static_cast<std::uint64_t>(id)}));
            models[id] = LeadModel{draw.eta, draw.gain};
        }
        Heartbeat beat = synthesize_heartbeat(models, rhythm, grid);
        beat.label = cls;
        beats.push_back(std::move(beat));
    }
    write_beats(a.out, beats);
    return kExitOk;
}

struct ScoreArgs {
    std::string input;
    std::string params;
    std::string cls = "NORMAL";
    double delta = 0.6;
    std::size_t samples = 8;
    std::uint64_t seed = 0;
};

int score(const ScoreArgs& a, std::ostream& out) {
    const ParamSet set = load_params(a.params);
    const AbnormalityClass cls(a.cls);
    const RhythmParams rhythm = set.class_rhythm(cls);
    const auto beats = read_beats_csv(read_file(a.input));

    out << "beat,loss,single,inter";
    for (LeadId id : kAllLeads) out << ',' << lead_name(id);
    out << '\n';
    for (std::size_t k = 0; k < beats.size(); ++k) {
        const auto& beat = beats[k];
        const CombinedLoss loss(beat.grid, set, cls, LossWeights{a.delta}, a.samples, a.seed);
        const auto v = loss.evaluate(beat.leads);
        out << k << ',' << num(v.total) << ',' << num(v.single) << ',' << num(v.inter);
        const Trajectory ref = reference_orbit(rhythm, beat.grid);
        for (LeadId id : kAllLeads) {
            const auto& d = set.at(cls, id);
            const LeadSignal h(beat.grid, beat.row(id).transpose() / d.gain_mean, id);
            out << ',' << num(sim_distance(h, EdmParams::from_vector(d.mean), rhythm, ref));
        }
        out << '\n';
    }
    return kExitOk;
}

struct RefineArgs {
    std::string input;
    std::string params;
    std::string cls = "NORMAL";
    double delta = 0.6;
    std::size_t steps = 500;
    std::size_t samples = 8;
    std::uint64_t seed = 0;
    std::string out;
};

int refine(const RefineArgs& a, std::ostream& out) {
    const ParamSet set = load_params(a.params);
    const AbnormalityClass cls(a.cls);
    auto beats = read_beats_csv(read_file(a.input));

    OptimConfig cfg;
    cfg.max_iter = a.steps;
    out << "beat,initial_loss,final_loss,steps\n";
    std::vector<Heartbeat> refined;
    for (std::size_t k = 0; k < beats.size(); ++k) {
        beats[k].label = cls;
        auto r = refine_waveform_traced(beats[k], set, LossWeights{a.delta}, cfg, a.seed, a.samples);
        out << k << ',' << num(r.loss_trace.front()) << ',' << num(r.loss_trace.back()) << ','
            << r.iterations << '\n';
        refined.push_back(std::move(r.beat));
    }
    write_beats(a.out, refined);
    return kExitOk;
}

struct FitArgs {
    std::string input;
    std::string lead = "II";
    std::string init;
    std::string cls = "NORMAL";
    std::size_t beat = 0;
    std::size_t max_iter = 5000;
    std::string out;
};

int fit(const FitArgs& a, std::ostream& out) {
    const auto lead = parse_lead(a.lead);
    if (!lead) throw InvalidArgument("unknown lead " + a.lead);
    ParamSet set = load_params(a.init);
    const AbnormalityClass cls(a.cls);
    const auto beats = read_beats_csv(read_file(a.input));
    if (a.beat >= beats.size()) throw InvalidArgument("beat index out of range");
    const auto& beat = beats[a.beat];

    ParamDistribution dist = set.at(cls, *lead);
    const LeadSignal h(beat.grid, beat.row(*lead).transpose() / dist.gain_mean, *lead);
    const Trajectory ref = reference_orbit(dist.rhythm, beat.grid);
    OptimConfig cfg;
    cfg.max_iter = a.max_iter;
    const FitResult result = fit_params(h, EdmParams::from_vector(dist.mean), dist.rhythm, ref, cfg);

    dist.mean = result.eta.to_vector();
    set.replace(dist);
    write_file(a.out, write_param_file(set));
    out << "lead,final_distance,iterations,converged\n"
        << lead_name(*lead) << ',' << num(result.final_distance) << ',' << result.iterations << ','
        << (result.converged ? 1 : 0) << '\n';
    return result.converged ? kExitOk : kExitDiverged;
}

struct SegmentArgs {
    std::string input;
    std::size_t length = kDefaultCycleLength;
    std::string out_dir;
    std::string label;
};

int segment(const SegmentArgs& a, std::ostream& out) {
    Record rec = read_record_csv(read_file(a.input), fs::path(a.input).stem().string());
    if (!a.label.empty()) rec.label = AbnormalityClass(a.label);
    const auto cycles = segment_record_cycles(rec, a.length);
    fs::create_directories(a.out_dir);
    out << "cycle,start,end,file\n";
    for (std::size_t k = 0; k < cycles.size(); ++k) {
        std::array<char, 32> name{};
        std::snprintf(name.data(), name.size(), "cycle_%03zu.csv", k);
        const fs::path path = fs::path(a.out_dir) / name.data();
        write_file(path, write_heartbeat_csv(cycles[k].beat));
        out << k << ',' << cycles[k].start << ',' << cycles[k].end << ',' << path.string() << '\n';
    }
    return kExitOk;
}

struct CheckArgs {
    std::string input;
    double tol = 1e-9;
};

int check(const CheckArgs& a, std::ostream& out, std::ostream& err) {
    const auto beats = read_beats_csv(read_file(a.input));
    bool pass = true;
    out << "beat,target,max_deviation,pass\n";
    for (std::size_t k = 0; k < beats.size(); ++k) {
        const auto report = check_lead_consistency(beats[k], a.tol);
        for (const auto& r : report.relations) {
            out << k << ',' << lead_name(r.relation.target) << ',' << num(r.max_abs_deviation) << ','
                << (r.pass ? 1 : 0) << '\n';
            if (!r.pass) {
                err << "beat " << k << ": lead " << lead_name(r.relation.target)
                    << " violates its limb identity by " << r.max_abs_deviation << " mV\n";
            }
        }
        pass = pass && report.pass;
    }
    return pass ? kExitOk : kExitInvalidData;
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthesize, score, refine and segment 12-lead ECG heartbeats", "ecgode"};
    app.require_subcommand(1);
    std::function<int()> action;

    SynthesizeArgs syn;
    auto* s = app.add_subcommand("synthesize", "Draw beats from a class distribution");
    s->add_option("--params", syn.params, "Parameter file (default: built-in NORMAL set)");
    s->add_option("--class", syn.cls, "Abnormality class");
    s->add_option("--fs", syn.fs, "Sampling frequency, Hz")->check(CLI::PositiveNumber);
    s->add_option("--beats", syn.beats, "Number of beats")->check(CLI::PositiveNumber);
    s->add_option("--seed", syn.seed, "Random seed");
    s->add_option("--out", syn.out, "Output CSV")->required();
    s->callback([&] { action = [&] { return synthesize(syn); }; });

    ScoreArgs sc;
    auto* c = app.add_subcommand("score", "Combined Euler loss and per-lead simulator distance");
    c->add_option("--input", sc.input, "Heartbeat CSV")->required();
    c->add_option("--params", sc.params, "Parameter file");
    c->add_option("--class", sc.cls, "Abnormality class");
    c->add_option("--delta", sc.delta, "Single-lead weight")->check(CLI::Range(0.0, 1.0));
    c->add_option("--samples", sc.samples, "Parameter draws")->check(CLI::PositiveNumber);
    c->add_option("--seed", sc.seed, "Random seed");
    c->callback([&] { action = [&] { return score(sc, out); }; });

    RefineArgs rf;
    auto* r = app.add_subcommand("refine", "Descend the combined loss over the waveform samples");
    r->add_option("--input", rf.input, "Heartbeat CSV")->required();
    r->add_option("--params", rf.params, "Parameter file");
    r->add_option("--class", rf.cls, "Abnormality class");
    r->add_option("--delta", rf.delta, "Single-lead weight")->check(CLI::Range(0.0, 1.0));
    r->add_option("--steps", rf.steps, "Maximum descent steps")->check(CLI::PositiveNumber);
    r->add_option("--samples", rf.samples, "Parameter draws")->check(CLI::PositiveNumber);
    r->add_option("--seed", rf.seed, "Random seed");
    r->add_option("--out", rf.out, "Output CSV")->required();
    r->callback([&] { action = [&] { return refine(rf, out); }; });

    FitArgs ft;
    auto* f = app.add_subcommand("fit", "Fit one lead's parameters to an observed beat");
    f->add_option("--input", ft.input, "Heartbeat CSV")->required();
    f->add_option("--lead", ft.lead, "Lead to fit");
    f->add_option("--init", ft.init, "Parameter file holding the starting point");
    f->add_option("--class", ft.cls, "Abnormality class");
    f->add_option("--beat", ft.beat, "Beat index in a multi-beat file");
    f->add_option("--max-iter", ft.max_iter, "Iteration limit")->check(CLI::PositiveNumber);
    f->add_option("--out", ft.out, "Output parameter file")->required();
    f->callback([&] { action = [&] { return fit(ft, out); }; });

    SegmentArgs sg;
    auto* g = app.add_subcommand("segment", "Cut a 12-lead record into R-to-R cycles");
    g->add_option("--input", sg.input, "Record CSV")->required();
    g->add_option("--length", sg.length, "Samples per cycle")->check(CLI::Range(2, 1 << 20));
    g->add_option("--out-dir", sg.out_dir, "Directory for cycle CSVs")->required();
    g->add_option("--label", sg.label, "Class annotation of the record");
    g->callback([&] { action = [&] { return segment(sg, out); }; });

    CheckArgs ck;
    auto* k = app.add_subcommand("check", "Verify the limb-lead identities");
    k->add_option("--input", ck.input, "Heartbeat CSV")->required();
    k->add_option("--tol", ck.tol, "Tolerance, mV")->check(CLI::NonNegativeNumber);
    k->callback([&] { action = [&] { return check(ck, out, err); }; });

    std::vector<const char*> argv{"ecgode"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "ecgode: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        return action();
    } catch (const DivergedError& e) {
        err << "ecgode: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const Error& e) {
        err << "ecgode: " << e.what() << "\n";
        return kExitInvalidData;
    } catch (const fs::filesystem_error& e) {
        err << "ecgode: " << e.what() << "\n";
        return kExitInvalidData;
    }
}

}  // namespace ecgode
