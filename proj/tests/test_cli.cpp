#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ecgode/cli.hpp"
#include "ecgode/csv.hpp"
#include "ecgode/params.hpp"
#include "ecgode/segmentation.hpp"

using namespace ecgode;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("ecgode_cli_" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& p, const std::string& text) { std::ofstream(p) << text; }

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> f;
    std::istringstream in(line);
    for (std::string s; std::getline(in, s, ',');) f.push_back(s);
    return f;
}

std::string zero_variance_params() {
    ParamSet out;
    for (const auto& [key, dist] : default_param_set()) {
        ParamDistribution d = dist;
        d.std.setZero();
        out.insert(d);
    }
    return write_param_file(out);
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"transmogrify"}).code == kExitUsage);
    CHECK(run({"synthesize"}).code == kExitUsage);
    CHECK(run({"score", "--input", "x.csv", "--delta", "2"}).code == kExitUsage);
    CHECK(run({"check", "--input", "x.csv", "--colour", "red"}).code == kExitUsage);
    const Run help = run({"--help"});
    CHECK(help.code == kExitOk);
    CHECK(help.out.find("synthesize") != std::string::npos);
}

TEST_CASE("synthesize is deterministic for a seed") {
    TempDir dir;
    REQUIRE(run({"synthesize", "--seed", "7", "--out", dir / "a.csv"}).code == kExitOk);
    REQUIRE(run({"synthesize", "--seed", "7", "--out", dir / "b.csv"}).code == kExitOk);
    REQUIRE(run({"synthesize", "--seed", "8", "--out", dir / "c.csv"}).code == kExitOk);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));

    const auto lines = split_lines(slurp(dir / "a.csv"));
    CHECK(lines.front() == "time,I,II,III,aVR,aVL,aVF,V1,V2,V3,V4,V5,V6");
    CHECK(lines.size() == 501);
}

TEST_CASE("multi-beat output and consistency check") {
    TempDir dir;
    REQUIRE(run({"synthesize", "--beats", "3", "--fs", "250", "--seed", "1", "--out", dir / "b.csv"}).code ==
            kExitOk);
    const auto beats = read_beats_csv(slurp(dir / "b.csv"));
    REQUIRE(beats.size() == 3);
    CHECK(beats[0].grid.fs() == 250.0);
    CHECK(beats[0].leads.cols() == 250);

    const Run ok = run({"check", "--input", dir / "b.csv"});
    CHECK(ok.code == kExitOk);
    CHECK(split_lines(ok.out).size() == 1 + 3 * 6);

    LeadMatrix bad = beats[1].leads;
    bad(row_of(LeadId::aVF), 10) += 0.01;
    spit(dir / "bad.csv", write_heartbeat_csv(Heartbeat(beats[1].grid, bad)));
    const Run fail = run({"check", "--input", dir / "bad.csv"});
    CHECK(fail.code == kExitInvalidData);
    CHECK(fail.err.find("aVF") != std::string::npos);
}

TEST_CASE("score reports zero loss for a noiseless beat") {
    TempDir dir;
    spit(dir / "zero.params", zero_variance_params());
    REQUIRE(run({"synthesize", "--params", dir / "zero.params", "--seed", "7", "--out", dir / "b.csv"}).code ==
            kExitOk);
    const Run r = run({"score", "--input", dir / "b.csv", "--params", dir / "zero.params", "--delta", "1"});
    REQUIRE(r.code == kExitOk);
    const auto lines = split_lines(r.out);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].rfind("beat,loss,single,inter,I,II", 0) == 0);
    const auto fields = split_fields(lines[1]);
    REQUIRE(fields.size() == 4 + 12);
    CHECK(std::stod(fields[1]) <= 1e-12);
    CHECK(std::stod(fields[5]) <= 1e-12);  // lead II
}

TEST_CASE("refine lowers the loss and writes a consistent beat") {
    TempDir dir;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    LeadMatrix m(kLeadCount, 500);
    for (auto& v : m.reshaped()) v = u(rng);
    derive_limb_leads(m);
    spit(dir / "noise.csv", write_heartbeat_csv(Heartbeat(SamplingGrid(500.0, 500), m)));

    const Run r = run({"refine", "--input", dir / "noise.csv", "--steps", "50", "--out", dir / "out.csv"});
    REQUIRE(r.code == kExitOk);
    const auto fields = split_fields(split_lines(r.out).at(1));
    CHECK(std::stod(fields[2]) < std::stod(fields[1]));
    CHECK(std::stoul(fields[3]) <= 50);
    CHECK(run({"check", "--input", dir / "out.csv"}).code == kExitOk);
}

TEST_CASE("fit writes an updated parameter file") {
    TempDir dir;
    REQUIRE(run({"synthesize", "--params", "", "--seed", "2", "--out", dir / "b.csv"}).code == kExitOk);
    const Run r = run({"fit", "--input", dir / "b.csv", "--lead", "V2", "--out", dir / "fit.params"});
    CHECK(r.code == kExitOk);
    const auto fields = split_fields(split_lines(r.out).at(1));
    CHECK(fields[0] == "V2");
    CHECK(fields[3] == "1");
    const ParamSet fitted = load_param_file(dir / "fit.params");
    CHECK(fitted.size() == 12);
    CHECK_FALSE(fitted.at(AbnormalityClass::normal(), LeadId::V2) ==
                default_param_set().at(AbnormalityClass::normal(), LeadId::V2));

    CHECK(run({"fit", "--input", dir / "b.csv", "--lead", "V9", "--out", dir / "x.params"}).code ==
          kExitInvalidData);
    CHECK(run({"fit", "--input", dir / "b.csv", "--max-iter", "1", "--out", dir / "y.params"}).code ==
          kExitDiverged);
}

TEST_CASE("segment cuts a record into cycle files") {
    TempDir dir;
    const std::vector<double> rates{1.0, 1.3, 1.1, 1.5, 1.2};
    const BeatTrain train = synthesize_beat_train(default_lead_models(), RhythmParams{}, 500.0, rates);
    spit(dir / "rec.csv", write_record_csv(Record(500.0, train.leads)));

    const Run r = run({"segment", "--input", dir / "rec.csv", "--length", "256", "--out-dir", dir / "cycles",
                       "--label", "NORMAL"});
    REQUIRE(r.code == kExitOk);
    const auto lines = split_lines(r.out);
    REQUIRE(lines.size() == 1 + 4);
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto fields = split_fields(lines[k]);
        const auto beats = read_beats_csv(slurp(fields[3]));
        REQUIRE(beats.size() == 1);
        CHECK(beats[0].leads.cols() == 256);
    }
}

TEST_CASE("invalid data exits with code 2") {
    TempDir dir;
    CHECK(run({"check", "--input", dir / "missing.csv"}).code == kExitInvalidData);
    spit(dir / "junk.csv", "time,I\n0,1\n");
    CHECK(run({"check", "--input", dir / "junk.csv"}).code == kExitInvalidData);
    spit(dir / "bad.params", "NORMAL.II.R.a_mean = 1\n");
    const Run r = run({"synthesize", "--params", dir / "bad.params", "--out", dir / "o.csv"});
    CHECK(r.code == kExitInvalidData);
    CHECK(r.err.find("line") != std::string::npos);
    CHECK(run({"synthesize", "--class", "RBBB", "--out", dir / "o.csv"}).code == kExitInvalidData);
}

TEST_CASE("installed binary runs") {
    TempDir dir;
    const std::string cmd = std::string(ECGODE_CLI_PATH) + " synthesize --seed 7 --out " + (dir / "a.csv");
    CHECK(std::system(cmd.c_str()) == 0);
    const auto beats = read_beats_csv(slurp(dir / "a.csv"));
    REQUIRE(beats.size() == 1);

    std::ostringstream in_process;
    std::ostringstream err;
    run_cli(std::vector<std::string>{"synthesize", "--seed", "7", "--out", dir / "b.csv"}, in_process, err);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));

    const std::string bad = std::string(ECGODE_CLI_PATH) + " nonsense > /dev/null 2>&1";
    const int status = std::system(bad.c_str());
    CHECK(WEXITSTATUS(status) == kExitUsage);
}
