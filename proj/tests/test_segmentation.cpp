#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "ecgode/params.hpp"
#include "ecgode/segmentation.hpp"

using namespace ecgode;

namespace {

constexpr double kFs = 500.0;

struct Synthetic {
    Record record;
    std::vector<std::size_t> r_peaks;  // argmax of lead II inside each generated beat
};

Synthetic synthetic_record(std::uint64_t seed, std::size_t beats) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> bpm(60.0, 100.0);
    std::vector<double> rates;
    for (std::size_t k = 0; k < beats; ++k) rates.push_back(bpm(rng) / 60.0);
    BeatTrain train = synthesize_beat_train(default_lead_models(), RhythmParams{}, kFs, rates);

    std::vector<std::size_t> peaks;
    for (std::size_t k = 0; k < beats; ++k) {
        const auto start = static_cast<Eigen::Index>(train.beat_starts[k]);
        const Eigen::Index stop = k + 1 < beats ? static_cast<Eigen::Index>(train.beat_starts[k + 1])
                                                : train.leads.cols();
        Eigen::Index at = 0;
        train.leads.row(row_of(LeadId::II)).segment(start, stop - start).maxCoeff(&at);
        peaks.push_back(static_cast<std::size_t>(start + at));
    }
    return {Record(kFs, train.leads, "synthetic", AbnormalityClass::normal()), peaks};
}

Eigen::VectorXd lead_ii(const Record& rec) { return rec.channels.row(row_of(LeadId::II)).transpose(); }

}  // namespace

TEST_CASE("resampling by linear interpolation") {
    Eigen::VectorXd seg(5);
    seg << 0.0, 1.0, 4.0, 9.0, 16.0;
    CHECK(resample_cycle(seg, 5) == seg);

    const Eigen::VectorXd up = resample_cycle(seg, 9);
    CHECK(up(0) == 0.0);
    CHECK(up(8) == 16.0);
    CHECK(up(1) == doctest::Approx(0.5));
    CHECK(up(3) == doctest::Approx(2.5));

    // A straight line is reproduced exactly at any length.
    Eigen::VectorXd line(37);
    for (Eigen::Index i = 0; i < 37; ++i) line(i) = 0.25 - 0.1 * static_cast<double>(i);
    const Eigen::VectorXd r = resample_cycle(line, 512);
    for (Eigen::Index j = 0; j < 512; ++j) {
        const double pos = static_cast<double>(j) * 36.0 / 511.0;
        CHECK(r(j) == doctest::Approx(0.25 - 0.1 * pos).epsilon(1e-12));
    }

    CHECK_THROWS_AS(resample_cycle(Eigen::VectorXd::Zero(1), 10), DimensionError);
}

TEST_CASE("detector finds every beat of a jittered synthetic record") {
    const Synthetic s = synthetic_record(21, 10);
    const auto peaks = detect_r_peaks(lead_ii(s.record), kFs);
    REQUIRE(peaks.size() == 10);
    for (std::size_t k = 0; k < 10; ++k) {
        CHECK(std::abs(static_cast<long>(peaks[k]) - static_cast<long>(s.r_peaks[k])) <= 10);
    }
}

TEST_CASE("detector is invariant to a constant offset") {
    const Synthetic s = synthetic_record(8, 10);
    const Eigen::VectorXd ii = lead_ii(s.record);
    const Eigen::VectorXd shifted = ii.array() + 0.1;
    CHECK(detect_r_peaks(shifted, kFs) == detect_r_peaks(ii, kFs));
}

TEST_CASE("ten beats at a steady 60 bpm") {
    const std::vector<double> rates(10, 1.0);
    const BeatTrain train = synthesize_beat_train(default_lead_models(), RhythmParams{}, kFs, rates);
    Eigen::Index r_in_beat = 0;
    const RhythmParams rhythm{};
    synthesize_heartbeat(default_lead_models(), rhythm, SamplingGrid::for_beat(kFs, rhythm))
        .row(LeadId::II)
        .maxCoeff(&r_in_beat);
    const auto peaks = detect_r_peaks(train.leads.row(row_of(LeadId::II)).transpose(), kFs);
    REQUIRE(peaks.size() == 10);
    for (std::size_t k = 0; k < 10; ++k) {
        CHECK(std::abs(static_cast<long>(peaks[k]) - static_cast<long>(500 * k + static_cast<std::size_t>(r_in_beat))) <= 10);
    }
}

TEST_CASE("no rhythm in a flat signal") {
    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(2000, 0.1);
    CHECK(locate_qrs_peaks(flat, kFs).size() < 2);
    CHECK_THROWS_AS(detect_r_peaks(flat, kFs), NoRhythmError);
    CHECK_THROWS_AS(detect_r_peaks(Eigen::VectorXd::Zero(100), kFs), DimensionError);
}

TEST_CASE("single synthesized beat has one dominant peak") {
    const RhythmParams rhythm{};
    const Heartbeat beat = synthesize_heartbeat(default_lead_models(), rhythm, SamplingGrid::for_beat(kFs, rhythm));
    const auto peaks = locate_qrs_peaks(beat.row(LeadId::II).transpose(), kFs);
    REQUIRE(peaks.size() == 1);
    Eigen::Index at = 0;
    beat.row(LeadId::II).maxCoeff(&at);
    CHECK(static_cast<Eigen::Index>(peaks[0]) == at);
}

TEST_CASE("cycles span consecutive peaks and carry the label") {
    const Synthetic s = synthetic_record(5, 10);
    const auto peaks = detect_r_peaks(lead_ii(s.record), kFs);
    const auto cycles = segment_record_cycles(s.record);
    REQUIRE(cycles.size() == 9);
    for (std::size_t k = 0; k < 9; ++k) {
        const Cycle& c = cycles[k];
        CHECK(c.start == peaks[k]);
        CHECK(c.end == peaks[k + 1]);
        CHECK(c.beat.leads.cols() == 512);
        REQUIRE(c.beat.label.has_value());
        CHECK(c.beat.label->code() == "NORMAL");
        const auto start = static_cast<Eigen::Index>(c.start);
        const auto last = static_cast<Eigen::Index>(c.end - 1);
        for (LeadId id : kAllLeads) {
            CHECK(c.beat.row(id)(0) == s.record.channels(row_of(id), start));
            CHECK(c.beat.row(id)(511) == s.record.channels(row_of(id), last));
        }
        CHECK(c.beat.grid.fs() == doctest::Approx(511.0 / (static_cast<double>(c.end - c.start - 1) / kFs)));
        CHECK(check_lead_consistency(c.beat, 1e-9).pass);
    }
    CHECK(segment_record(s.record, 300).front().leads.cols() == 300);
}

TEST_CASE("record validation") {
    CHECK_THROWS_AS(Record(kFs, LeadMatrix::Zero(kLeadCount, 499)), DimensionError);
    CHECK_THROWS_AS(Record(0.0, LeadMatrix::Zero(kLeadCount, 1000)), InvalidArgument);
    CHECK_NOTHROW(Record(kFs, LeadMatrix::Zero(kLeadCount, 500)));
}
