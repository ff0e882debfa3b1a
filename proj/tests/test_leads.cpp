#include <doctest.h>

#include <cmath>
#include <vector>

#include "ecgode/leads.hpp"
#include "ecgode/params.hpp"

using namespace ecgode;

namespace {

Heartbeat default_beat(double fs = 500.0) {
    const RhythmParams rhythm{};
    return synthesize_heartbeat(default_lead_models(), rhythm, SamplingGrid::for_beat(fs, rhythm));
}

}  // namespace

TEST_CASE("lead names round-trip") {
    for (LeadId id : kAllLeads) {
        const auto parsed = parse_lead(lead_name(id));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == id);
    }
    CHECK(lead_name(LeadId::aVR) == "aVR");
    CHECK_FALSE(parse_lead("V7").has_value());
    CHECK_FALSE(parse_lead("").has_value());
    CHECK(is_free_lead(LeadId::V3));
    CHECK_FALSE(is_free_lead(LeadId::aVL));
}

TEST_CASE("limb relation table") {
    const auto& rels = limb_relations();
    CHECK(rels[0].target == LeadId::I);
    CHECK(rels[0].src1 == LeadId::II);
    CHECK(rels[0].src2 == LeadId::III);
    CHECK(rels[0].beta == 1.0);
    CHECK(rels[0].gamma == -1.0);

    CHECK(rels[3].target == LeadId::aVR);
    CHECK(rels[3].beta == -0.5);
    CHECK(rels[3].gamma == -0.5);

    CHECK(relation_for(LeadId::aVF).src1 == LeadId::II);
    CHECK(relation_for(LeadId::aVF).src2 == LeadId::III);
    CHECK(relation_for(LeadId::aVF).beta == 0.5);
    CHECK_THROWS_AS(relation_for(LeadId::V1), InvalidArgument);
}

TEST_CASE("Einthoven and Goldberger identities on arbitrary I, II") {
    // Electrode potentials RA, LA, LL define every limb lead.
    const double ra = 0.13, la = -0.41, ll = 0.77;
    LeadMatrix m = LeadMatrix::Zero(kLeadCount, 1);
    m(row_of(LeadId::I), 0) = la - ra;
    m(row_of(LeadId::II), 0) = ll - ra;
    derive_limb_leads(m);
    CHECK(m(row_of(LeadId::III), 0) == doctest::Approx(ll - la));
    CHECK(m(row_of(LeadId::aVR), 0) == doctest::Approx(ra - (la + ll) / 2));
    CHECK(m(row_of(LeadId::aVL), 0) == doctest::Approx(la - (ra + ll) / 2));
    CHECK(m(row_of(LeadId::aVF), 0) == doctest::Approx(ll - (ra + la) / 2));
}

TEST_CASE("synthesized beat is limb-consistent") {
    const Heartbeat beat = default_beat();
    CHECK(beat.leads.cols() == 500);
    const ConsistencyReport rep = check_lead_consistency(beat, 1e-9);
    CHECK(rep.pass);
    for (const auto& r : rep.relations) {
        CHECK(r.max_abs_deviation <= 1e-12);
        CHECK(r.pass);
    }
    CHECK(beat.leads.allFinite());
}

TEST_CASE("lead II R peak is about one millivolt") {
    const Heartbeat beat = default_beat();
    const double peak = beat.row(LeadId::II).maxCoeff();
    CHECK(peak > 0.8);
    CHECK(peak < 1.2);
}

TEST_CASE("consistency check flags a corrupted lead") {
    Heartbeat beat = default_beat();
    beat.leads(row_of(LeadId::aVL), 100) += 0.05;
    const ConsistencyReport rep = check_lead_consistency(beat, 1e-6);
    CHECK_FALSE(rep.pass);
    int failed = 0;
    for (const auto& r : rep.relations) failed += r.pass ? 0 : 1;
    CHECK(failed == 1);
    CHECK(rep.relations[4].max_abs_deviation == doctest::Approx(0.05));
}

TEST_CASE("missing free lead is a configuration error") {
    LeadModels models = default_lead_models();
    models.erase(LeadId::V4);
    const RhythmParams rhythm{};
    CHECK_THROWS_AS(synthesize_heartbeat(models, rhythm, SamplingGrid::for_beat(500.0, rhythm)),
                    ConfigError);
}

TEST_CASE("heartbeat validates its shape") {
    const SamplingGrid g(500.0, 10);
    CHECK_THROWS_AS(Heartbeat(g, LeadMatrix::Zero(kLeadCount, 9)), DimensionError);
    LeadMatrix m = LeadMatrix::Zero(kLeadCount, 10);
    m(0, 3) = std::nan("");
    CHECK_THROWS_AS(Heartbeat(g, m), InvalidArgument);
}

TEST_CASE("abnormality class codes") {
    CHECK(AbnormalityClass("IAVB").code() == "IAVB");
    CHECK(AbnormalityClass::normal().code() == "NORMAL");
    CHECK_THROWS_AS(AbnormalityClass(""), InvalidArgument);
    CHECK_THROWS_AS(AbnormalityClass("rbbb"), InvalidArgument);
    CHECK(AbnormalityClass("AF") < AbnormalityClass("NORMAL"));
}

TEST_CASE("beat train follows the requested rates") {
    const std::vector<double> rates{1.0, 1.25, 0.8};
    const BeatTrain train = synthesize_beat_train(default_lead_models(), RhythmParams{}, 500.0, rates);
    REQUIRE(train.beat_starts.size() == 3);
    CHECK(train.beat_starts[0] == 0);
    CHECK(train.beat_starts[1] == 500);
    CHECK(train.beat_starts[2] == 900);
    CHECK(train.leads.cols() == 500 + 400 + 625);
    CHECK(train.leads.allFinite());

    // The R peak of each beat lies near the middle of it.
    for (std::size_t k = 0; k < 3; ++k) {
        const auto start = static_cast<Eigen::Index>(train.beat_starts[k]);
        const auto len = static_cast<Eigen::Index>(std::llround(500.0 / rates[k]));
        Eigen::Index at = 0;
        train.leads.row(row_of(LeadId::II)).segment(start, len).maxCoeff(&at);
        CHECK(std::abs(static_cast<double>(at) / static_cast<double>(len) - 0.5) < 0.05);
    }
}
