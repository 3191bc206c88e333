#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "json.hpp"

#include "nsa/parser.hpp"

using namespace nsa;

TEST_CASE("rule 1: first-line verdict token") {
    ParsedDecision p = parse_decision("AGREE\nCONFIDENCE: 85");
    CHECK(p.decision == Decision::agree);
    CHECK(p.d == 1);
    CHECK(p.confidence == 85.0);
    CHECK(p.parse_rule == "first-line-token");

    p = parse_decision("Disagree. He must not do this.");
    CHECK(p.decision == Decision::disagree);
    CHECK(p.d == 0);
    CHECK_FALSE(p.confidence.has_value());
    CHECK(p.parse_rule == "first-line-token");
}

TEST_CASE("rule 2: yes/no and first-person stems") {
    CHECK(parse_decision("Yes, go ahead.").decision == Decision::agree);
    CHECK(parse_decision("Yes, go ahead.").parse_rule == "first-sentence-stem");
    CHECK(parse_decision("No. Too risky.").decision == Decision::disagree);
    CHECK(parse_decision("I strongly disagree with this.").decision == Decision::disagree);
}

TEST_CASE("rule 3: everything else is invalid, not an error") {
    ParsedDecision p = parse_decision("It depends on many factors...");
    CHECK(p.decision == Decision::invalid);
    CHECK_FALSE(p.d.has_value());
    CHECK(p.parse_rule == "unparsed");

    CHECK(parse_decision("").decision == Decision::invalid);
    // refusal is invalid, never a disagreement
    CHECK(parse_decision("I can't help with that.").decision == Decision::invalid);
}

TEST_CASE("binary forcing: conflicting stems are invalid") {
    CHECK(parse_decision("I agree and I disagree.").decision == Decision::invalid);
    CHECK(parse_decision("AGREE or DISAGREE? Hard to say.").decision == Decision::invalid);
    CHECK(parse_decision("Yes and no.").decision == Decision::invalid);
}

TEST_CASE("parser is deterministic") {
    const std::string inputs[] = {"AGREE\nCONFIDENCE: 12", "no way", "hmm", "Yes.", "DISAGREE"};
    for (const std::string& s : inputs) {
        ParsedDecision a = parse_decision(s);
        ParsedDecision b = parse_decision(s);
        CHECK(a.decision == b.decision);
        CHECK(a.d == b.d);
        CHECK(a.confidence == b.confidence);
        CHECK(a.parse_rule == b.parse_rule);
    }
}

TEST_CASE("fixture corpus: parser matches every hand label") {
    std::ifstream in(NSA_PARSER_FIXTURES);
    REQUIRE(in.good());
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        nlohmann::json j = nlohmann::json::parse(line);
        const std::string raw = j.at("raw").get<std::string>();
        const std::string expected = j.at("expected").get<std::string>();
        CAPTURE(raw);

        ParsedDecision p = parse_decision(raw);
        CHECK(decision_name(p.decision) == expected);
        CHECK(p.d.has_value() == (expected != "invalid"));
        if (j.contains("confidence")) {
            REQUIRE(p.confidence.has_value());
            CHECK(*p.confidence == doctest::Approx(j.at("confidence").get<double>()));
        } else {
            CHECK_FALSE(p.confidence.has_value());
        }
        ++n;
    }
    CHECK(n >= 60);
}

namespace {

RawTrial trial(const std::string& model, const std::string& scenario, const std::string& framing,
               int index, const std::string& raw_text, bool transport_ok = true) {
    RawTrial t;
    t.model = model;
    t.scenario_id = scenario;
    t.domain = "medical";
    t.framing = framing;
    t.sample_index = index;
    t.transport_ok = transport_ok;
    t.parsed = parse_decision(raw_text);
    return t;
}

}  // namespace

TEST_CASE("quality filter: counts and flags") {
    std::vector<RawTrial> records;
    for (int i = 0; i < 30; ++i) records.push_back(trial("m", "s1", "F0", i, "AGREE"));
    FilterResult r = quality_filter(records, 30);
    CHECK(r.kept.size() == 30);
    CHECK(r.dropped.empty());
    REQUIRE(r.report.cells.size() == 1);
    CHECK_FALSE(r.report.cells[0].flagged);

    // 25/30 valid sits above the 0.8 floor (24), so no flag
    records.clear();
    for (int i = 0; i < 25; ++i) records.push_back(trial("m", "s1", "F0", i, "AGREE"));
    for (int i = 25; i < 30; ++i) records.push_back(trial("m", "s1", "F0", i, "it depends"));
    r = quality_filter(records, 30);
    CHECK(r.kept.size() == 25);
    CHECK(r.dropped.size() == 5);
    CHECK(r.report.n_dropped_invalid == 5);
    CHECK_FALSE(r.report.cells[0].flagged);

    // 23/30 falls below the floor
    records.clear();
    for (int i = 0; i < 23; ++i) records.push_back(trial("m", "s1", "F0", i, "DISAGREE"));
    for (int i = 23; i < 30; ++i) records.push_back(trial("m", "s1", "F0", i, "..."));
    r = quality_filter(records, 30);
    CHECK(r.report.cells[0].flagged);

    // 10/30 is clearly flagged
    records.clear();
    for (int i = 0; i < 10; ++i) records.push_back(trial("m", "s1", "F0", i, "AGREE"));
    for (int i = 10; i < 30; ++i) records.push_back(trial("m", "s1", "F0", i, "hmm"));
    r = quality_filter(records, 30);
    CHECK(r.report.cells[0].flagged);
}

TEST_CASE("quality filter: transport failures dropped separately, records unaltered") {
    std::vector<RawTrial> records;
    for (int i = 0; i < 10; ++i) records.push_back(trial("m", "s1", "F0", i, "AGREE"));
    records.push_back(trial("m", "s1", "F0", 10, "AGREE", /*transport_ok=*/false));
    records.push_back(trial("m", "s1", "F0", 11, "garbled"));

    FilterResult r = quality_filter(records, 12);
    CHECK(r.kept.size() + r.dropped.size() == records.size());
    CHECK(r.report.n_dropped_transport == 1);
    CHECK(r.report.n_dropped_invalid == 1);
    for (std::size_t i = 0; i < r.kept.size(); ++i) {
        CHECK(r.kept[i].sample_index == static_cast<int>(i));
        CHECK(r.kept[i].parsed.d == 1);
    }
}

TEST_CASE("quality filter: per-cell accounting across models") {
    std::vector<RawTrial> records;
    for (int i = 0; i < 4; ++i) {
        records.push_back(trial("a", "s1", "F0", i, "AGREE"));
        records.push_back(trial("a", "s1", "F1", i, "DISAGREE"));
        records.push_back(trial("b", "s1", "F0", i, i < 2 ? "AGREE" : "..."));
    }
    FilterResult r = quality_filter(records, 4);
    REQUIRE(r.report.cells.size() == 3);
    int flagged = 0;
    for (const CellDropCount& c : r.report.cells) {
        CHECK(c.n_total == 4);
        if (c.flagged) {
            ++flagged;
            CHECK(c.model == "b");
            CHECK(c.n_valid == 2);
        }
    }
    CHECK(flagged == 1);
}
