#include "nsa/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <tuple>

namespace nsa {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_word_char(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// True iff `word` occurs in `text` with word boundaries on both sides.
bool contains_word(std::string_view text, std::string_view word) {
    std::size_t pos = 0;
    while ((pos = text.find(word, pos)) != std::string_view::npos) {
        bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        std::size_t end = pos + word.size();
        bool right_ok = end == text.size() || !is_word_char(text[end]);
        if (left_ok && right_ok) return true;
        pos += 1;
    }
    return false;
}

std::string_view first_line(std::string_view text) {
    std::size_t nl = text.find('\n');
    return nl == std::string_view::npos ? text : text.substr(0, nl);
}

std::string_view first_sentence(std::string_view text) {
    std::size_t end = text.find_first_of(".!?\n");
    return end == std::string_view::npos ? text : text.substr(0, end + 1);
}

// Strips leading whitespace, markdown markers and punctuation so that
// replies like "**AGREE**" or "> Agree." still hit rule 1.
std::string_view strip_leading_noise(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && !is_word_char(s[i])) ++i;
    return s.substr(i);
}

std::vector<std::string_view> words(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && !is_word_char(s[i])) ++i;
        std::size_t b = i;
        while (i < s.size() && is_word_char(s[i])) ++i;
        if (i > b) out.push_back(s.substr(b, i - b));
    }
    return out;
}

bool is_stem_filler(std::string_view w) {
    // Modals and adverbs tolerated between "I" and the verb: "I would
    // strongly disagree". Negative modals (cannot, don't, ...) are not in
    // the set, so negated stems fall through to invalid instead of being
    // tie-broken. "d" and "ll" are contraction remainders (i'd, i'll).
    if (w.size() > 2 && w.substr(w.size() - 2) == "ly") return true;
    return w == "would" || w == "must" || w == "do" || w == "can" || w == "still" || w == "d" ||
           w == "ll";
}

// Confidence comes from the first "CONFIDENCE: n" occurrence that actually
// carries a number in [0,100]; anything else is treated as absent.
std::optional<double> parse_confidence(const std::string& lowered) {
    std::size_t pos = 0;
    while ((pos = lowered.find("confidence", pos)) != std::string::npos) {
        std::size_t i = pos + 10;
        while (i < lowered.size() && (lowered[i] == ':' || lowered[i] == ' ' || lowered[i] == '\t' ||
                                      lowered[i] == '=' || lowered[i] == '*'))
            ++i;
        if (i < lowered.size() && std::isdigit(static_cast<unsigned char>(lowered[i]))) {
            char* end = nullptr;
            double value = std::strtod(lowered.c_str() + i, &end);
            if (end != lowered.c_str() + i && value >= 0.0 && value <= 100.0) return value;
        }
        pos += 10;
    }
    return std::nullopt;
}

ParsedDecision make(Decision dec, const char* rule, std::optional<double> conf) {
    ParsedDecision p;
    p.decision = dec;
    if (dec != Decision::invalid) p.d = dec == Decision::agree ? 1 : 0;
    p.confidence = conf;
    p.parse_rule = rule;
    return p;
}

}  // namespace

std::string_view decision_name(Decision d) {
    switch (d) {
        case Decision::agree: return "agree";
        case Decision::disagree: return "disagree";
        case Decision::invalid: return "invalid";
    }
    return "?";
}

ParsedDecision parse_decision(const std::string& raw_text) {
    const std::string lowered = lower(raw_text);
    const std::optional<double> conf = parse_confidence(lowered);

    // Rule 1: verdict token on the first line. Either the line begins with
    // AGREE/DISAGREE, or it is a short verdict-only line (at most four
    // words, e.g. "Strongly disagree.", "Verdict: AGREE"). A first line
    // carrying both tokens is ambiguous and falls through (binary forcing,
    // no tie-breaking).
    {
        std::string_view line = first_line(lowered);
        std::string_view stripped = strip_leading_noise(line);
        bool starts_disagree =
            stripped.substr(0, 8) == "disagree" && (stripped.size() == 8 || !is_word_char(stripped[8]));
        bool starts_agree = !starts_disagree && stripped.substr(0, 5) == "agree" &&
                            (stripped.size() == 5 || !is_word_char(stripped[5]));
        const bool line_has_agree = contains_word(line, "agree");
        const bool line_has_disagree = contains_word(line, "disagree");
        if (starts_agree && !line_has_disagree)
            return make(Decision::agree, "first-line-token", conf);
        if (starts_disagree && !contains_word(stripped.substr(8), "agree"))
            return make(Decision::disagree, "first-line-token", conf);
        if (line_has_agree != line_has_disagree && words(line).size() <= 4)
            return make(line_has_agree ? Decision::agree : Decision::disagree, "first-line-token",
                        conf);
    }

    // Rule 2: leading yes/no or "I agree"/"I disagree" stem in the first
    // sentence. A sentence containing both verdict words is invalid, as is
    // a leading yes immediately contradicted by a no (and vice versa).
    {
        std::string_view sentence = first_sentence(lowered);
        bool has_agree = contains_word(sentence, "agree");
        bool has_disagree = contains_word(sentence, "disagree");
        if (has_agree && has_disagree) return make(Decision::invalid, "conflicting-stems", conf);

        auto toks = words(sentence);
        Decision stem = Decision::invalid;
        bool yes_no_clash = false;
        if (!toks.empty()) {
            if (toks[0] == "yes" || toks[0] == "no") {
                stem = toks[0] == "yes" ? Decision::agree : Decision::disagree;
                const std::string_view opposite = toks[0] == "yes" ? "no" : "yes";
                for (std::size_t j = 1; j < toks.size() && j <= 2; ++j)
                    if (toks[j] == opposite) yes_no_clash = true;
            } else if (toks[0] == "i") {
                std::size_t j = 1;
                while (j < toks.size() && j <= 3 && is_stem_filler(toks[j])) ++j;
                if (j < toks.size()) {
                    if (toks[j] == "agree") stem = Decision::agree;
                    else if (toks[j] == "disagree") stem = Decision::disagree;
                }
            }
        }
        if (yes_no_clash) return make(Decision::invalid, "conflicting-stems", conf);
        if (stem == Decision::agree && !has_disagree)
            return make(Decision::agree, "first-sentence-stem", conf);
        if (stem == Decision::disagree && !has_agree)
            return make(Decision::disagree, "first-sentence-stem", conf);
        if (stem != Decision::invalid) return make(Decision::invalid, "conflicting-stems", conf);
    }

    return make(Decision::invalid, "unparsed", conf);
}

FilterResult quality_filter(const std::vector<RawTrial>& records, int samples_per_cell,
                            double floor_fraction) {
    FilterResult out;
    out.report.n_input = records.size();
    out.report.floor_fraction = floor_fraction;
    out.report.samples_per_cell = samples_per_cell;

    std::map<std::tuple<std::string, std::string, std::string>, CellDropCount> cells;
    for (const RawTrial& r : records) {
        auto key = std::make_tuple(r.model, r.scenario_id, r.framing);
        auto it = cells.find(key);
        if (it == cells.end()) {
            CellDropCount c;
            c.model = r.model;
            c.scenario_id = r.scenario_id;
            c.framing = r.framing;
            it = cells.emplace(key, c).first;
        }
        it->second.n_total += 1;

        bool valid = r.transport_ok && r.parsed.decision != Decision::invalid;
        if (valid) {
            it->second.n_valid += 1;
            out.kept.push_back(r);
        } else {
            if (!r.transport_ok)
                out.report.n_dropped_transport += 1;
            else
                out.report.n_dropped_invalid += 1;
            out.dropped.push_back(r);
        }
    }
    out.report.n_kept = out.kept.size();

    const double floor = floor_fraction * samples_per_cell;
    for (auto& [key, cell] : cells) {
        cell.flagged = static_cast<double>(cell.n_valid) < floor;
        out.report.cells.push_back(cell);
    }
    return out;
}

}  // namespace nsa
