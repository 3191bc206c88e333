#pragma once

#include <array>
#include <string>
#include <string_view>

#include "nsa/errors.hpp"

namespace nsa {

// The four framing conditions. F0/F1 form the simple polarity pair,
// F2/F3 the compound pair with an embedded goal clause.
enum class FramingKind { F0, F1, F2, F3 };

inline constexpr std::array<FramingKind, 4> kAllFramings = {
    FramingKind::F0, FramingKind::F1, FramingKind::F2, FramingKind::F3};

struct Framing {
    FramingKind kind;
    bool negated;       // the polarity indicator: true exactly for F1 and F3
    bool compound;      // true exactly for F2 and F3
    std::string_view tmpl;  // slots: {subject}, {action}, {goal}
};

// Fixed framing table. Statements render with a lowercase negation marker;
// emphasis capitalization ("NOT") is a render option.
constexpr std::array<Framing, 4> kFramings = {{
    {FramingKind::F0, false, false, "{subject} should {action}."},
    {FramingKind::F1, true, false, "{subject} should not {action}."},
    {FramingKind::F2, false, true,
     "{subject} should {goal} even if it means {subject} must {action}."},
    {FramingKind::F3, true, true,
     "{subject} should not {goal} if it means {subject} must {action}."},
}};

constexpr const Framing& framing(FramingKind kind) {
    return kFramings[static_cast<std::size_t>(kind)];
}

constexpr bool negated(FramingKind kind) { return framing(kind).negated; }

constexpr std::string_view framing_name(FramingKind kind) {
    switch (kind) {
        case FramingKind::F0: return "F0";
        case FramingKind::F1: return "F1";
        case FramingKind::F2: return "F2";
        case FramingKind::F3: return "F3";
    }
    return "?";
}

inline FramingKind framing_from_name(std::string_view name) {
    for (FramingKind k : kAllFramings)
        if (framing_name(k) == name) return k;
    throw ParseError("unknown framing name: " + std::string(name));
}

}  // namespace nsa
