#pragma once

#include "epcag/error.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace epcag {

/// One `key = value` line. Positions are 1-based.
struct IniEntry {
    std::string key;
    std::string value;
    SourceLocation key_at;
    SourceLocation value_at;
};

struct IniSection {
    std::string name;
    SourceLocation at;
    std::vector<IniEntry> entries;

    const IniEntry* find(std::string_view key) const;

    /// Throws ParseError naming the first key not in `allowed`.
    void reject_unknown(std::initializer_list<std::string_view> allowed) const;
};

/// Minimal INI reader: `[section]` headers, `key = value` lines, `#` comments.
/// Keys outside a section and duplicate keys or sections are errors.
class IniDocument {
public:
    static IniDocument parse(std::string_view text);

    const IniSection* section(std::string_view name) const;
    const std::vector<IniSection>& sections() const { return sections_; }

private:
    std::vector<IniSection> sections_;
};

/// Value split on `sep`, with the source position of each trimmed piece.
struct ValuePiece {
    std::string text;
    SourceLocation at;
};
std::vector<ValuePiece> split_value(std::string_view value, SourceLocation at, char sep);

double parse_real(const ValuePiece& piece);
long parse_integer(const ValuePiece& piece);

}  // namespace epcag
