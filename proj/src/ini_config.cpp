#include "epcag/ini_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace epcag {

namespace {

std::size_t first_non_space(std::string_view s, std::size_t from = 0) {
    while (from < s.size() && std::isspace(static_cast<unsigned char>(s[from]))) {
        ++from;
    }
    return from;
}

std::string_view trim_right(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

const IniEntry* IniSection::find(std::string_view key) const {
    for (const auto& e : entries) {
        if (e.key == key) {
            return &e;
        }
    }
    return nullptr;
}

void IniSection::reject_unknown(std::initializer_list<std::string_view> allowed) const {
    for (const auto& e : entries) {
        if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end()) {
            throw ParseError("unknown key '" + e.key + "' in section [" + name + "]", e.key_at);
        }
    }
}

IniDocument IniDocument::parse(std::string_view text) {
    IniDocument doc;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = text.size();
        }
        std::string_view line = text.substr(pos, eol - pos);
        ++line_no;
        pos = eol + 1;

        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim_right(line);
        std::size_t start = first_non_space(line);
        if (start == line.size()) {
            if (eol == text.size()) {
                break;
            }
            continue;
        }
        const SourceLocation at{line_no, static_cast<int>(start) + 1};
        if (line[start] == '[') {
            if (line.back() != ']') {
                throw ParseError("section header missing ']'", at);
            }
            std::string name(trim_right(line.substr(start + 1, line.size() - start - 2)));
            name.erase(0, first_non_space(name));
            if (name.empty()) {
                throw ParseError("empty section name", at);
            }
            if (doc.section(name) != nullptr) {
                throw ParseError("duplicate section [" + name + "]", at);
            }
            doc.sections_.push_back(IniSection{name, at, {}});
        } else {
            auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ParseError("expected 'key = value'", at);
            }
            if (doc.sections_.empty()) {
                throw ParseError("key outside of any section", at);
            }
            std::string key(trim_right(line.substr(start, eq - start)));
            if (key.empty()) {
                throw ParseError("empty key", at);
            }
            std::size_t vstart = first_non_space(line, eq + 1);
            IniEntry entry{key, std::string(line.substr(vstart)), at,
                           SourceLocation{line_no, static_cast<int>(vstart) + 1}};
            auto& sec = doc.sections_.back();
            if (sec.find(key) != nullptr) {
                throw ParseError("duplicate key '" + key + "' in [" + sec.name + "]", at);
            }
            sec.entries.push_back(std::move(entry));
        }
        if (eol == text.size()) {
            break;
        }
    }
    return doc;
}

const IniSection* IniDocument::section(std::string_view name) const {
    for (const auto& s : sections_) {
        if (s.name == name) {
            return &s;
        }
    }
    return nullptr;
}

std::vector<ValuePiece> split_value(std::string_view value, SourceLocation at, char sep) {
    std::vector<ValuePiece> out;
    std::size_t begin = 0;
    for (;;) {
        std::size_t end = value.find(sep, begin);
        if (end == std::string_view::npos) {
            end = value.size();
        }
        std::string_view piece = value.substr(begin, end - begin);
        std::size_t lead = first_non_space(piece);
        std::string_view trimmed = trim_right(piece.substr(lead));
        out.push_back(ValuePiece{std::string(trimmed),
                                 SourceLocation{at.line, at.column + static_cast<int>(begin + lead)}});
        if (end == value.size()) {
            break;
        }
        begin = end + 1;
    }
    return out;
}

double parse_real(const ValuePiece& piece) {
    const char* first = piece.text.c_str();
    char* end = nullptr;
    double v = std::strtod(first, &end);
    if (piece.text.empty() || end != first + piece.text.size() || !std::isfinite(v)) {
        throw ParseError("expected a real number, got '" + piece.text + "'", piece.at);
    }
    return v;
}

long parse_integer(const ValuePiece& piece) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(piece.text.data(), piece.text.data() + piece.text.size(), v);
    if (piece.text.empty() || ec != std::errc{} || ptr != piece.text.data() + piece.text.size()) {
        throw ParseError("expected an integer, got '" + piece.text + "'", piece.at);
    }
    return v;
}

}  // namespace epcag
