#include "mathfuse/tokenizer.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "mathfuse/synonyms_data.hpp"

namespace mathfuse {

namespace {

bool is_ascii_alpha(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Length in bytes of the UTF-8 sequence starting at s[i]; 1 for ASCII and
// for malformed lead bytes, so the scanner always advances.
std::size_t utf8_len(std::string_view s, std::size_t i) {
    unsigned char lead = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if ((lead & 0xE0) == 0xC0) len = 2;
    else if ((lead & 0xF0) == 0xE0) len = 3;
    else if ((lead & 0xF8) == 0xF0) len = 4;
    if (i + len > s.size()) len = 1;
    return len;
}

void emit_symbol(TokenSequence& out, const std::string& canonical) {
    out.push_back(MathToken{TokenKind::MathSymbol, "<" + canonical + ">"});
}

void emit_words(TokenSequence& out, std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) {
            out.push_back(MathToken{TokenKind::Word, std::string(text.substr(start, i - start))});
        }
    }
}

void emit_math(TokenSequence& out, std::string_view math, const SynonymTable& table) {
    std::size_t i = 0;
    while (i < math.size()) {
        char c = math[i];
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (c == '\\' && i + 1 < math.size()) {
            std::string lexeme;
            if (is_ascii_alpha(math[i + 1])) {
                std::size_t j = i + 1;
                while (j < math.size() && is_ascii_alpha(math[j])) ++j;
                lexeme.assign(math.substr(i, j - i));
                i = j;
            } else {
                std::size_t len = utf8_len(math, i + 1);
                lexeme.assign(math.substr(i, 1 + len));
                i += 1 + len;
            }
            if (auto canonical = table.canonical_for(lexeme)) {
                emit_symbol(out, *canonical);
            } else {
                emit_symbol(out, lexeme.substr(1)); // command name without backslash
            }
            continue;
        }
        if (c == '_') {
            emit_symbol(out, "subscript");
            ++i;
            continue;
        }
        if (c == '^') {
            emit_symbol(out, "supscript");
            ++i;
            continue;
        }
        // Grouping braces, letters, digits, and anything else tokenize one
        // symbol per character (one per code point for non-ASCII). A
        // single-character lexeme present in the table is remapped like a
        // command.
        std::size_t len = utf8_len(math, i);
        std::string lexeme(math.substr(i, len));
        i += len;
        if (auto canonical = table.canonical_for(lexeme)) {
            emit_symbol(out, *canonical);
        } else {
            emit_symbol(out, lexeme);
        }
    }
}

} // namespace

const SynonymTable& SynonymTable::builtin() {
    static const SynonymTable table = SynonymTable::parse(kBuiltinSynonymsText);
    return table;
}

SynonymTable SynonymTable::parse(std::string_view text) {
    SynonymTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = (nl == std::string_view::npos)
                                    ? text.substr(pos)
                                    : text.substr(pos, nl - pos);
        ++line_no;
        if (nl == std::string_view::npos && line.empty()) break;

        std::string_view stripped = line;
        if (auto hash = stripped.find('#'); hash != std::string_view::npos) {
            stripped = stripped.substr(0, hash);
        }
        bool blank = true;
        for (char c : stripped) {
            if (!is_space(c)) { blank = false; break; }
        }
        if (!blank) {
            auto colon = stripped.find(':');
            if (colon == std::string_view::npos) {
                throw ParseError("expected \"canonical: lexeme ...\"", line_no);
            }
            std::string canonical;
            {
                std::string_view head = stripped.substr(0, colon);
                std::size_t b = 0, e = head.size();
                while (b < e && is_space(head[b])) ++b;
                while (e > b && is_space(head[e - 1])) --e;
                canonical.assign(head.substr(b, e - b));
            }
            if (canonical.empty()) {
                throw ParseError("empty canonical name", line_no);
            }
            std::vector<std::string> lexemes;
            std::istringstream rest{std::string(stripped.substr(colon + 1))};
            std::string lexeme;
            while (rest >> lexeme) lexemes.push_back(lexeme);
            try {
                table.add(canonical, lexemes);
            } catch (const ValidationError& e) {
                throw ParseError(e.what(), line_no);
            }
        }

        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return table;
}

SynonymTable SynonymTable::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open synonym table: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void SynonymTable::add(const std::string& canonical, const std::vector<std::string>& lexemes) {
    for (const auto& lexeme : lexemes) {
        auto [it, inserted] = reverse_.emplace(lexeme, canonical);
        if (!inserted && it->second != canonical) {
            throw ValidationError("lexeme \"" + lexeme + "\" already maps to \"" +
                                  it->second + "\"");
        }
        entries_[canonical].insert(lexeme);
    }
}

std::optional<std::string> SynonymTable::canonical_for(std::string_view lexeme) const {
    auto it = reverse_.find(lexeme);
    if (it == reverse_.end()) return std::nullopt;
    return it->second;
}

TokenSequence pretokenize(std::string_view text, const SynonymTable& table) {
    TokenSequence out;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t open = text.find('$', i);
        if (open == std::string_view::npos) {
            emit_words(out, text.substr(i));
            break;
        }
        std::size_t close = text.find('$', open + 1);
        if (close == std::string_view::npos) {
            // Unbalanced delimiter: the rest, '$' included, is literal text.
            emit_words(out, text.substr(i));
            break;
        }
        emit_words(out, text.substr(i, open - i));
        emit_math(out, text.substr(open + 1, close - open - 1), table);
        i = close + 1;
    }
    return out;
}

std::set<std::string> vocabulary_of(const std::vector<TokenSequence>& corpus) {
    std::set<std::string> vocabulary;
    for (const auto& seq : corpus) {
        for (const auto& token : seq) {
            if (token.kind == TokenKind::MathSymbol) vocabulary.insert(token.surface);
        }
    }
    return vocabulary;
}

std::string render(const TokenSequence& tokens) {
    std::string out;
    for (const auto& token : tokens) {
        if (!out.empty()) out += ' ';
        out += token.surface;
    }
    return out;
}

std::vector<std::string> surfaces(const TokenSequence& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& token : tokens) out.push_back(token.surface);
    return out;
}

} // namespace mathfuse
