#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mathfuse/errors.hpp"

namespace mathfuse {

enum class TokenKind { Word, MathSymbol };

/// One pre-tokenizer output token. Word surfaces are verbatim source
/// chunks; MathSymbol surfaces carry the canonical name wrapped in angle
/// brackets, e.g. "<infty>". The kind flag, not the surface, is
/// authoritative: a Word whose source text happens to look bracket-wrapped
/// stays a Word.
struct MathToken {
    TokenKind kind = TokenKind::Word;
    std::string surface;

    friend bool operator==(const MathToken&, const MathToken&) = default;
};

using TokenSequence = std::vector<MathToken>;

/// Maps source lexemes (LaTeX commands such as "\leq", including the
/// backslash) to canonical token names, so that semantically identical
/// markup tokenizes identically. Read-only after construction.
class SynonymTable {
public:
    /// The table shipped with the toolkit (same content as data/synonyms.txt).
    static const SynonymTable& builtin();

    /// Parses the table format: "canonical: lexeme lexeme ..." per line,
    /// '#' comments and blank lines allowed. A lexeme listed under two
    /// canonical names is a ValidationError.
    static SynonymTable parse(std::string_view text);
    static SynonymTable load_file(const std::string& path);

    /// Empty table: every command tokenizes under its own name.
    SynonymTable() = default;

    void add(const std::string& canonical, const std::vector<std::string>& lexemes);
    std::optional<std::string> canonical_for(std::string_view lexeme) const;

    const std::map<std::string, std::set<std::string>>& entries() const { return entries_; }

    friend bool operator==(const SynonymTable&, const SynonymTable&) = default;

private:
    std::map<std::string, std::set<std::string>> entries_; // canonical -> lexemes
    std::map<std::string, std::string, std::less<>> reverse_; // lexeme -> canonical
};

/// Splits mixed text/math content into a canonical token stream.
///
/// Math regions are delimited by inline "$...$"; a '$' with no closing
/// partner is literal text. Outside math, maximal whitespace-free chunks
/// become Word tokens verbatim (punctuation stays attached). Inside math,
/// every command, letter, digit, and syntactic character becomes one
/// MathSymbol: commands map through the table (unknown commands keep their
/// own name), '_' becomes <subscript>, '^' becomes <supscript>, grouping
/// braces become <{> and <}>, and letters and digits tokenize one symbol
/// per character. Tokenization is total: no input fails.
TokenSequence pretokenize(std::string_view text,
                          const SynonymTable& table = SynonymTable::builtin());

/// Deduplicated set of MathSymbol surfaces observed across a corpus.
std::set<std::string> vocabulary_of(const std::vector<TokenSequence>& corpus);

/// Space-joined token surfaces (flat one-line rendering).
std::string render(const TokenSequence& tokens);

/// Token surfaces in order, for feeding the encoder.
std::vector<std::string> surfaces(const TokenSequence& tokens);

} // namespace mathfuse
