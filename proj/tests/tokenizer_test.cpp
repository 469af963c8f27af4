#include "mathfuse/tokenizer.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace mathfuse;

namespace {

std::vector<std::string> surfaces_of(std::string_view text) {
    return surfaces(pretokenize(text));
}

TEST(Pretokenize, GoldenMixedTextAndMath) {
    const std::string input =
        "Inequality between norm 1, norm 2 and norm $\\infty$ of matrices: "
        "$\\|A\\|_2 \\leq \\sqrt{\\|A\\|_1 \\|A\\|_\\infty}$";
    const std::string expected =
        "Inequality between norm 1, norm 2 and norm <infty> of matrices: "
        "<Vert> <A> <Vert> <subscript> <2> <le> <root> <{> <Vert> <A> <Vert> <subscript> <1> "
        "<Vert> <A> <Vert> <subscript> <infty> <}>";
    EXPECT_EQ(render(pretokenize(input)), expected);
}

TEST(Pretokenize, MathFreeTextPassesThroughAsWords) {
    TokenSequence tokens = pretokenize("hello world");
    ASSERT_EQ(tokens.size(), 2u);
    EXPECT_EQ(tokens[0], (MathToken{TokenKind::Word, "hello"}));
    EXPECT_EQ(tokens[1], (MathToken{TokenKind::Word, "world"}));
}

TEST(Pretokenize, NoDollarMeansNoMathSymbols) {
    for (const MathToken& token : pretokenize("a-b _x^ {y} \\frac no math here"))
        EXPECT_EQ(token.kind, TokenKind::Word);
}

TEST(Pretokenize, WordsKeepPunctuationAttached) {
    EXPECT_EQ(surfaces_of("norm 1, and norms: done."),
              (std::vector<std::string>{"norm", "1,", "and", "norms:", "done."}));
}

TEST(Pretokenize, SynonymAliasesCollapse) {
    EXPECT_EQ(pretokenize("$\\dfrac{1}{2}$"), pretokenize("$\\frac{1}{2}$"));
    EXPECT_EQ(pretokenize("$a \\leq b$"), pretokenize("$a \\le b$"));
    EXPECT_EQ(pretokenize("$\\lVert x \\rVert$"), pretokenize("$\\|x\\|$"));
}

TEST(Pretokenize, AliasInvarianceAcrossBuiltinTable) {
    for (const auto& [canonical, lexemes] : SynonymTable::builtin().entries()) {
        std::vector<TokenSequence> variants;
        for (const std::string& lexeme : lexemes)
            variants.push_back(pretokenize("$x " + lexeme + " y$"));
        for (std::size_t i = 1; i < variants.size(); ++i) EXPECT_EQ(variants[0], variants[i]);
        ASSERT_FALSE(variants.empty());
        ASSERT_GE(variants[0].size(), 2u);
        EXPECT_EQ(variants[0][1].surface, "<" + canonical + ">");
    }
}

TEST(Pretokenize, DigitsAndLettersTokenizePerCharacter) {
    EXPECT_EQ(render(pretokenize("$12xy$")), "<1> <2> <x> <y>");
}

TEST(Pretokenize, SubscriptSuperscriptAndBraces) {
    EXPECT_EQ(render(pretokenize("$x_1^{2}$")),
              "<x> <subscript> <1> <supscript> <{> <2> <}>");
}

TEST(Pretokenize, UnknownCommandKeepsItsOwnName) {
    EXPECT_EQ(render(pretokenize("$\\operatornamewhatever$")), "<operatornamewhatever>");
    EXPECT_EQ(render(pretokenize("$\\infty$")), "<infty>");
}

TEST(Pretokenize, SingleCharacterCommands) {
    EXPECT_EQ(render(pretokenize("$\\|$")), "<Vert>");
    EXPECT_EQ(render(pretokenize("$\\{x\\}$")), "<lbrace> <x> <rbrace>");
    // Unknown one-char command passes through under its own character.
    EXPECT_EQ(render(pretokenize("$\\,$")), "<,>");
}

TEST(Pretokenize, NonAsciiMathSymbolsAreOneTokenPerCodePoint) {
    EXPECT_EQ(render(pretokenize("$αβ$")), "<α> <β>");
}

TEST(Pretokenize, UnbalancedDollarIsLiteralText) {
    TokenSequence tokens = pretokenize("cost is $5 only");
    ASSERT_EQ(tokens.size(), 4u);
    EXPECT_EQ(tokens[1], (MathToken{TokenKind::Word, "is"}));
    EXPECT_EQ(tokens[2], (MathToken{TokenKind::Word, "$5"}));
    for (const MathToken& token : tokens) EXPECT_EQ(token.kind, TokenKind::Word);
}

TEST(Pretokenize, EmptyAndWhitespaceInputs) {
    EXPECT_TRUE(pretokenize("").empty());
    EXPECT_TRUE(pretokenize("   \t  \n").empty());
    EXPECT_TRUE(pretokenize("$$").empty());
    EXPECT_TRUE(pretokenize("$ $").empty());
}

TEST(Pretokenize, OperatorsAndRelationsInsideMath) {
    EXPECT_EQ(render(pretokenize("$a+b=c$")), "<a> <+> <b> <=> <c>");
}

TEST(Pretokenize, Deterministic) {
    const std::string input = "mix $x^2 \\to \\infty$ and text";
    EXPECT_EQ(pretokenize(input), pretokenize(input));
}

TEST(Pretokenize, TotalOnRandomInput) {
    std::mt19937 rng(99);
    const std::string alphabet = "ab1 $\\{}^_|,.ीα";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> length(0, 60);
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        int n = length(rng);
        for (int i = 0; i < n; ++i) text += alphabet[pick(rng)];
        EXPECT_NO_THROW(pretokenize(text));
    }
}

TEST(MathTokenInvariants, WordSurfacesUnwrappedSymbolSurfacesWrapped) {
    for (const MathToken& token : pretokenize("plain <fake> $x \\foo$ tail")) {
        if (token.kind == TokenKind::MathSymbol) {
            ASSERT_GE(token.surface.size(), 3u);
            EXPECT_EQ(token.surface.front(), '<');
            EXPECT_EQ(token.surface.back(), '>');
        }
    }
    // A Word that happens to look wrapped stays a Word; the kind decides.
    TokenSequence tokens = pretokenize("<fake>");
    ASSERT_EQ(tokens.size(), 1u);
    EXPECT_EQ(tokens[0].kind, TokenKind::Word);
    EXPECT_EQ(tokens[0].surface, "<fake>");
}

TEST(VocabularyOf, CollectsMathSymbolSurfacesOnly) {
    TokenSequence example = pretokenize(
        "Inequality between norm 1, norm 2 and norm $\\infty$ of matrices: "
        "$\\|A\\|_2 \\leq \\sqrt{\\|A\\|_1 \\|A\\|_\\infty}$");
    std::set<std::string> expected = {"<infty>", "<Vert>", "<subscript>", "<le>",
                                      "<root>",  "<{>",    "<}>",         "<A>",
                                      "<1>",     "<2>"};
    EXPECT_EQ(vocabulary_of({example}), expected);
    EXPECT_EQ(vocabulary_of({example, example}), expected);
    EXPECT_TRUE(vocabulary_of({}).empty());
}

TEST(Render, JoinsSurfacesWithSingleSpaces) {
    EXPECT_EQ(render({}), "");
    EXPECT_EQ(render({{TokenKind::Word, "a"}, {TokenKind::MathSymbol, "<b>"}}), "a <b>");
}

TEST(Surfaces, PreservesOrder) {
    EXPECT_EQ(surfaces_of("one $2$ three"),
              (std::vector<std::string>{"one", "<2>", "three"}));
}

TEST(SynonymTable, ParseAndLookup) {
    SynonymTable table = SynonymTable::parse(
        "# comment line\n"
        "le: \\le \\leq\n"
        "\n"
        "root: \\sqrt # trailing comment\n");
    EXPECT_EQ(table.canonical_for("\\leq"), std::optional<std::string>("le"));
    EXPECT_EQ(table.canonical_for("\\sqrt"), std::optional<std::string>("root"));
    EXPECT_FALSE(table.canonical_for("\\frac").has_value());
}

TEST(SynonymTable, RejectsAliasUnderTwoCanonicalNames) {
    EXPECT_THROW(SynonymTable::parse("le: \\le\nge: \\le\n"), ParseError);
    SynonymTable table;
    table.add("le", {"\\le"});
    EXPECT_THROW(table.add("ge", {"\\le"}), ValidationError);
    // Re-listing under the same canonical name is harmless.
    EXPECT_NO_THROW(table.add("le", {"\\le", "\\leq"}));
}

TEST(SynonymTable, RejectsMalformedLines) {
    EXPECT_THROW(SynonymTable::parse("no colon here\n"), ParseError);
    EXPECT_THROW(SynonymTable::parse(": \\le\n"), ParseError);
}

TEST(SynonymTable, EmptyTableLeavesCommandsUntouched) {
    SynonymTable empty;
    EXPECT_EQ(render(pretokenize("$\\leq$", empty)), "<leq>");
}

TEST(SynonymTable, BuiltinMatchesShippedDataFile) {
    SynonymTable from_file = SynonymTable::load_file(MATHFUSE_DATA_FILE);
    EXPECT_EQ(from_file, SynonymTable::builtin());
}

TEST(SynonymTable, BuiltinCoversCoreCommands) {
    const SynonymTable& table = SynonymTable::builtin();
    EXPECT_EQ(table.canonical_for("\\leq"), std::optional<std::string>("le"));
    EXPECT_EQ(table.canonical_for("\\sqrt"), std::optional<std::string>("root"));
    EXPECT_EQ(table.canonical_for("\\|"), std::optional<std::string>("Vert"));
    EXPECT_EQ(table.canonical_for("\\dfrac"), std::optional<std::string>("frac"));
    EXPECT_EQ(table.canonical_for("\\frac"), std::optional<std::string>("frac"));
}

} // namespace
