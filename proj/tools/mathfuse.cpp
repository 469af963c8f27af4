// mathfuse: command-line front end for the retrieval fusion toolkit.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mathfuse/dense.hpp"
#include "mathfuse/fusion.hpp"
#include "mathfuse/metrics.hpp"
#include "mathfuse/run.hpp"
#include "mathfuse/tokenizer.hpp"
#include "mathfuse/tuner.hpp"

namespace {

using namespace mathfuse;

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream buffer;
        buffer << std::cin.rdbuf();
        return buffer.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw Error("cannot read file: " + path);
    return buffer.str();
}

void write_output(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open file for writing: " + path);
    out << content;
    out.flush();
    if (!out) throw Error("cannot write file: " + path);
}

// Re-throws toolkit errors with the offending path prepended.
template <typename Fn>
auto in_file(const std::string& path, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

RankedRun load_run(const std::string& path, const std::optional<std::string>& tag,
                   std::size_t max_depth) {
    std::string text = read_input(path);
    return in_file(path, [&] { return parse_run(text, tag, max_depth); });
}

JudgmentSet load_qrels(const std::string& path, int threshold) {
    std::string text = read_input(path);
    JudgmentSet judgments = in_file(path, [&] { return parse_qrels(text); });
    judgments.binary_threshold = threshold;
    return judgments;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
    }
    return lines;
}

// "id tok tok ..." per line; returns (id, tokens) pairs in input order.
std::vector<std::pair<std::string, std::vector<std::string>>> load_tokenized(
    const std::string& path) {
    std::string text = read_input(path);
    std::vector<std::pair<std::string, std::vector<std::string>>> items;
    std::size_t line_no = 0;
    for (std::string_view line : split_lines(text)) {
        ++line_no;
        auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() < 2)
            throw Error(path + ": line " + std::to_string(line_no) +
                        ": expected 'id token ...' with at least one token");
        std::vector<std::string> tokens;
        tokens.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) tokens.emplace_back(fields[i]);
        items.emplace_back(std::string(fields[0]), std::move(tokens));
    }
    return items;
}

double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error("bad " + what + ": '" + text + "'");
    }
}

// Grid syntax: "lo:hi:step" or a comma-separated list of values.
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    if (text.find(':') != std::string::npos) {
        auto first = text.find(':');
        auto second = text.find(':', first + 1);
        if (second == std::string::npos || text.find(':', second + 1) != std::string::npos)
            throw Error("bad grid '" + text + "': expected lo:hi:step");
        double lo = parse_double(text.substr(0, first), "grid bound");
        double hi = parse_double(text.substr(first + 1, second - first - 1), "grid bound");
        double step = parse_double(text.substr(second + 1), "grid step");
        if (step <= 0.0 || hi < lo) throw Error("bad grid '" + text + "': need lo <= hi, step > 0");
        for (int i = 0;; ++i) {
            double v = lo + static_cast<double>(i) * step;
            if (v > hi + step * 1e-9) break;
            grid.push_back(v);
        }
    } else {
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t comma = text.find(',', pos);
            std::string item =
                text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            grid.push_back(parse_double(item, "grid value"));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    return grid;
}

int resolve_threshold(const std::string& profile, std::optional<int> override_threshold) {
    if (override_threshold) return *override_threshold;
    if (profile == "arqmath") return profile_threshold(EvalProfile::Arqmath);
    if (profile == "ntcir-full") return profile_threshold(EvalProfile::NtcirFull);
    if (profile == "ntcir-partial") return profile_threshold(EvalProfile::NtcirPartial);
    throw Error("unknown profile '" + profile + "' (use arqmath, ntcir-full, ntcir-partial)");
}

std::string format_double(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

// ---------------------------------------------------------------- tokenize

struct TokenizeOpts {
    std::string input = "-";
    std::string output = "-";
    std::string table_path;
};

int run_tokenize(const TokenizeOpts& opts) {
    SynonymTable custom;
    const SynonymTable* table = &SynonymTable::builtin();
    if (!opts.table_path.empty()) {
        custom = in_file(opts.table_path,
                         [&] { return SynonymTable::parse(read_input(opts.table_path)); });
        table = &custom;
    }
    std::string text = read_input(opts.input);
    std::string out;
    for (std::string_view line : split_lines(text)) {
        out += render(pretokenize(line, *table));
        out += '\n';
    }
    write_output(opts.output, out);
    return 0;
}

// ------------------------------------------------------------------- score

struct ScoreOpts {
    std::string query_path;
    std::string passage_path;
    std::string table_path;
    std::string output = "-";
    std::string mode = "dpr";
    std::string metric = "dot";
    std::string run_tag;
    std::size_t dim = 128;
    std::size_t depth = kDefaultMaxDepth;
    unsigned threads = 0;
};

int run_score(const ScoreOpts& opts) {
    auto queries = load_tokenized(opts.query_path);
    auto docs = load_tokenized(opts.passage_path);
    if (queries.empty()) throw Error(opts.query_path + ": no queries");
    if (docs.empty()) throw Error(opts.passage_path + ": no passages");

    ScoreMode mode;
    if (opts.mode == "dpr")
        mode = ScoreMode::Dpr;
    else if (opts.mode == "colbert")
        mode = ScoreMode::Colbert;
    else
        throw Error("unknown mode '" + opts.mode + "' (use dpr or colbert)");

    Metric metric;
    if (opts.metric == "dot")
        metric = Metric::Dot;
    else if (opts.metric == "neg-l2")
        metric = Metric::NegL2Normalized;
    else
        throw Error("unknown metric '" + opts.metric + "' (use dot or neg-l2)");

    ToyEncoder encoder = [&] {
        if (!opts.table_path.empty()) {
            std::string text = read_input(opts.table_path);
            return in_file(opts.table_path, [&] { return ToyEncoder::deserialize(text); });
        }
        std::set<std::string> vocabulary;
        for (const auto& [id, tokens] : queries) vocabulary.insert(tokens.begin(), tokens.end());
        for (const auto& [id, tokens] : docs) vocabulary.insert(tokens.begin(), tokens.end());
        return ToyEncoder(opts.dim, vocabulary);
    }();

    std::vector<Passage> passages;
    passages.reserve(docs.size());
    for (auto& [id, tokens] : docs) passages.push_back({id, tokens});

    RankedRun run;
    run.run_tag = opts.run_tag.empty() ? opts.mode : opts.run_tag;
    for (const auto& [topic, tokens] : queries) {
        if (run.topics.count(topic))
            throw Error(opts.query_path + ": duplicate topic '" + topic + "'");
        run.topics[topic] =
            score_collection(tokens, passages, encoder, mode, metric, opts.threads);
    }
    run = truncate_run(run, opts.depth);
    validate_run(run, opts.depth);
    write_output(opts.output, write_run(run));
    return 0;
}

// -------------------------------------------------------------------- fuse

struct FuseOpts {
    std::vector<std::string> run_paths;
    std::string output = "-";
    std::string method = "linear";
    std::string normalization = "minmax";
    std::string run_tag;
    double alpha = 0.5;
    unsigned rrf_k = kDefaultRrfK;
    std::size_t depth = kDefaultMaxDepth;
    std::size_t max_depth = kDefaultMaxDepth;
};

FusionMethod parse_method(const std::string& name) {
    if (name == "linear") return FusionMethod::Linear;
    if (name == "borda") return FusionMethod::Borda;
    if (name == "combsum") return FusionMethod::CombSum;
    if (name == "isr") return FusionMethod::Isr;
    if (name == "logisr") return FusionMethod::LogIsr;
    if (name == "rrf") return FusionMethod::Rrf;
    throw Error("unknown method '" + name +
                "' (use linear, borda, combsum, isr, logisr, rrf)");
}

Normalization parse_normalization(const std::string& name) {
    if (name == "minmax") return Normalization::MinMax;
    if (name == "none") return Normalization::None;
    throw Error("unknown normalization '" + name + "' (use minmax or none)");
}

int run_fuse(const FuseOpts& opts) {
    FusionSpec spec;
    spec.method = parse_method(opts.method);
    spec.alpha = opts.alpha;
    spec.rrf_k = opts.rrf_k;
    spec.normalization = parse_normalization(opts.normalization);
    spec.depth = opts.depth;

    std::vector<RankedRun> runs;
    runs.reserve(opts.run_paths.size());
    for (const std::string& path : opts.run_paths)
        runs.push_back(load_run(path, std::nullopt, opts.max_depth));

    RankedRun fused = fuse(runs, spec);
    if (!opts.run_tag.empty()) fused.run_tag = opts.run_tag;
    validate_run(fused, spec.depth);
    write_output(opts.output, write_run(fused));
    return 0;
}

// ------------------------------------------------------------------ rerank

struct RerankOpts {
    std::string base_path;
    std::string scorer_path;
    std::string output = "-";
    std::string run_tag;
    std::size_t depth = kDefaultMaxDepth;
    std::size_t max_depth = kDefaultMaxDepth;
};

int run_rerank(const RerankOpts& opts) {
    RankedRun base = load_run(opts.base_path, std::nullopt, opts.max_depth);
    RankedRun scorer = load_run(opts.scorer_path, std::nullopt, opts.max_depth);
    RankedRun out = rerank(base, scorer, opts.depth);
    if (!opts.run_tag.empty()) out.run_tag = opts.run_tag;
    validate_run(out, opts.depth);
    write_output(opts.output, write_run(out));
    return 0;
}

// -------------------------------------------------------------------- tune

struct TuneOpts {
    std::string dense_path;
    std::string structure_path;
    std::string qrels_path;
    std::string output;
    std::string grid = "0.1:0.9:0.1";
    std::string objective = kNdcgPrime;
    std::string profile = "arqmath";
    std::string normalization = "minmax";
    std::optional<int> threshold;
    unsigned folds = 5;
    std::size_t depth = kDefaultMaxDepth;
    std::size_t max_depth = kDefaultMaxDepth;
};

int run_tune(const TuneOpts& opts) {
    CVConfig cv;
    cv.folds = opts.folds;
    cv.grid = parse_grid(opts.grid);
    cv.objective = opts.objective;
    cv.normalization = parse_normalization(opts.normalization);
    cv.depth = opts.depth;

    RankedRun dense = load_run(opts.dense_path, std::nullopt, opts.max_depth);
    RankedRun structure = load_run(opts.structure_path, std::nullopt, opts.max_depth);
    JudgmentSet judgments =
        load_qrels(opts.qrels_path, resolve_threshold(opts.profile, opts.threshold));

    CVResult result = tune_and_fuse(dense, structure, judgments, cv);
    validate_run(result.fused_run, cv.depth);
    write_output(opts.output, write_run(result.fused_run));

    std::string report;
    for (const FoldChoice& fold : result.per_fold) {
        report += std::to_string(fold.fold);
        report += ' ';
        report += format_double(fold.alpha, "%g");
        report += ' ';
        report += format_double(fold.heldout_objective, "%.6f");
        report += '\n';
    }
    report += "concatenated " + result.objective + ' ' +
              format_double(result.objective_concatenated, "%.6f") + '\n';
    report += "fold-mean " + result.objective + ' ' +
              format_double(result.objective_fold_mean, "%.6f") + '\n';
    std::cout << report;
    return 0;
}

// -------------------------------------------------------------------- eval

struct EvalOpts {
    std::string run_path;
    std::string qrels_path;
    std::string groups_path;
    std::string profile = "arqmath";
    std::optional<int> threshold;
    bool kv = false;
    std::size_t k = 10;
    std::size_t depth = kDefaultMaxDepth;
    std::size_t max_depth = kDefaultMaxDepth;
};

int run_eval(const EvalOpts& opts) {
    RankedRun run = load_run(opts.run_path, std::nullopt, opts.max_depth);
    JudgmentSet judgments =
        load_qrels(opts.qrels_path, resolve_threshold(opts.profile, opts.threshold));
    MetricReport report = evaluate(run, judgments, opts.k, opts.depth);

    const std::string p_key = p_prime_key(opts.k);
    const std::vector<std::string> order = {kNdcgPrime, kMapPrime, p_key, kBpref};

    if (!report.unjudged_topics.empty()) {
        std::cerr << "warning: " << report.unjudged_topics.size()
                  << " run topic(s) without judgments:";
        for (const std::string& topic : report.unjudged_topics) std::cerr << ' ' << topic;
        std::cerr << '\n';
    }

    if (opts.kv) {
        std::string out;
        for (const auto& [topic, row] : report.per_topic)
            for (const std::string& name : order)
                out += name + ' ' + topic + ' ' + format_double(row.at(name), "%.17g") + '\n';
        for (const std::string& name : order)
            out += name + " mean " + format_double(report.means.at(name), "%.17g") + '\n';
        out += "judged_per_mille mean " + format_double(report.judged_per_mille, "%.17g") + '\n';
        std::cout << out;
        return 0;
    }

    std::ostringstream out;
    out << "run: " << run.run_tag << "  topics: " << report.per_topic.size() << '\n';
    char line[256];
    std::snprintf(line, sizeof line, "%-12s %-8s %-8s %-8s %-8s %s\n", "", "NDCG'", "MAP'",
                  ("P'@" + std::to_string(opts.k)).c_str(), "BPref", "Judged‰");
    out << line;
    std::snprintf(line, sizeof line, "%-12s %-8.4f %-8.4f %-8.4f %-8.4f %.1f\n", "all",
                  report.means.at(kNdcgPrime), report.means.at(kMapPrime),
                  report.means.at(p_key), report.means.at(kBpref), report.judged_per_mille);
    out << line;

    if (!opts.groups_path.empty()) {
        TopicGroups groups = in_file(opts.groups_path, [&] {
            return parse_groups(read_input(opts.groups_path));
        });
        for (const auto& [label, row] : aggregate_by_group(report, groups)) {
            std::snprintf(line, sizeof line, "%-12s %-8.4f %-8.4f %-8.4f %-8.4f\n", label.c_str(),
                          row.at(kNdcgPrime), row.at(kMapPrime), row.at(p_key), row.at(kBpref));
            out << line;
        }
    }
    std::cout << out.str();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"math-aware retrieval fusion and evaluation toolkit"};
    app.require_subcommand(1);

    TokenizeOpts tokenize_opts;
    auto* tokenize_cmd =
        app.add_subcommand("tokenize", "Pre-tokenize text with inline $...$ math regions");
    tokenize_cmd->add_option("input", tokenize_opts.input, "input file ('-' for stdin)");
    tokenize_cmd->add_option("-o,--output", tokenize_opts.output, "output file ('-' for stdout)");
    tokenize_cmd->add_option("--table", tokenize_opts.table_path,
                             "custom synonym table (default: builtin)");

    ScoreOpts score_opts;
    auto* score_cmd = app.add_subcommand("score", "Score tokenized passages against queries");
    score_cmd->add_option("queries", score_opts.query_path, "query file: 'topic_id token ...'")
        ->required();
    score_cmd->add_option("passages", score_opts.passage_path, "passage file: 'doc_id token ...'")
        ->required();
    score_cmd->add_option("--table", score_opts.table_path,
                          "embedding table file (default: deterministic init)");
    score_cmd->add_option("--dim", score_opts.dim, "embedding dim when no table is given")
        ->capture_default_str();
    score_cmd->add_option("--mode", score_opts.mode, "dpr or colbert")->capture_default_str();
    score_cmd->add_option("--metric", score_opts.metric, "dot or neg-l2 (colbert mode)")
        ->capture_default_str();
    score_cmd->add_option("--depth", score_opts.depth, "documents kept per topic")
        ->capture_default_str();
    score_cmd->add_option("--threads", score_opts.threads, "scoring threads (0 = hardware)")
        ->capture_default_str();
    score_cmd->add_option("--run-tag", score_opts.run_tag, "run tag (default: mode name)");
    score_cmd->add_option("-o,--output", score_opts.output, "output run file");

    FuseOpts fuse_opts;
    auto* fuse_cmd = app.add_subcommand("fuse", "Fuse ranked runs into one");
    fuse_cmd->add_option("runs", fuse_opts.run_paths, "input run files (2 or more)")
        ->required()
        ->expected(2, -1);
    fuse_cmd->add_option("--method", fuse_opts.method,
                         "linear, borda, combsum, isr, logisr, rrf")
        ->capture_default_str();
    fuse_cmd->add_option("--alpha", fuse_opts.alpha, "linear weight of the first run")
        ->capture_default_str();
    fuse_cmd->add_option("--rrf-k", fuse_opts.rrf_k, "rrf constant")->capture_default_str();
    fuse_cmd->add_option("--normalization", fuse_opts.normalization, "minmax or none")
        ->capture_default_str();
    fuse_cmd->add_option("--depth", fuse_opts.depth, "documents kept per topic")
        ->capture_default_str();
    fuse_cmd->add_option("--max-depth", fuse_opts.max_depth, "input validation depth")
        ->capture_default_str();
    fuse_cmd->add_option("--run-tag", fuse_opts.run_tag, "run tag (default: method name)");
    fuse_cmd->add_option("-o,--output", fuse_opts.output, "output run file");

    RerankOpts rerank_opts;
    auto* rerank_cmd = app.add_subcommand("rerank", "Reorder a base run by another run's scores");
    rerank_cmd->add_option("base", rerank_opts.base_path, "base run file")->required();
    rerank_cmd->add_option("scorer", rerank_opts.scorer_path, "scoring run file")->required();
    rerank_cmd->add_option("--depth", rerank_opts.depth, "documents kept per topic")
        ->capture_default_str();
    rerank_cmd->add_option("--max-depth", rerank_opts.max_depth, "input validation depth")
        ->capture_default_str();
    rerank_cmd->add_option("--run-tag", rerank_opts.run_tag, "run tag (default: rerank)");
    rerank_cmd->add_option("-o,--output", rerank_opts.output, "output run file");

    TuneOpts tune_opts;
    auto* tune_cmd = app.add_subcommand(
        "tune", "Cross-validate the linear fusion weight and emit the held-out fusion");
    tune_cmd->add_option("dense", tune_opts.dense_path, "first run file (weight alpha)")
        ->required();
    tune_cmd->add_option("structure", tune_opts.structure_path,
                         "second run file (weight 1 - alpha)")
        ->required();
    tune_cmd->add_option("qrels", tune_opts.qrels_path, "relevance judgments")->required();
    tune_cmd->add_option("--folds", tune_opts.folds, "cross-validation folds")
        ->capture_default_str();
    tune_cmd->add_option("--grid", tune_opts.grid, "alpha grid: lo:hi:step or v1,v2,...")
        ->capture_default_str();
    tune_cmd->add_option("--objective", tune_opts.objective,
                         "ndcg_prime, map_prime, p_prime@K, bpref")
        ->capture_default_str();
    tune_cmd->add_option("--profile", tune_opts.profile,
                         "binarization profile: arqmath, ntcir-full, ntcir-partial")
        ->capture_default_str();
    tune_cmd->add_option("--threshold", tune_opts.threshold,
                         "custom binary relevance threshold (overrides --profile)");
    tune_cmd->add_option("--normalization", tune_opts.normalization, "minmax or none")
        ->capture_default_str();
    tune_cmd->add_option("--depth", tune_opts.depth, "documents kept per topic")
        ->capture_default_str();
    tune_cmd->add_option("--max-depth", tune_opts.max_depth, "input validation depth")
        ->capture_default_str();
    tune_cmd->add_option("-o,--output", tune_opts.output, "output fused run file")->required();

    EvalOpts eval_opts;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a run against judgments");
    eval_cmd->add_option("run", eval_opts.run_path, "run file")->required();
    eval_cmd->add_option("qrels", eval_opts.qrels_path, "relevance judgments")->required();
    eval_cmd->add_option("--profile", eval_opts.profile,
                         "binarization profile: arqmath, ntcir-full, ntcir-partial")
        ->capture_default_str();
    eval_cmd->add_option("--threshold", eval_opts.threshold,
                         "custom binary relevance threshold (overrides --profile)");
    eval_cmd->add_option("--k", eval_opts.k, "precision cutoff")->capture_default_str();
    eval_cmd->add_option("--depth", eval_opts.depth, "judged-rate depth")->capture_default_str();
    eval_cmd->add_option("--groups", eval_opts.groups_path,
                         "topic groups file: 'topic_id group' per line");
    eval_cmd->add_option("--max-depth", eval_opts.max_depth, "input validation depth")
        ->capture_default_str();
    eval_cmd->add_flag("--kv", eval_opts.kv, "machine-readable 'metric topic value' output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (tokenize_cmd->parsed()) return run_tokenize(tokenize_opts);
        if (score_cmd->parsed()) return run_score(score_opts);
        if (fuse_cmd->parsed()) return run_fuse(fuse_opts);
        if (rerank_cmd->parsed()) return run_rerank(rerank_opts);
        if (tune_cmd->parsed()) return run_tune(tune_opts);
        if (eval_cmd->parsed()) return run_eval(eval_opts);
    } catch (const std::exception& e) {
        std::cerr << "mathfuse: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
