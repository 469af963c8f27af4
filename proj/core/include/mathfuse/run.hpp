#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mathfuse/errors.hpp"

namespace mathfuse {

/// Protocol depth for evaluation runs: at most 1000 documents per topic.
inline constexpr std::size_t kDefaultMaxDepth = 1000;

/// One entry of a per-topic ranked list.
struct ScoredDoc {
    std::string doc_id;
    std::size_t rank = 0; // 1-based
    double score = 0.0;   // finite

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// A ranked list per topic, TREC-run style. Treated as immutable after
/// construction; a validated run satisfies, per topic:
///   - doc_ids are unique,
///   - ranks are 1..n consecutive,
///   - scores are non-increasing with rank (ties permitted),
///   - the list is no longer than the configured maximum depth.
/// Topic ids are opaque strings and never re-sorted: equal-score entries
/// keep their input order.
struct RankedRun {
    std::string run_tag;
    std::map<std::string, std::vector<ScoredDoc>> topics;

    friend bool operator==(const RankedRun&, const RankedRun&) = default;
};

/// Graded relevance judgments: (topic, doc) -> integer grade >= 0.
/// A document is binary-relevant when grade >= binary_threshold.
struct JudgmentSet {
    std::map<std::string, std::map<std::string, int>> grades; // topic -> doc -> grade
    int binary_threshold = 2;

    std::optional<int> grade(const std::string& topic, const std::string& doc) const;
    bool judged(const std::string& topic, const std::string& doc) const;
    bool relevant(const std::string& topic, const std::string& doc) const;
};

/// Parses the 6-column TREC run format: topic Q0 doc_id rank score run_tag.
/// Lines are grouped by topic; within a topic, input order must match
/// ascending rank order. Blank lines are skipped. The run tag is taken from
/// `run_tag_override` when given, otherwise from the first data line.
///
/// Throws ParseError (with line number) on malformed lines and
/// ValidationError on invariant violations (duplicate doc in a topic,
/// non-consecutive ranks, increasing scores, more than `max_depth` entries
/// in one topic, non-finite score).
RankedRun parse_run(std::string_view text,
                    const std::optional<std::string>& run_tag_override = std::nullopt,
                    std::size_t max_depth = kDefaultMaxDepth);

/// Serializes a run back to the 6-column format, topics in sorted order.
/// Scores are written with `precision` significant digits (default 6).
/// Rounding is monotone, so score ordering survives a write/parse
/// round-trip; runs whose scores are representable at the chosen precision
/// round-trip to an identical structure.
std::string write_run(const RankedRun& run, int precision = 6);

/// Parses the 4-column qrels format: topic ignored doc_id grade.
/// The second column is ignored. Duplicate (topic, doc) pairs and negative
/// grades are rejected. The returned set carries the default binary
/// threshold (2); callers apply an evaluation profile to change it.
JudgmentSet parse_qrels(std::string_view text);

/// Cuts every topic list to its first `depth` entries; ranks are unchanged.
RankedRun truncate_run(const RankedRun& run, std::size_t depth);

/// Checks all RankedRun invariants, throwing ValidationError on the first
/// violation. parse_run already validates; this is for runs assembled in
/// code.
void validate_run(const RankedRun& run, std::size_t max_depth = kDefaultMaxDepth);

} // namespace mathfuse
