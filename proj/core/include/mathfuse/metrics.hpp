#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mathfuse/run.hpp"

namespace mathfuse {

/// Evaluation profile presets: the binary threshold applied to graded
/// judgments. Arqmath collapses High and Medium (grade >= 2); the NTCIR
/// presets are full (>= 2) and partial (>= 1) relevance.
enum class EvalProfile { Arqmath, NtcirFull, NtcirPartial };
int profile_threshold(EvalProfile profile);

/// Metric keys used in reports and machine-readable output.
inline constexpr const char* kNdcgPrime = "ndcg_prime";
inline constexpr const char* kMapPrime = "map_prime";
inline constexpr const char* kBpref = "bpref";
std::string p_prime_key(std::size_t k); // "p_prime@10"

/// Per-topic values of one metric plus their arithmetic mean over the
/// evaluated topics (union of run and qrels topics).
struct MetricValues {
    std::map<std::string, double> per_topic;
    double mean = 0.0;
};

/// topic_id -> group label (category, difficulty, dependency, ...).
using TopicGroups = std::map<std::string, std::string>;

struct MetricReport {
    std::map<std::string, std::map<std::string, double>> per_topic; // topic -> metric -> value
    std::map<std::string, double> means;
    double judged_per_mille = 0.0;
    std::vector<std::string> unjudged_topics; // run topics with no judgments at all
};

/// Removes unjudged documents from one topic's ranked list, preserving
/// order and reassigning ranks 1..m (the "prime" transformation).
std::vector<ScoredDoc> prime_filter(const std::vector<ScoredDoc>& entry,
                                    const JudgmentSet& judgments, const std::string& topic);

/// NDCG on the prime-filtered list with linear gain grade / log2(rank+1);
/// the ideal ranking uses every judged doc of the topic. Topics whose
/// judged grades are all zero score 0.
double ndcg_prime_topic(const std::vector<ScoredDoc>& entry, const JudgmentSet& judgments,
                        const std::string& topic);

/// Average precision on the prime-filtered, binarized list; the denominator
/// counts all judged relevant docs, retrieved or not.
double map_prime_topic(const std::vector<ScoredDoc>& entry, const JudgmentSet& judgments,
                       const std::string& topic);

/// Binary precision over the first k prime-filtered positions, denominator
/// fixed at k.
double p_at_k_prime_topic(const std::vector<ScoredDoc>& entry, const JudgmentSet& judgments,
                          const std::string& topic, std::size_t k = 10);

/// trec_eval bpref: with R judged relevant and N judged non-relevant,
/// (1/R) * sum over retrieved relevant of 1 - min(#non-relevant above, R) / min(R, N).
/// Topics with R = 0 or N = 0 score 0. Depends only on the judged
/// subsequence's order, never on scores.
double bpref_topic(const std::vector<ScoredDoc>& entry, const JudgmentSet& judgments,
                   const std::string& topic);

/// Run-level wrappers: evaluate every topic in the union of run and qrels
/// topics (topics missing from the run score 0).
MetricValues ndcg_prime(const RankedRun& run, const JudgmentSet& judgments);
MetricValues map_prime(const RankedRun& run, const JudgmentSet& judgments);
MetricValues p_at_k_prime(const RankedRun& run, const JudgmentSet& judgments, std::size_t k = 10);
MetricValues bpref(const RankedRun& run, const JudgmentSet& judgments);

/// 1000 * judged/retrieved within `depth`, averaged over topics that
/// retrieved at least one document.
double judged_per_mille(const RankedRun& run, const JudgmentSet& judgments,
                        std::size_t depth = kDefaultMaxDepth);

/// Bundles all metrics over the union of run and qrels topics. Run topics
/// without any judgments contribute 0 everywhere and are listed in
/// unjudged_topics.
MetricReport evaluate(const RankedRun& run, const JudgmentSet& judgments, std::size_t k = 10,
                      std::size_t judged_depth = kDefaultMaxDepth);

/// Mean per-topic metrics within each group label; topics missing from
/// `groups` fall into "ungrouped".
std::map<std::string, std::map<std::string, double>> aggregate_by_group(
    const MetricReport& report, const TopicGroups& groups);

/// Parses a groups file: "topic_id group" per line, '#' comments.
TopicGroups parse_groups(std::string_view text);

} // namespace mathfuse
