#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mathfuse/run.hpp"

namespace mathfuse {

enum class FusionMethod { Linear, Borda, CombSum, Isr, LogIsr, Rrf, Rerank };
enum class Normalization { MinMax, None };

inline constexpr unsigned kDefaultRrfK = 60;

struct FusionSpec {
    FusionMethod method = FusionMethod::Linear;
    double alpha = 0.5; // Linear only
    unsigned rrf_k = kDefaultRrfK;
    Normalization normalization = Normalization::MinMax;
    std::size_t depth = kDefaultMaxDepth;
};

/// Min-max rescales one topic's scores into [0,1], preserving order. When
/// every score is equal the whole list maps to 1.0, so retrieved documents
/// still outscore absent ones (which fusion treats as 0).
std::vector<ScoredDoc> minmax_normalize(std::vector<ScoredDoc> entry);

/// Convex combination alpha * dense + (1 - alpha) * structure over the
/// per-topic union of candidates. Each source list is normalized on its own
/// before the union; a document missing from one source contributes 0 from
/// that source.
RankedRun linear_fuse(const RankedRun& dense, const RankedRun& structure, double alpha,
                      Normalization normalization = Normalization::MinMax,
                      std::size_t depth = kDefaultMaxDepth);

/// score(d) = sum over runs containing d of 1 / (k + rank).
RankedRun rrf_fuse(const std::vector<RankedRun>& runs, unsigned k = kDefaultRrfK,
                   std::size_t depth = kDefaultMaxDepth);

/// Each run awards N - rank + 1 points (N = per-topic union pool size) to
/// the documents it retrieved, 0 to the rest.
RankedRun borda_fuse(const std::vector<RankedRun>& runs, std::size_t depth = kDefaultMaxDepth);

/// score(d) = sum of per-run normalized scores (missing contributes 0).
RankedRun combsum_fuse(const std::vector<RankedRun>& runs,
                       Normalization normalization = Normalization::MinMax,
                       std::size_t depth = kDefaultMaxDepth);

/// ISR: score(d) = n(d) * sum 1/rank^2 over the n(d) runs containing d.
RankedRun isr_fuse(const std::vector<RankedRun>& runs, std::size_t depth = kDefaultMaxDepth);

/// LogISR: score(d) = log(1 + n(d)) * sum 1/rank^2 (natural log).
RankedRun log_isr_fuse(const std::vector<RankedRun>& runs, std::size_t depth = kDefaultMaxDepth);

/// Reorders each base topic by the scorer run's raw scores. Candidates are
/// exactly the base run's documents; documents the scorer does not cover
/// score 0. Scorer-only topics and documents are ignored.
RankedRun rerank(const RankedRun& base, const RankedRun& scorer,
                 std::size_t depth = kDefaultMaxDepth);

/// Dispatch on spec.method. Linear and Rerank require exactly two runs
/// (dense/base first); the rank-based methods require at least two.
RankedRun fuse(const std::vector<RankedRun>& runs, const FusionSpec& spec);

/// Lowercase method name, used as the default run_tag of fused output.
std::string method_name(FusionMethod method);

} // namespace mathfuse
