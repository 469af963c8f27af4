#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mathfuse/fusion.hpp"
#include "mathfuse/metrics.hpp"
#include "mathfuse/run.hpp"

namespace mathfuse {

/// The 0.1 .. 0.9 grid in steps of 0.1.
std::vector<double> default_alpha_grid();

struct CVConfig {
    unsigned folds = 5;
    std::vector<double> grid = default_alpha_grid(); // strictly increasing, within [0,1]
    std::string objective = kNdcgPrime;
    Normalization normalization = Normalization::MinMax;
    std::size_t depth = kDefaultMaxDepth;
};

struct FoldChoice {
    unsigned fold = 0;
    double alpha = 0.0;
    std::vector<std::string> heldout_topics;
    double heldout_objective = 0.0; // mean objective over the held-out topics
};

struct CVResult {
    std::vector<FoldChoice> per_fold;
    RankedRun fused_run; // all held-out fused topics, assembled
    std::string objective;
    double objective_concatenated = 0.0; // mean objective over the assembled run's topics
    double objective_fold_mean = 0.0;    // mean of the per-fold held-out objectives
};

/// Deterministic fold assignment: topics sorted lexicographically, dealt
/// round-robin to folds 0..folds-1. Throws ValidationError when there are
/// fewer topics than folds.
std::map<std::string, unsigned> assign_folds(const std::set<std::string>& topic_ids,
                                             unsigned folds);

/// Cross-validated grid search for the linear interpolation weight. For
/// each fold the alpha maximizing the mean objective over the training
/// topics is chosen (ties break to the smallest alpha) and applied to the
/// held-out topics; the held-out fusions are assembled into one run (tag
/// "linear-cv"). Topics evaluated are those judged and present in either
/// run; the runs must share at least `folds` judged topics.
CVResult tune_and_fuse(const RankedRun& dense, const RankedRun& structure,
                       const JudgmentSet& judgments, const CVConfig& cv = {});

} // namespace mathfuse
