#include "mathfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace mathfuse {

namespace {

std::set<std::string> topic_union(const std::vector<const RankedRun*>& runs) {
    std::set<std::string> topics;
    for (const RankedRun* run : runs)
        for (const auto& [topic, entry] : run->topics) topics.insert(topic);
    return topics;
}

const std::vector<ScoredDoc>* topic_entry(const RankedRun& run, const std::string& topic) {
    auto it = run.topics.find(topic);
    return it == run.topics.end() ? nullptr : &it->second;
}

std::map<std::string, double> source_scores(const std::vector<ScoredDoc>& entry,
                                            Normalization normalization) {
    std::map<std::string, double> scores;
    if (normalization == Normalization::MinMax) {
        for (const ScoredDoc& doc : minmax_normalize(entry)) scores[doc.doc_id] = doc.score;
    } else {
        for (const ScoredDoc& doc : entry) scores[doc.doc_id] = doc.score;
    }
    return scores;
}

// Sort combined scores into a topic entry: descending score, ties by
// ascending doc_id, ranks 1..n, cut to depth.
std::vector<ScoredDoc> to_entry(const std::map<std::string, double>& combined,
                                std::size_t depth) {
    std::vector<ScoredDoc> entry;
    entry.reserve(combined.size());
    for (const auto& [doc_id, score] : combined) entry.push_back({doc_id, 0, score});
    std::stable_sort(entry.begin(), entry.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        return a.score > b.score;
    });
    if (entry.size() > depth) entry.resize(depth);
    for (std::size_t i = 0; i < entry.size(); ++i) entry[i].rank = i + 1;
    return entry;
}

void check_depth(std::size_t depth) {
    if (depth == 0) throw std::invalid_argument("fusion depth must be positive");
}

void check_arity(const std::vector<RankedRun>& runs) {
    if (runs.size() < 2) throw std::invalid_argument("fusion requires at least two runs");
}

// Shared frame of the rank-profile methods: combine per-run ranks of every
// union document into one score.
template <typename Combine>
RankedRun rank_fuse(const std::vector<RankedRun>& runs, std::size_t depth, std::string tag,
                    Combine&& combine) {
    check_arity(runs);
    check_depth(depth);
    std::vector<const RankedRun*> ptrs;
    ptrs.reserve(runs.size());
    for (const RankedRun& run : runs) ptrs.push_back(&run);

    RankedRun fused;
    fused.run_tag = std::move(tag);
    for (const std::string& topic : topic_union(ptrs)) {
        // doc -> ranks it holds in the runs that retrieved it
        std::map<std::string, std::vector<std::size_t>> profiles;
        for (const RankedRun& run : runs) {
            if (const auto* entry = topic_entry(run, topic))
                for (const ScoredDoc& doc : *entry) profiles[doc.doc_id].push_back(doc.rank);
        }
        std::size_t pool = profiles.size();
        std::map<std::string, double> combined;
        for (const auto& [doc_id, ranks] : profiles) combined[doc_id] = combine(ranks, pool);
        fused.topics[topic] = to_entry(combined, depth);
    }
    return fused;
}

} // namespace

std::string method_name(FusionMethod method) {
    switch (method) {
        case FusionMethod::Linear: return "linear";
        case FusionMethod::Borda: return "borda";
        case FusionMethod::CombSum: return "combsum";
        case FusionMethod::Isr: return "isr";
        case FusionMethod::LogIsr: return "logisr";
        case FusionMethod::Rrf: return "rrf";
        case FusionMethod::Rerank: return "rerank";
    }
    throw std::invalid_argument("unknown fusion method");
}

std::vector<ScoredDoc> minmax_normalize(std::vector<ScoredDoc> entry) {
    if (entry.empty()) return entry;
    auto [lo, hi] = std::minmax_element(entry.begin(), entry.end(),
                                        [](const ScoredDoc& a, const ScoredDoc& b) {
                                            return a.score < b.score;
                                        });
    double min = lo->score;
    double max = hi->score;
    if (max > min) {
        double span = max - min;
        for (ScoredDoc& doc : entry) doc.score = (doc.score - min) / span;
    } else {
        for (ScoredDoc& doc : entry) doc.score = 1.0;
    }
    return entry;
}

RankedRun linear_fuse(const RankedRun& dense, const RankedRun& structure, double alpha,
                      Normalization normalization, std::size_t depth) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha must lie in [0,1]");
    check_depth(depth);

    RankedRun fused;
    fused.run_tag = method_name(FusionMethod::Linear);
    for (const std::string& topic : topic_union({&dense, &structure})) {
        std::map<std::string, double> from_dense;
        std::map<std::string, double> from_structure;
        if (const auto* entry = topic_entry(dense, topic))
            from_dense = source_scores(*entry, normalization);
        if (const auto* entry = topic_entry(structure, topic))
            from_structure = source_scores(*entry, normalization);

        std::map<std::string, double> combined;
        for (const auto& [doc_id, score] : from_dense) combined[doc_id] += alpha * score;
        for (const auto& [doc_id, score] : from_structure)
            combined[doc_id] += (1.0 - alpha) * score;
        fused.topics[topic] = to_entry(combined, depth);
    }
    return fused;
}

RankedRun rrf_fuse(const std::vector<RankedRun>& runs, unsigned k, std::size_t depth) {
    if (k < 1) throw std::invalid_argument("rrf k must be positive");
    return rank_fuse(runs, depth, method_name(FusionMethod::Rrf),
                     [k](const std::vector<std::size_t>& ranks, std::size_t) {
                         double score = 0.0;
                         for (std::size_t rank : ranks)
                             score += 1.0 / (static_cast<double>(k) + static_cast<double>(rank));
                         return score;
                     });
}

RankedRun borda_fuse(const std::vector<RankedRun>& runs, std::size_t depth) {
    return rank_fuse(runs, depth, method_name(FusionMethod::Borda),
                     [](const std::vector<std::size_t>& ranks, std::size_t pool) {
                         double score = 0.0;
                         for (std::size_t rank : ranks)
                             score += static_cast<double>(pool) - static_cast<double>(rank) + 1.0;
                         return score;
                     });
}

RankedRun combsum_fuse(const std::vector<RankedRun>& runs, Normalization normalization,
                       std::size_t depth) {
    check_arity(runs);
    check_depth(depth);
    std::vector<const RankedRun*> ptrs;
    ptrs.reserve(runs.size());
    for (const RankedRun& run : runs) ptrs.push_back(&run);

    RankedRun fused;
    fused.run_tag = method_name(FusionMethod::CombSum);
    for (const std::string& topic : topic_union(ptrs)) {
        std::map<std::string, double> combined;
        for (const RankedRun& run : runs) {
            if (const auto* entry = topic_entry(run, topic))
                for (const auto& [doc_id, score] : source_scores(*entry, normalization))
                    combined[doc_id] += score;
        }
        fused.topics[topic] = to_entry(combined, depth);
    }
    return fused;
}

RankedRun isr_fuse(const std::vector<RankedRun>& runs, std::size_t depth) {
    return rank_fuse(runs, depth, method_name(FusionMethod::Isr),
                     [](const std::vector<std::size_t>& ranks, std::size_t) {
                         double inv_sq = 0.0;
                         for (std::size_t rank : ranks) {
                             double r = static_cast<double>(rank);
                             inv_sq += 1.0 / (r * r);
                         }
                         return static_cast<double>(ranks.size()) * inv_sq;
                     });
}

RankedRun log_isr_fuse(const std::vector<RankedRun>& runs, std::size_t depth) {
    return rank_fuse(runs, depth, method_name(FusionMethod::LogIsr),
                     [](const std::vector<std::size_t>& ranks, std::size_t) {
                         double inv_sq = 0.0;
                         for (std::size_t rank : ranks) {
                             double r = static_cast<double>(rank);
                             inv_sq += 1.0 / (r * r);
                         }
                         return std::log(1.0 + static_cast<double>(ranks.size())) * inv_sq;
                     });
}

RankedRun rerank(const RankedRun& base, const RankedRun& scorer, std::size_t depth) {
    check_depth(depth);
    RankedRun out;
    out.run_tag = method_name(FusionMethod::Rerank);
    for (const auto& [topic, entry] : base.topics) {
        std::map<std::string, double> scores;
        if (const auto* scored = topic_entry(scorer, topic))
            for (const ScoredDoc& doc : *scored) scores[doc.doc_id] = doc.score;
        std::map<std::string, double> combined;
        for (const ScoredDoc& doc : entry) {
            auto it = scores.find(doc.doc_id);
            combined[doc.doc_id] = it == scores.end() ? 0.0 : it->second;
        }
        out.topics[topic] = to_entry(combined, depth);
    }
    return out;
}

RankedRun fuse(const std::vector<RankedRun>& runs, const FusionSpec& spec) {
    switch (spec.method) {
        case FusionMethod::Linear:
            if (runs.size() != 2)
                throw std::invalid_argument("linear fusion takes exactly two runs");
            return linear_fuse(runs[0], runs[1], spec.alpha, spec.normalization, spec.depth);
        case FusionMethod::Borda: return borda_fuse(runs, spec.depth);
        case FusionMethod::CombSum: return combsum_fuse(runs, spec.normalization, spec.depth);
        case FusionMethod::Isr: return isr_fuse(runs, spec.depth);
        case FusionMethod::LogIsr: return log_isr_fuse(runs, spec.depth);
        case FusionMethod::Rrf: return rrf_fuse(runs, spec.rrf_k, spec.depth);
        case FusionMethod::Rerank:
            if (runs.size() != 2)
                throw std::invalid_argument("rerank takes exactly two runs (base, scorer)");
            return rerank(runs[0], runs[1], spec.depth);
    }
    throw std::invalid_argument("unknown fusion method");
}

} // namespace mathfuse
