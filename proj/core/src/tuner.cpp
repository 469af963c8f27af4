#include "mathfuse/tuner.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <stdexcept>
#include <string_view>

namespace mathfuse {

namespace {

using TopicObjective = std::function<double(const std::vector<ScoredDoc>&, const JudgmentSet&,
                                            const std::string&)>;

TopicObjective make_objective(const std::string& name) {
    if (name == kNdcgPrime) return ndcg_prime_topic;
    if (name == kMapPrime) return map_prime_topic;
    if (name == kBpref) return bpref_topic;
    constexpr std::string_view prefix = "p_prime@";
    if (name.size() > prefix.size() && std::string_view(name).substr(0, prefix.size()) == prefix) {
        std::string_view digits = std::string_view(name).substr(prefix.size());
        std::size_t k = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
        if (ec == std::errc{} && ptr == digits.data() + digits.size() && k > 0)
            return [k](const std::vector<ScoredDoc>& entry, const JudgmentSet& judgments,
                       const std::string& topic) {
                return p_at_k_prime_topic(entry, judgments, topic, k);
            };
    }
    throw std::invalid_argument("unknown objective metric: " + name);
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("alpha grid must be non-empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0))
            throw std::invalid_argument("alpha grid values must lie in [0,1]");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw std::invalid_argument("alpha grid must be strictly increasing");
    }
}

RankedRun restrict_topics(const RankedRun& run, const std::set<std::string>& topics) {
    RankedRun out;
    out.run_tag = run.run_tag;
    for (const auto& [topic, entry] : run.topics)
        if (topics.count(topic)) out.topics.emplace(topic, entry);
    return out;
}

} // namespace

std::vector<double> default_alpha_grid() {
    std::vector<double> grid;
    grid.reserve(9);
    for (int i = 1; i <= 9; ++i) grid.push_back(static_cast<double>(i) / 10.0);
    return grid;
}

std::map<std::string, unsigned> assign_folds(const std::set<std::string>& topic_ids,
                                             unsigned folds) {
    if (folds < 2) throw std::invalid_argument("cross validation needs at least 2 folds");
    if (topic_ids.size() < folds)
        throw ValidationError("fewer topics (" + std::to_string(topic_ids.size()) +
                              ") than folds (" + std::to_string(folds) + ")");
    std::map<std::string, unsigned> assignment;
    unsigned next = 0;
    for (const std::string& topic : topic_ids) { // std::set iterates in sorted order
        assignment[topic] = next;
        next = (next + 1) % folds;
    }
    return assignment;
}

CVResult tune_and_fuse(const RankedRun& dense, const RankedRun& structure,
                       const JudgmentSet& judgments, const CVConfig& cv) {
    check_grid(cv.grid);
    TopicObjective objective = make_objective(cv.objective);

    std::set<std::string> evaluated;
    std::size_t common_judged = 0;
    for (const auto& [topic, grades] : judgments.grades) {
        bool in_dense = dense.topics.count(topic) > 0;
        bool in_structure = structure.topics.count(topic) > 0;
        if (in_dense || in_structure) evaluated.insert(topic);
        if (in_dense && in_structure) ++common_judged;
    }
    if (common_judged < cv.folds)
        throw ValidationError("runs share only " + std::to_string(common_judged) +
                              " judged topics; need at least " + std::to_string(cv.folds));

    auto fold_of = assign_folds(evaluated, cv.folds);

    RankedRun dense_eval = restrict_topics(dense, evaluated);
    RankedRun structure_eval = restrict_topics(structure, evaluated);

    // Per-topic objective for every grid point, computed once.
    std::vector<RankedRun> fused_at;
    std::vector<std::map<std::string, double>> objective_at;
    fused_at.reserve(cv.grid.size());
    objective_at.reserve(cv.grid.size());
    for (double alpha : cv.grid) {
        RankedRun fused =
            linear_fuse(dense_eval, structure_eval, alpha, cv.normalization, cv.depth);
        std::map<std::string, double> per_topic;
        for (const auto& [topic, entry] : fused.topics)
            per_topic[topic] = objective(entry, judgments, topic);
        fused_at.push_back(std::move(fused));
        objective_at.push_back(std::move(per_topic));
    }

    CVResult result;
    result.objective = cv.objective;
    result.fused_run.run_tag = "linear-cv";

    double fold_mean_total = 0.0;
    double concat_total = 0.0;
    for (unsigned fold = 0; fold < cv.folds; ++fold) {
        std::size_t best_idx = 0;
        double best_mean = -1.0;
        for (std::size_t g = 0; g < cv.grid.size(); ++g) {
            double total = 0.0;
            std::size_t n = 0;
            for (const auto& [topic, f] : fold_of) {
                if (f == fold) continue; // training topics only
                total += objective_at[g].at(topic);
                ++n;
            }
            double mean = n == 0 ? 0.0 : total / static_cast<double>(n);
            if (mean > best_mean) { // strict: ties keep the smallest alpha
                best_mean = mean;
                best_idx = g;
            }
        }

        FoldChoice choice;
        choice.fold = fold;
        choice.alpha = cv.grid[best_idx];
        double heldout_total = 0.0;
        for (const auto& [topic, f] : fold_of) {
            if (f != fold) continue;
            choice.heldout_topics.push_back(topic);
            result.fused_run.topics[topic] = fused_at[best_idx].topics.at(topic);
            double v = objective_at[best_idx].at(topic);
            heldout_total += v;
            concat_total += v;
        }
        choice.heldout_objective =
            heldout_total / static_cast<double>(choice.heldout_topics.size());
        fold_mean_total += choice.heldout_objective;
        result.per_fold.push_back(std::move(choice));
    }

    result.objective_fold_mean = fold_mean_total / static_cast<double>(cv.folds);
    result.objective_concatenated = concat_total / static_cast<double>(evaluated.size());
    return result;
}

} // namespace mathfuse
