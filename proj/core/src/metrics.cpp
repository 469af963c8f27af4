#include "mathfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>

namespace mathfuse {

namespace {

const std::map<std::string, int>* topic_grades(const JudgmentSet& judgments,
                                               const std::string& topic) {
    auto it = judgments.grades.find(topic);
    return it == judgments.grades.end() ? nullptr : &it->second;
}

const std::vector<ScoredDoc>* run_entry(const RankedRun& run, const std::string& topic) {
    auto it = run.topics.find(topic);
    return it == run.topics.end() ? nullptr : &it->second;
}

double log2_discount(std::size_t rank) {
    return std::log2(static_cast<double>(rank) + 1.0);
}

std::set<std::string> evaluated_topics(const RankedRun& run, const JudgmentSet& judgments) {
    std::set<std::string> topics;
    for (const auto& [topic, entry] : run.topics) topics.insert(topic);
    for (const auto& [topic, grades] : judgments.grades) topics.insert(topic);
    return topics;
}

template <typename TopicFn>
MetricValues run_metric(const RankedRun& run, const JudgmentSet& judgments, TopicFn&& topic_fn) {
    static const std::vector<ScoredDoc> kEmpty;
    MetricValues values;
    double total = 0.0;
    std::set<std::string> topics = evaluated_topics(run, judgments);
    for (const std::string& topic : topics) {
        const auto* entry = run_entry(run, topic);
        double v = topic_fn(entry ? *entry : kEmpty, judgments, topic);
        values.per_topic[topic] = v;
        total += v;
    }
    values.mean = topics.empty() ? 0.0 : total / static_cast<double>(topics.size());
    return values;
}

} // namespace

int profile_threshold(EvalProfile profile) {
    switch (profile) {
        case EvalProfile::Arqmath: return 2;
        case EvalProfile::NtcirFull: return 2;
        case EvalProfile::NtcirPartial: return 1;
    }
    throw std::invalid_argument("unknown evaluation profile");
}

std::string p_prime_key(std::size_t k) {
    return "p_prime@" + std::to_string(k);
}

std::vector<ScoredDoc> prime_filter(const std::vector<ScoredDoc>& entry,
                                    const JudgmentSet& judgments, const std::string& topic) {
    std::vector<ScoredDoc> filtered;
    for (const ScoredDoc& doc : entry)
        if (judgments.judged(topic, doc.doc_id)) filtered.push_back(doc);
    for (std::size_t i = 0; i < filtered.size(); ++i) filtered[i].rank = i + 1;
    return filtered;
}

double ndcg_prime_topic(const std::vector<ScoredDoc>& entry, const JudgmentSet& judgments,
                        const std::string& topic) {
    const auto* grades = topic_grades(judgments, topic);
    if (!grades) return 0.0;

    std::vector<int> ideal;
    ideal.reserve(grades->size());
    for (const auto& [doc, grade] : *grades)
        if (grade > 0) ideal.push_back(grade);
    if (ideal.empty()) return 0.0;
    std::sort(ideal.begin(), ideal.end(), std::greater<int>());

    double idcg = 0.0;
    for (std::size_t i = 0; i < ideal.size(); ++i)
        idcg += static_cast<double>(ideal[i]) / log2_discount(i + 1);

    double dcg = 0.0;
    for (const ScoredDoc& doc : prime_filter(entry, judgments, topic))
        dcg += static_cast<double>(*judgments.grade(topic, doc.doc_id)) / log2_discount(doc.rank);
    return dcg / idcg;
}

double map_prime_topic(const std::vector<ScoredDoc>& entry, const JudgmentSet& judgments,
                       const std::string& topic) {
    const auto* grades = topic_grades(judgments, topic);
    if (!grades) return 0.0;

    std::size_t total_relevant = 0;
    for (const auto& [doc, grade] : *grades)
        if (grade >= judgments.binary_threshold) ++total_relevant;
    if (total_relevant == 0) return 0.0;

    double sum = 0.0;
    std::size_t hits = 0;
    for (const ScoredDoc& doc : prime_filter(entry, judgments, topic)) {
        if (judgments.relevant(topic, doc.doc_id)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(doc.rank);
        }
    }
    return sum / static_cast<double>(total_relevant);
}

double p_at_k_prime_topic(const std::vector<ScoredDoc>& entry, const JudgmentSet& judgments,
                          const std::string& topic, std::size_t k) {
    if (k == 0) throw std::invalid_argument("precision cutoff must be positive");
    std::size_t hits = 0;
    for (const ScoredDoc& doc : prime_filter(entry, judgments, topic)) {
        if (doc.rank > k) break;
        if (judgments.relevant(topic, doc.doc_id)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

double bpref_topic(const std::vector<ScoredDoc>& entry, const JudgmentSet& judgments,
                   const std::string& topic) {
    const auto* grades = topic_grades(judgments, topic);
    if (!grades) return 0.0;

    std::size_t relevant = 0;
    std::size_t nonrelevant = 0;
    for (const auto& [doc, grade] : *grades) {
        if (grade >= judgments.binary_threshold)
            ++relevant;
        else
            ++nonrelevant;
    }
    if (relevant == 0 || nonrelevant == 0) return 0.0;

    double r = static_cast<double>(relevant);
    double cap = static_cast<double>(std::min(relevant, nonrelevant));
    double sum = 0.0;
    std::size_t nonrel_above = 0;
    for (const ScoredDoc& doc : prime_filter(entry, judgments, topic)) {
        if (judgments.relevant(topic, doc.doc_id)) {
            double above = static_cast<double>(std::min(nonrel_above, relevant));
            sum += 1.0 - above / cap;
        } else {
            ++nonrel_above;
        }
    }
    return sum / r;
}

MetricValues ndcg_prime(const RankedRun& run, const JudgmentSet& judgments) {
    return run_metric(run, judgments, ndcg_prime_topic);
}

MetricValues map_prime(const RankedRun& run, const JudgmentSet& judgments) {
    return run_metric(run, judgments, map_prime_topic);
}

MetricValues p_at_k_prime(const RankedRun& run, const JudgmentSet& judgments, std::size_t k) {
    return run_metric(run, judgments,
                      [k](const std::vector<ScoredDoc>& entry, const JudgmentSet& j,
                          const std::string& topic) {
                          return p_at_k_prime_topic(entry, j, topic, k);
                      });
}

MetricValues bpref(const RankedRun& run, const JudgmentSet& judgments) {
    return run_metric(run, judgments, bpref_topic);
}

double judged_per_mille(const RankedRun& run, const JudgmentSet& judgments, std::size_t depth) {
    if (depth == 0) throw std::invalid_argument("judged-rate depth must be positive");
    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& [topic, entry] : run.topics) {
        std::size_t retrieved = std::min(entry.size(), depth);
        if (retrieved == 0) continue;
        std::size_t judged = 0;
        for (std::size_t i = 0; i < retrieved; ++i)
            if (judgments.judged(topic, entry[i].doc_id)) ++judged;
        total += static_cast<double>(judged) / static_cast<double>(retrieved);
        ++counted;
    }
    return counted == 0 ? 0.0 : 1000.0 * total / static_cast<double>(counted);
}

MetricReport evaluate(const RankedRun& run, const JudgmentSet& judgments, std::size_t k,
                      std::size_t judged_depth) {
    static const std::vector<ScoredDoc> kEmpty;
    MetricReport report;
    const std::string p_key = p_prime_key(k);
    report.means = {{kNdcgPrime, 0.0}, {kMapPrime, 0.0}, {p_key, 0.0}, {kBpref, 0.0}};
    std::set<std::string> topics = evaluated_topics(run, judgments);
    for (const std::string& topic : topics) {
        const auto* entry = run_entry(run, topic);
        const auto& docs = entry ? *entry : kEmpty;
        auto& row = report.per_topic[topic];
        row[kNdcgPrime] = ndcg_prime_topic(docs, judgments, topic);
        row[kMapPrime] = map_prime_topic(docs, judgments, topic);
        row[p_key] = p_at_k_prime_topic(docs, judgments, topic, k);
        row[kBpref] = bpref_topic(docs, judgments, topic);
        for (const auto& [name, value] : row) report.means[name] += value;
        if (entry && !topic_grades(judgments, topic)) report.unjudged_topics.push_back(topic);
    }
    if (!topics.empty())
        for (auto& [name, value] : report.means) value /= static_cast<double>(topics.size());
    report.judged_per_mille = judged_per_mille(run, judgments, judged_depth);
    return report;
}

std::map<std::string, std::map<std::string, double>> aggregate_by_group(
    const MetricReport& report, const TopicGroups& groups) {
    std::map<std::string, std::map<std::string, double>> totals;
    std::map<std::string, std::size_t> sizes;
    for (const auto& [topic, row] : report.per_topic) {
        auto it = groups.find(topic);
        const std::string& label = it == groups.end() ? "ungrouped" : it->second;
        for (const auto& [name, value] : row) totals[label][name] += value;
        ++sizes[label];
    }
    for (auto& [label, row] : totals) {
        double n = static_cast<double>(sizes[label]);
        for (auto& [name, value] : row) value /= n;
    }
    return totals;
}

TopicGroups parse_groups(std::string_view text) {
    TopicGroups groups;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);

        std::vector<std::string_view> fields;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
            std::size_t start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
            if (i > start) fields.push_back(line.substr(start, i - start));
        }
        if (fields.empty()) continue;
        if (fields.size() != 2)
            throw ParseError("expected 'topic_id group'", line_no);
        if (!groups.emplace(std::string(fields[0]), std::string(fields[1])).second)
            throw ParseError("duplicate topic '" + std::string(fields[0]) + "'", line_no);
    }
    return groups;
}

} // namespace mathfuse
