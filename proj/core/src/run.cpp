#include "mathfuse/run.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <unordered_set>

namespace mathfuse {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

bool parse_size(std::string_view s, std::size_t& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_int(std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

// Calls fn(line_number, line) for every line, 1-based, tolerating a missing
// trailing newline.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = (nl == std::string_view::npos)
                                    ? text.substr(pos)
                                    : text.substr(pos, nl - pos);
        ++line_no;
        if (!(nl == std::string_view::npos && line.empty())) fn(line_no, line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
}

} // namespace

std::optional<int> JudgmentSet::grade(const std::string& topic, const std::string& doc) const {
    auto t = grades.find(topic);
    if (t == grades.end()) return std::nullopt;
    auto d = t->second.find(doc);
    if (d == t->second.end()) return std::nullopt;
    return d->second;
}

bool JudgmentSet::judged(const std::string& topic, const std::string& doc) const {
    return grade(topic, doc).has_value();
}

bool JudgmentSet::relevant(const std::string& topic, const std::string& doc) const {
    auto g = grade(topic, doc);
    return g.has_value() && *g >= binary_threshold;
}

RankedRun parse_run(std::string_view text,
                    const std::optional<std::string>& run_tag_override,
                    std::size_t max_depth) {
    RankedRun run;
    if (run_tag_override) run.run_tag = *run_tag_override;
    bool tag_set = run_tag_override.has_value();

    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        auto fields = split_ws(line);
        if (fields.empty()) return; // blank line
        if (fields.size() != 6) {
            throw ParseError("expected 6 columns (topic Q0 doc rank score tag), got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        if (fields[1] != "Q0") {
            throw ParseError("expected literal \"Q0\" in column 2, got \"" +
                                 std::string(fields[1]) + "\"",
                             line_no);
        }
        std::size_t rank = 0;
        if (!parse_size(fields[3], rank)) {
            throw ParseError("unreadable rank \"" + std::string(fields[3]) + "\"", line_no);
        }
        double score = 0.0;
        if (!parse_double(fields[4], score)) {
            throw ParseError("unreadable score \"" + std::string(fields[4]) + "\"", line_no);
        }
        if (!std::isfinite(score)) {
            throw ValidationError("line " + std::to_string(line_no) + ": score is not finite");
        }
        if (!tag_set) {
            run.run_tag = std::string(fields[5]);
            tag_set = true;
        }

        std::string topic(fields[0]);
        auto& entry = run.topics[topic];
        if (rank != entry.size() + 1) {
            throw ValidationError("topic " + topic + ": expected rank " +
                                  std::to_string(entry.size() + 1) + ", got " +
                                  std::to_string(rank) + " at line " + std::to_string(line_no));
        }
        if (entry.size() >= max_depth) {
            throw ValidationError("topic " + topic + ": more than " +
                                  std::to_string(max_depth) + " documents");
        }
        if (!entry.empty() && score > entry.back().score) {
            throw ValidationError("topic " + topic + ": score increases at rank " +
                                  std::to_string(rank));
        }
        entry.push_back(ScoredDoc{std::string(fields[2]), rank, score});
    });

    // Duplicate detection in a second pass keeps the hot loop map-free.
    for (const auto& [topic, entry] : run.topics) {
        std::unordered_set<std::string_view> seen;
        seen.reserve(entry.size());
        for (const auto& doc : entry) {
            if (!seen.insert(doc.doc_id).second) {
                throw ValidationError("topic " + topic + ": duplicate document \"" +
                                      doc.doc_id + "\"");
            }
        }
    }
    return run;
}

std::string write_run(const RankedRun& run, int precision) {
    std::string out;
    char buf[64];
    for (const auto& [topic, entry] : run.topics) {
        for (const auto& doc : entry) {
            std::snprintf(buf, sizeof(buf), "%.*g", precision, doc.score);
            out += topic;
            out += " Q0 ";
            out += doc.doc_id;
            out += ' ';
            out += std::to_string(doc.rank);
            out += ' ';
            out += buf;
            out += ' ';
            out += run.run_tag;
            out += '\n';
        }
    }
    return out;
}

JudgmentSet parse_qrels(std::string_view text) {
    JudgmentSet judgments;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        auto fields = split_ws(line);
        if (fields.empty()) return;
        if (fields.size() != 4) {
            throw ParseError("expected 4 columns (topic ignored doc grade), got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        int grade = 0;
        if (!parse_int(fields[3], grade)) {
            throw ParseError("unreadable grade \"" + std::string(fields[3]) + "\"", line_no);
        }
        if (grade < 0) {
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": negative grade " + std::to_string(grade));
        }
        std::string topic(fields[0]);
        std::string doc(fields[2]);
        auto [it, inserted] = judgments.grades[topic].emplace(std::move(doc), grade);
        if (!inserted) {
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate judgment for (" +
                                  topic + ", " + it->first + ")");
        }
    });
    return judgments;
}

RankedRun truncate_run(const RankedRun& run, std::size_t depth) {
    if (depth == 0) throw ValidationError("truncation depth must be >= 1");
    RankedRun out;
    out.run_tag = run.run_tag;
    for (const auto& [topic, entry] : run.topics) {
        auto& cut = out.topics[topic];
        cut.assign(entry.begin(),
                   entry.size() > depth ? entry.begin() + static_cast<std::ptrdiff_t>(depth)
                                        : entry.end());
    }
    return out;
}

void validate_run(const RankedRun& run, std::size_t max_depth) {
    for (const auto& [topic, entry] : run.topics) {
        if (entry.size() > max_depth) {
            throw ValidationError("topic " + topic + ": more than " +
                                  std::to_string(max_depth) + " documents");
        }
        std::unordered_set<std::string_view> seen;
        seen.reserve(entry.size());
        for (std::size_t i = 0; i < entry.size(); ++i) {
            const auto& doc = entry[i];
            if (doc.rank != i + 1) {
                throw ValidationError("topic " + topic + ": expected rank " +
                                      std::to_string(i + 1) + ", got " +
                                      std::to_string(doc.rank));
            }
            if (!std::isfinite(doc.score)) {
                throw ValidationError("topic " + topic + ": score is not finite");
            }
            if (i > 0 && doc.score > entry[i - 1].score) {
                throw ValidationError("topic " + topic + ": score increases at rank " +
                                      std::to_string(doc.rank));
            }
            if (!seen.insert(doc.doc_id).second) {
                throw ValidationError("topic " + topic + ": duplicate document \"" +
                                      doc.doc_id + "\"");
            }
        }
    }
}

} // namespace mathfuse
