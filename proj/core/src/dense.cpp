#include "mathfuse/dense.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_set>

#include "mathfuse/parallel.hpp"

namespace mathfuse {

namespace {

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in [0,1) with 53 bits of mantissa.
double to_unit(uint64_t u) {
    return static_cast<double>(u >> 11) * 0x1.0p-53;
}

void check_dims(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("vector dimension mismatch: " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
}

double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double l2_norm(const Vector& a) {
    return std::sqrt(dot(a, a));
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

double parse_double_field(std::string_view field, std::size_t line_no) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value))
        throw ParseError("bad number '" + std::string(field) + "'", line_no);
    return value;
}

std::size_t parse_size_field(std::string_view field, std::size_t line_no) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError("bad count '" + std::string(field) + "'", line_no);
    return value;
}

double logsumexp(const std::vector<double>& s) {
    double m = *std::max_element(s.begin(), s.end());
    double acc = 0.0;
    for (double v : s) acc += std::exp(v - m);
    return m + std::log(acc);
}

// Candidate passages for query i, in a fixed order: own positive first,
// then own hard negative, then both passages of every other triple.
std::vector<const std::vector<std::string>*> candidates_for(const TrainingBatch& batch,
                                                            std::size_t i) {
    std::vector<const std::vector<std::string>*> out;
    out.reserve(2 * batch.size());
    out.push_back(&batch.triples[i].positive);
    out.push_back(&batch.triples[i].negative);
    for (std::size_t j = 0; j < batch.size(); ++j) {
        if (j == i) continue;
        out.push_back(&batch.triples[j].positive);
        out.push_back(&batch.triples[j].negative);
    }
    return out;
}

double pair_score(const std::vector<std::string>& query, const std::vector<std::string>& passage,
                  const ToyEncoder& encoder, LossScorer scorer) {
    if (scorer == LossScorer::PooledDot)
        return dpr_score(encoder.encode_mean(query), encoder.encode_mean(passage));
    return maxsim_score(encoder.encode_tokens(query), encoder.encode_tokens(passage),
                        Metric::Dot);
}

void check_batch(const TrainingBatch& batch) {
    if (batch.size() < 1) throw std::invalid_argument("training batch must hold at least one triple");
}

// Accumulate scale * v onto the row the token resolves to (shared [UNK]
// row for out-of-table tokens).
void add_scaled(Gradient& grad, const ToyEncoder& encoder, const std::string& token,
                const Vector& v, double scale) {
    const std::string& key =
        encoder.contains(token) ? token : std::string(ToyEncoder::kUnknownToken);
    Vector& row = grad[key];
    if (row.empty()) row.assign(encoder.dim(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) row[k] += scale * v[k];
}

} // namespace

double dpr_score(const Vector& q, const Vector& p) {
    check_dims(q, p);
    return dot(q, p);
}

double token_sim(const Vector& a, const Vector& b, Metric metric) {
    check_dims(a, b);
    if (metric == Metric::Dot) return dot(a, b);
    double na = l2_norm(a);
    double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0)
        throw std::invalid_argument("cannot normalize a zero vector");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double d = a[k] / na - b[k] / nb;
        s += d * d;
    }
    return -std::sqrt(s);
}

double maxsim_score(const TokenEmbeddings& q, const TokenEmbeddings& p, Metric metric) {
    if (q.rows.empty() || p.rows.empty())
        throw std::invalid_argument("maxsim_score requires at least one token on each side");
    if (q.dim() != p.dim())
        throw std::invalid_argument("token embedding dimension mismatch");
    double total = 0.0;
    for (const Vector& qi : q.rows) {
        double best = -std::numeric_limits<double>::infinity();
        for (const Vector& dj : p.rows) best = std::max(best, token_sim(qi, dj, metric));
        total += best;
    }
    return total;
}

Vector hash_init_vector(std::string_view token, std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("embedding dim must be positive");
    uint64_t seed = fnv1a64(token);
    double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    Vector v(dim);
    for (std::size_t k = 0; k < dim; ++k)
        v[k] = (to_unit(splitmix64(seed + k)) - 0.5) * scale;
    return v;
}

ToyEncoder::ToyEncoder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw std::invalid_argument("embedding dim must be positive");
    for (std::string_view reserved : {kUnknownToken, kQueryMarker, kPassageMarker})
        table_.emplace(std::string(reserved), hash_init_vector(reserved, dim_));
}

ToyEncoder::ToyEncoder(std::size_t dim, const std::set<std::string>& vocabulary)
    : ToyEncoder(dim) {
    for (const std::string& token : vocabulary)
        table_.emplace(token, hash_init_vector(token, dim_));
}

void ToyEncoder::set_row(const std::string& token, Vector v) {
    if (token.empty()) throw std::invalid_argument("token must be non-empty");
    if (v.size() != dim_)
        throw std::invalid_argument("row dimension " + std::to_string(v.size()) +
                                    " does not match table dim " + std::to_string(dim_));
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument("row components must be finite");
    table_[token] = std::move(v);
}

const Vector& ToyEncoder::row(const std::string& token) const {
    auto it = table_.find(token);
    if (it == table_.end()) throw std::invalid_argument("unknown token row: " + token);
    return it->second;
}

const Vector& ToyEncoder::lookup(const std::string& token) const {
    auto it = table_.find(token);
    if (it != table_.end()) return it->second;
    return table_.at(std::string(kUnknownToken));
}

Vector ToyEncoder::encode_mean(std::span<const std::string> tokens) const {
    if (tokens.empty()) throw std::invalid_argument("cannot encode an empty token sequence");
    Vector pooled(dim_, 0.0);
    for (const std::string& token : tokens) {
        const Vector& r = lookup(token);
        for (std::size_t k = 0; k < dim_; ++k) pooled[k] += r[k];
    }
    double inv = 1.0 / static_cast<double>(tokens.size());
    for (double& x : pooled) x *= inv;
    return pooled;
}

TokenEmbeddings ToyEncoder::encode_tokens(std::span<const std::string> tokens) const {
    if (tokens.empty()) throw std::invalid_argument("cannot encode an empty token sequence");
    TokenEmbeddings out;
    out.rows.reserve(tokens.size());
    for (const std::string& token : tokens) out.rows.push_back(lookup(token));
    return out;
}

std::string ToyEncoder::serialize() const {
    std::string out;
    char buf[64];
    for (const auto& [token, v] : table_) {
        out += token;
        out += ' ';
        out += std::to_string(dim_);
        for (double x : v) {
            int n = std::snprintf(buf, sizeof buf, " %.17g", x);
            out.append(buf, static_cast<std::size_t>(n));
        }
        out += '\n';
    }
    return out;
}

ToyEncoder ToyEncoder::deserialize(std::string_view text) {
    std::size_t dim = 0;
    std::map<std::string, Vector> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() < 3)
            throw ParseError("expected 'token dim v1 ... vd'", line_no);
        std::string token(fields[0]);
        std::size_t row_dim = parse_size_field(fields[1], line_no);
        if (row_dim == 0) throw ParseError("embedding dim must be positive", line_no);
        if (dim == 0) dim = row_dim;
        if (row_dim != dim)
            throw ParseError("dim " + std::to_string(row_dim) + " conflicts with earlier dim " +
                                 std::to_string(dim),
                             line_no);
        if (fields.size() - 2 != row_dim)
            throw ParseError("expected " + std::to_string(row_dim) + " components, got " +
                                 std::to_string(fields.size() - 2),
                             line_no);
        Vector v(row_dim);
        for (std::size_t k = 0; k < row_dim; ++k)
            v[k] = parse_double_field(fields[2 + k], line_no);
        if (!rows.emplace(std::move(token), std::move(v)).second)
            throw ParseError("duplicate token '" + std::string(fields[0]) + "'", line_no);
    }
    if (rows.empty()) throw ParseError("embedding table is empty");
    ToyEncoder encoder(dim);
    for (auto& [token, v] : rows) encoder.set_row(token, std::move(v));
    return encoder;
}

double in_batch_loss(const TrainingBatch& batch, const ToyEncoder& encoder, LossScorer scorer) {
    check_batch(batch);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto candidates = candidates_for(batch, i);
        std::vector<double> scores(candidates.size());
        for (std::size_t k = 0; k < candidates.size(); ++k)
            scores[k] = pair_score(batch.triples[i].query, *candidates[k], encoder, scorer);
        total += logsumexp(scores) - scores[0];
    }
    return total / static_cast<double>(batch.size());
}

Gradient loss_gradient(const TrainingBatch& batch, const ToyEncoder& encoder, LossScorer scorer) {
    check_batch(batch);
    Gradient grad;
    double inv_b = 1.0 / static_cast<double>(batch.size());

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& query = batch.triples[i].query;
        auto candidates = candidates_for(batch, i);
        std::vector<double> scores(candidates.size());
        for (std::size_t k = 0; k < candidates.size(); ++k)
            scores[k] = pair_score(query, *candidates[k], encoder, scorer);

        // Softmax over candidate scores; the loss is -log softmax[0], so
        // d loss / d score_k = softmax_k - [k == 0].
        double lse = logsumexp(scores);
        std::vector<double> weights(scores.size());
        for (std::size_t k = 0; k < scores.size(); ++k) {
            weights[k] = std::exp(scores[k] - lse) - (k == 0 ? 1.0 : 0.0);
            weights[k] *= inv_b;
        }

        if (scorer == LossScorer::PooledDot) {
            Vector pooled_q = encoder.encode_mean(query);
            Vector dq(encoder.dim(), 0.0);
            for (std::size_t k = 0; k < candidates.size(); ++k) {
                Vector pooled_c = encoder.encode_mean(*candidates[k]);
                for (std::size_t d = 0; d < dq.size(); ++d) dq[d] += weights[k] * pooled_c[d];
                double c_scale = weights[k] / static_cast<double>(candidates[k]->size());
                for (const std::string& token : *candidates[k])
                    add_scaled(grad, encoder, token, pooled_q, c_scale);
            }
            double q_scale = 1.0 / static_cast<double>(query.size());
            for (const std::string& token : query) add_scaled(grad, encoder, token, dq, q_scale);
        } else {
            TokenEmbeddings q_emb = encoder.encode_tokens(query);
            for (std::size_t k = 0; k < candidates.size(); ++k) {
                const auto& passage = *candidates[k];
                TokenEmbeddings p_emb = encoder.encode_tokens(passage);
                for (std::size_t a = 0; a < q_emb.rows.size(); ++a) {
                    // First-argmax subgradient through the per-token max.
                    std::size_t best = 0;
                    double best_sim = dot(q_emb.rows[a], p_emb.rows[0]);
                    for (std::size_t b = 1; b < p_emb.rows.size(); ++b) {
                        double s = dot(q_emb.rows[a], p_emb.rows[b]);
                        if (s > best_sim) {
                            best_sim = s;
                            best = b;
                        }
                    }
                    add_scaled(grad, encoder, query[a], p_emb.rows[best], weights[k]);
                    add_scaled(grad, encoder, passage[best], q_emb.rows[a], weights[k]);
                }
            }
        }
    }
    return grad;
}

void sgd_step(ToyEncoder& encoder, const Gradient& gradient, double learning_rate) {
    for (const auto& [token, g] : gradient) {
        Vector updated = encoder.row(token);
        if (g.size() != updated.size())
            throw std::invalid_argument("gradient dimension mismatch for token: " + token);
        for (std::size_t k = 0; k < updated.size(); ++k) updated[k] -= learning_rate * g[k];
        encoder.set_row(token, std::move(updated));
    }
}

std::vector<ScoredDoc> score_collection(const std::vector<std::string>& query_tokens,
                                        const std::vector<Passage>& passages,
                                        const ToyEncoder& encoder, ScoreMode mode, Metric metric,
                                        unsigned threads) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(passages.size());
    for (const Passage& p : passages)
        if (!seen.insert(p.doc_id).second)
            throw ValidationError("duplicate doc_id in collection: " + p.doc_id);
    if (passages.empty()) return {};

    std::vector<double> scores(passages.size());
    if (mode == ScoreMode::Dpr) {
        Vector q = encoder.encode_mean(query_tokens);
        parallel_for(passages.size(), threads, [&](std::size_t i) {
            scores[i] = dpr_score(q, encoder.encode_mean(passages[i].tokens));
        });
    } else {
        std::vector<std::string> marked_query;
        marked_query.reserve(query_tokens.size() + 1);
        marked_query.emplace_back(ToyEncoder::kQueryMarker);
        marked_query.insert(marked_query.end(), query_tokens.begin(), query_tokens.end());
        TokenEmbeddings q = encoder.encode_tokens(marked_query);
        parallel_for(passages.size(), threads, [&](std::size_t i) {
            std::vector<std::string> marked;
            marked.reserve(passages[i].tokens.size() + 1);
            marked.emplace_back(ToyEncoder::kPassageMarker);
            marked.insert(marked.end(), passages[i].tokens.begin(), passages[i].tokens.end());
            scores[i] = maxsim_score(q, encoder.encode_tokens(marked), metric);
        });
    }

    for (std::size_t i = 0; i < scores.size(); ++i)
        if (!std::isfinite(scores[i]))
            throw ValidationError("non-finite score for doc " + passages[i].doc_id);

    std::vector<std::size_t> order(passages.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return passages[a].doc_id < passages[b].doc_id;
    });

    std::vector<ScoredDoc> out;
    out.reserve(order.size());
    for (std::size_t r = 0; r < order.size(); ++r)
        out.push_back({passages[order[r]].doc_id, r + 1, scores[order[r]]});
    return out;
}

} // namespace mathfuse
