#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mathfuse/errors.hpp"
#include "mathfuse/run.hpp"

namespace mathfuse {

using Vector = std::vector<double>;

/// Per-token embedding rows; all rows share one dimension.
struct TokenEmbeddings {
    std::vector<Vector> rows;

    std::size_t dim() const { return rows.empty() ? 0 : rows.front().size(); }
};

enum class Metric { Dot, NegL2Normalized };
enum class ScoreMode { Dpr, Colbert };

/// Which similarity backs the contrastive loss softmax: the pooled dot
/// product, or the token-level max-sim sum (scored with the dot metric).
enum class LossScorer { PooledDot, MaxSim };

/// Dot product of two pooled embeddings. Throws std::invalid_argument on
/// dimension mismatch.
double dpr_score(const Vector& q, const Vector& p);

/// Token-level similarity: Dot is the inner product; NegL2Normalized is the
/// negative Euclidean distance between unit-normalized inputs (larger is
/// more similar; invariant to positive rescaling). A zero vector under
/// NegL2Normalized throws std::invalid_argument.
double token_sim(const Vector& a, const Vector& b, Metric metric);

/// Late-interaction score: sum over query tokens of the maximum token_sim
/// against any passage token. Exact (no candidate pruning).
double maxsim_score(const TokenEmbeddings& q, const TokenEmbeddings& p, Metric metric);

/// Desk-scale trainable encoder: an embedding table with mean pooling as
/// the passage-level proxy and per-token passthrough for late interaction.
/// Rows are deterministically initialized from the token surface (hashed),
/// so construction is reproducible without seed management. Unknown tokens
/// share the reserved [UNK] row. Encoding one side never reads the other
/// side's content.
///
/// Single-writer: training steps mutate the table; do not score and train
/// the same instance concurrently.
class ToyEncoder {
public:
    static constexpr std::string_view kUnknownToken = "[UNK]";
    static constexpr std::string_view kQueryMarker = "[Q]";
    static constexpr std::string_view kPassageMarker = "[D]";

    /// Reserved rows only.
    explicit ToyEncoder(std::size_t dim);

    /// Reserved rows plus one hash-initialized row per vocabulary token.
    ToyEncoder(std::size_t dim, const std::set<std::string>& vocabulary);

    std::size_t dim() const { return dim_; }
    bool contains(const std::string& token) const { return table_.count(token) > 0; }

    /// Adds or replaces a row; the vector must match dim() and be finite.
    void set_row(const std::string& token, Vector v);

    /// Exact row; throws std::invalid_argument when absent.
    const Vector& row(const std::string& token) const;

    /// Row for the token, falling back to the shared [UNK] row.
    const Vector& lookup(const std::string& token) const;

    const std::map<std::string, Vector>& table() const { return table_; }

    /// Mean of the tokens' rows (the pooled, passage-level embedding).
    /// Throws std::invalid_argument on an empty sequence.
    Vector encode_mean(std::span<const std::string> tokens) const;

    /// One row per token, in order.
    TokenEmbeddings encode_tokens(std::span<const std::string> tokens) const;

    /// Flat text format: "token dim v1 ... vd" per line, full precision.
    std::string serialize() const;

    /// Inverse of serialize(). Reserved rows are hash-initialized when the
    /// input does not carry them.
    static ToyEncoder deserialize(std::string_view text);

private:
    std::size_t dim_;
    std::map<std::string, Vector> table_;
};

/// Deterministic per-token initial embedding (what ToyEncoder uses).
Vector hash_init_vector(std::string_view token, std::size_t dim);

struct TrainingTriple {
    std::vector<std::string> query;
    std::vector<std::string> positive;
    std::vector<std::string> negative;
};

struct TrainingBatch {
    std::vector<TrainingTriple> triples;

    std::size_t size() const { return triples.size(); }
};

/// Mean over the batch of the per-query softmax cross-entropy loss, where
/// each query's positive passage competes against 2B-1 negatives: its own
/// hard negative plus both passages of every other triple in the batch.
double in_batch_loss(const TrainingBatch& batch, const ToyEncoder& encoder,
                     LossScorer scorer = LossScorer::PooledDot);

/// Partial derivatives of in_batch_loss with respect to every table row;
/// rows the loss does not touch are absent (gradient zero). For the MaxSim
/// scorer the gradient follows the first-argmax selection.
using Gradient = std::map<std::string, Vector>;
Gradient loss_gradient(const TrainingBatch& batch, const ToyEncoder& encoder,
                       LossScorer scorer = LossScorer::PooledDot);

/// table[token] -= learning_rate * gradient[token]
void sgd_step(ToyEncoder& encoder, const Gradient& gradient, double learning_rate);

struct Passage {
    std::string doc_id;
    std::vector<std::string> tokens;
};

/// Scores every passage against the query and returns one ranked topic
/// entry: descending score, ties broken by ascending doc_id, ranks 1..n.
/// Dpr mode pools both sides and takes the dot product; Colbert mode
/// prepends the [Q]/[D] markers, keeps per-token embeddings, and scores by
/// maxsim under `metric`. Passages may be scored in parallel; the result
/// does not depend on `threads`.
std::vector<ScoredDoc> score_collection(const std::vector<std::string>& query_tokens,
                                        const std::vector<Passage>& passages,
                                        const ToyEncoder& encoder, ScoreMode mode,
                                        Metric metric = Metric::Dot,
                                        unsigned threads = 1);

} // namespace mathfuse
