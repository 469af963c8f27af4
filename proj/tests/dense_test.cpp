#include "mathfuse/dense.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mathfuse;

namespace {

// ------------------------------------------------------------------ oracles
// Written against the stated definitions only, independent of the library
// internals.

// Plain nested-loop MaxSim.
double oracle_maxsim_dot(const TokenEmbeddings& q, const TokenEmbeddings& p) {
    double total = 0.0;
    for (std::size_t i = 0; i < q.rows.size(); ++i) {
        double best = 0.0;
        bool first = true;
        for (std::size_t j = 0; j < p.rows.size(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < q.rows[i].size(); ++k) s += q.rows[i][k] * p.rows[j][k];
            if (first || s > best) best = s;
            first = false;
        }
        total += best;
    }
    return total;
}

double oracle_maxsim_neg_l2(const TokenEmbeddings& q, const TokenEmbeddings& p) {
    auto unit = [](const Vector& v) {
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        Vector u(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) u[k] = v[k] / norm;
        return u;
    };
    double total = 0.0;
    for (std::size_t i = 0; i < q.rows.size(); ++i) {
        Vector qu = unit(q.rows[i]);
        double best = -1e300;
        for (std::size_t j = 0; j < p.rows.size(); ++j) {
            Vector pu = unit(p.rows[j]);
            double dist = 0.0;
            for (std::size_t k = 0; k < qu.size(); ++k)
                dist += (qu[k] - pu[k]) * (qu[k] - pu[k]);
            best = std::max(best, -std::sqrt(dist));
        }
        total += best;
    }
    return total;
}

// Direct summation of the per-query softmax loss: the positive's score
// against its own hard negative plus both passages of every other triple,
// without any log-sum-exp rearrangement.
double oracle_loss(const TrainingBatch& batch, const ToyEncoder& encoder, LossScorer scorer) {
    auto score = [&](const std::vector<std::string>& q, const std::vector<std::string>& p) {
        if (scorer == LossScorer::PooledDot)
            return dpr_score(encoder.encode_mean(q), encoder.encode_mean(p));
        return maxsim_score(encoder.encode_tokens(q), encoder.encode_tokens(p), Metric::Dot);
    };
    double total = 0.0;
    std::size_t b = batch.size();
    for (std::size_t i = 0; i < b; ++i) {
        double s_plus = score(batch.triples[i].query, batch.triples[i].positive);
        double denom = std::exp(s_plus);
        denom += std::exp(score(batch.triples[i].query, batch.triples[i].negative));
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            denom += std::exp(score(batch.triples[i].query, batch.triples[j].positive));
            denom += std::exp(score(batch.triples[i].query, batch.triples[j].negative));
        }
        total += -std::log(std::exp(s_plus) / denom);
    }
    return total / static_cast<double>(b);
}

// Central finite differences of in_batch_loss over every table component.
Gradient fd_gradient(const TrainingBatch& batch, const ToyEncoder& encoder, LossScorer scorer,
                     double h = 1e-5) {
    Gradient grad;
    for (const auto& [token, row] : encoder.table()) {
        Vector g(row.size(), 0.0);
        for (std::size_t k = 0; k < row.size(); ++k) {
            ToyEncoder plus = encoder;
            ToyEncoder minus = encoder;
            Vector bumped = row;
            bumped[k] = row[k] + h;
            plus.set_row(token, bumped);
            bumped[k] = row[k] - h;
            minus.set_row(token, bumped);
            g[k] = (in_batch_loss(batch, plus, scorer) - in_batch_loss(batch, minus, scorer)) /
                   (2.0 * h);
        }
        grad[token] = std::move(g);
    }
    return grad;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

TokenEmbeddings random_embeddings(std::mt19937& rng, std::size_t tokens, std::size_t dim) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    TokenEmbeddings out;
    out.rows.resize(tokens);
    for (auto& row : out.rows) {
        row.resize(dim);
        for (double& x : row) x = unit(rng);
    }
    return out;
}

std::vector<std::string> random_tokens(std::mt19937& rng, std::size_t max_len,
                                       const std::vector<std::string>& vocab) {
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::vector<std::string> tokens(len(rng));
    for (auto& token : tokens) token = vocab[pick(rng)];
    return tokens;
}

TrainingBatch random_batch(std::mt19937& rng, std::size_t b,
                           const std::vector<std::string>& vocab) {
    TrainingBatch batch;
    for (std::size_t i = 0; i < b; ++i)
        batch.triples.push_back({random_tokens(rng, 4, vocab), random_tokens(rng, 4, vocab),
                                 random_tokens(rng, 4, vocab)});
    return batch;
}

ToyEncoder random_encoder(std::mt19937& rng, std::size_t dim,
                          const std::vector<std::string>& vocab) {
    ToyEncoder encoder(dim, {vocab.begin(), vocab.end()});
    std::uniform_real_distribution<double> unit(-0.7, 0.7);
    std::vector<std::string> tokens;
    for (const auto& entry : encoder.table()) tokens.push_back(entry.first);
    for (const std::string& token : tokens) {
        Vector fresh(dim);
        for (double& x : fresh) x = unit(rng);
        encoder.set_row(token, fresh);
    }
    return encoder;
}

const std::vector<std::string> kVocab = {"t0", "t1", "t2", "t3", "t4",
                                         "t5", "t6", "t7", "t8", "t9"};

// ------------------------------------------------------------------- tests

TEST(DprScore, HandExamplesAndErrors) {
    EXPECT_DOUBLE_EQ(dpr_score({1, 2}, {3, 4}), 11.0);
    EXPECT_DOUBLE_EQ(dpr_score({0, 0, 0}, {0, 0, 0}), 0.0);
    EXPECT_DOUBLE_EQ(dpr_score({1, 0}, {0, 1}), 0.0);
    EXPECT_DOUBLE_EQ(dpr_score({1, 2}, {3, 4}), dpr_score({3, 4}, {1, 2}));
    EXPECT_THROW(dpr_score({1, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST(TokenSim, DotAndNormalizedL2) {
    EXPECT_DOUBLE_EQ(token_sim({1, 0}, {1, 0}, Metric::Dot), 1.0);
    EXPECT_DOUBLE_EQ(token_sim({2, 0}, {1, 0}, Metric::NegL2Normalized), 0.0);
    EXPECT_DOUBLE_EQ(token_sim({1, 0}, {0, 1}, Metric::NegL2Normalized), -std::sqrt(2.0));
    EXPECT_THROW(token_sim({0, 0}, {1, 0}, Metric::NegL2Normalized), std::invalid_argument);
    EXPECT_THROW(token_sim({1, 0}, {0, 0}, Metric::NegL2Normalized), std::invalid_argument);
    EXPECT_THROW(token_sim({1}, {1, 2}, Metric::Dot), std::invalid_argument);
}

TEST(TokenSim, NegL2InvariantToPositiveRescaling) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> scale(0.01, 50.0);
    for (int trial = 0; trial < 100; ++trial) {
        Vector a(4), b(4);
        for (double& x : a) x = unit(rng);
        for (double& x : b) x = unit(rng);
        double base = token_sim(a, b, Metric::NegL2Normalized);
        Vector a2 = a;
        double s = scale(rng);
        for (double& x : a2) x *= s;
        EXPECT_NEAR(token_sim(a2, b, Metric::NegL2Normalized), base, 1e-12);
    }
}

TEST(MaxsimScore, HandExamples) {
    TokenEmbeddings id2{{{1, 0}, {0, 1}}};
    EXPECT_DOUBLE_EQ(maxsim_score(id2, id2, Metric::Dot), 2.0);
    TokenEmbeddings qx{{{1, 0}}};
    TokenEmbeddings py{{{0, 1}}};
    EXPECT_DOUBLE_EQ(maxsim_score(qx, py, Metric::Dot), 0.0);
    EXPECT_THROW(maxsim_score(qx, TokenEmbeddings{}, Metric::Dot), std::invalid_argument);
    EXPECT_THROW(maxsim_score(qx, TokenEmbeddings{{{1, 2, 3}}}, Metric::Dot),
                 std::invalid_argument);
}

TEST(MaxsimScore, MatchesNestedLoopOracle) {
    std::mt19937 rng(20240816);
    std::uniform_int_distribution<std::size_t> qlen(1, 8), plen(1, 32), dims(1, 16);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t dim = dims(rng);
        TokenEmbeddings q = random_embeddings(rng, qlen(rng), dim);
        TokenEmbeddings p = random_embeddings(rng, plen(rng), dim);
        double exact = maxsim_score(q, p, Metric::Dot);
        EXPECT_EQ(exact, oracle_maxsim_dot(q, p)); // bitwise
        EXPECT_NEAR(maxsim_score(q, p, Metric::NegL2Normalized), oracle_maxsim_neg_l2(q, p),
                    1e-12);
    }
}

TEST(HashInit, DeterministicBoundedAndTokenDependent) {
    Vector a = hash_init_vector("token", 16);
    EXPECT_EQ(a, hash_init_vector("token", 16));
    EXPECT_NE(a, hash_init_vector("tokeN", 16));
    double bound = 0.5 / std::sqrt(16.0);
    for (double x : a) {
        EXPECT_GE(x, -bound);
        EXPECT_LE(x, bound);
    }
    EXPECT_THROW(hash_init_vector("x", 0), std::invalid_argument);
}

TEST(ToyEncoder, ReservedRowsAndLookupFallback) {
    ToyEncoder encoder(8);
    EXPECT_TRUE(encoder.contains("[UNK]"));
    EXPECT_TRUE(encoder.contains("[Q]"));
    EXPECT_TRUE(encoder.contains("[D]"));
    EXPECT_EQ(encoder.lookup("never-seen"), encoder.row("[UNK]"));
    EXPECT_THROW(encoder.row("never-seen"), std::invalid_argument);

    ToyEncoder with_vocab(8, {"alpha", "beta"});
    EXPECT_TRUE(with_vocab.contains("alpha"));
    EXPECT_EQ(with_vocab.row("alpha"), hash_init_vector("alpha", 8));
    EXPECT_NE(with_vocab.lookup("alpha"), with_vocab.lookup("beta"));
}

TEST(ToyEncoder, SetRowValidates) {
    ToyEncoder encoder(4);
    EXPECT_THROW(encoder.set_row("x", {1, 2}), std::invalid_argument);
    EXPECT_THROW(encoder.set_row("x", {1, 2, 3, std::nan("")}), std::invalid_argument);
    EXPECT_THROW(encoder.set_row("", {1, 2, 3, 4}), std::invalid_argument);
    encoder.set_row("x", {1, 2, 3, 4});
    EXPECT_EQ(encoder.row("x"), (Vector{1, 2, 3, 4}));
    EXPECT_THROW(ToyEncoder(0), std::invalid_argument);
}

TEST(ToyEncoder, MeanPoolingExamples) {
    ToyEncoder encoder(2);
    encoder.set_row("a", {1, 0});
    encoder.set_row("b", {0, 1});
    std::vector<std::string> one = {"a"};
    EXPECT_EQ(encoder.encode_mean(one), (Vector{1, 0}));
    std::vector<std::string> twice = {"a", "a"};
    EXPECT_EQ(encoder.encode_mean(twice), (Vector{1, 0}));
    std::vector<std::string> both = {"a", "b"};
    EXPECT_EQ(encoder.encode_mean(both), (Vector{0.5, 0.5}));
    EXPECT_THROW(encoder.encode_mean({}), std::invalid_argument);
    EXPECT_THROW(encoder.encode_tokens({}), std::invalid_argument);
}

TEST(ToyEncoder, UnknownTokensPoolThroughUnkRow) {
    ToyEncoder encoder(4);
    std::vector<std::string> unknowns = {"www", "zzz"};
    EXPECT_EQ(encoder.encode_mean(unknowns), encoder.row("[UNK]"));
}

TEST(ToyEncoder, EncodeTokensKeepsOrder) {
    ToyEncoder encoder(2);
    encoder.set_row("a", {1, 0});
    encoder.set_row("b", {0, 1});
    std::vector<std::string> tokens = {"b", "a", "b"};
    TokenEmbeddings emb = encoder.encode_tokens(tokens);
    ASSERT_EQ(emb.rows.size(), 3u);
    EXPECT_EQ(emb.rows[0], (Vector{0, 1}));
    EXPECT_EQ(emb.rows[1], (Vector{1, 0}));
    EXPECT_EQ(emb.dim(), 2u);
}

TEST(ToyEncoder, SerializeRoundTripsBitwise) {
    std::mt19937 rng(11);
    ToyEncoder encoder = random_encoder(rng, 5, kVocab);
    ToyEncoder copy = ToyEncoder::deserialize(encoder.serialize());
    EXPECT_EQ(copy.dim(), encoder.dim());
    EXPECT_EQ(copy.table(), encoder.table());
}

TEST(ToyEncoder, DeserializeFillsMissingReservedRows) {
    ToyEncoder encoder = ToyEncoder::deserialize("word 3 0.5 -1 2\n");
    EXPECT_EQ(encoder.dim(), 3u);
    EXPECT_EQ(encoder.row("word"), (Vector{0.5, -1, 2}));
    EXPECT_TRUE(encoder.contains("[UNK]"));
    EXPECT_EQ(encoder.row("[UNK]"), hash_init_vector("[UNK]", 3));
}

TEST(ToyEncoder, DeserializeRejectsMalformedTables) {
    EXPECT_THROW(ToyEncoder::deserialize(""), ParseError);
    EXPECT_THROW(ToyEncoder::deserialize("w 2 1\n"), ParseError);          // count mismatch
    EXPECT_THROW(ToyEncoder::deserialize("w 2 1 2 3\n"), ParseError);      // count mismatch
    EXPECT_THROW(ToyEncoder::deserialize("w 2 1 2\nv 3 1 2 3\n"), ParseError); // dim conflict
    EXPECT_THROW(ToyEncoder::deserialize("w 2 1 x\n"), ParseError);        // bad number
    EXPECT_THROW(ToyEncoder::deserialize("w 0\n"), ParseError);            // zero dim
    EXPECT_THROW(ToyEncoder::deserialize("w 2 1 2\nw 2 3 4\n"), ParseError); // duplicate
}

TEST(InBatchLoss, EqualScoresGiveLnTwo) {
    ToyEncoder encoder(4);
    encoder.set_row("q", {1, 0, 0, 0});
    encoder.set_row("p", {0, 1, 0, 0});
    TrainingBatch batch;
    batch.triples.push_back({{"q"}, {"p"}, {"p"}}); // identical passages tie the scores
    EXPECT_NEAR(in_batch_loss(batch, encoder), std::log(2.0), 1e-12);
    EXPECT_NEAR(in_batch_loss(batch, encoder, LossScorer::MaxSim), std::log(2.0), 1e-12);
}

TEST(InBatchLoss, LargeMarginDrivesLossToZero) {
    ToyEncoder encoder(2);
    encoder.set_row("q", {1, 0});
    encoder.set_row("good", {25, 0});
    encoder.set_row("bad", {0, 1});
    TrainingBatch batch;
    batch.triples.push_back({{"q"}, {"good"}, {"bad"}});
    EXPECT_LT(in_batch_loss(batch, encoder), 1e-6);
    EXPECT_GE(in_batch_loss(batch, encoder), 0.0);
}

TEST(InBatchLoss, MatchesDirectSummationOracle) {
    std::mt19937 rng(314159);
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t b = 1 + trial % 4;
        ToyEncoder encoder = random_encoder(rng, 6, kVocab);
        TrainingBatch batch = random_batch(rng, b, kVocab);
        for (LossScorer scorer : {LossScorer::PooledDot, LossScorer::MaxSim}) {
            double loss = in_batch_loss(batch, encoder, scorer);
            EXPECT_NEAR(loss, oracle_loss(batch, encoder, scorer), 1e-10);
            EXPECT_GE(loss, 0.0);
        }
    }
}

TEST(InBatchLoss, RejectsEmptyBatch) {
    ToyEncoder encoder(4);
    EXPECT_THROW(in_batch_loss(TrainingBatch{}, encoder), std::invalid_argument);
    EXPECT_THROW(loss_gradient(TrainingBatch{}, encoder), std::invalid_argument);
}

TEST(LossGradient, SymmetricInstanceHasZeroGradient) {
    ToyEncoder encoder(4);
    encoder.set_row("q", {0.3, -0.2, 0.5, 0.1});
    encoder.set_row("p", {-0.4, 0.9, 0.0, 0.2});
    TrainingBatch batch;
    batch.triples.push_back({{"q"}, {"p"}, {"p"}});
    for (const auto& [token, g] : loss_gradient(batch, encoder))
        for (double x : g) EXPECT_NEAR(x, 0.0, 1e-14) << token;
}

TEST(LossGradient, MatchesFiniteDifferences) {
    std::mt19937 rng(271828);
    const std::size_t batch_sizes[] = {1, 2, 4};
    for (int trial = 0; trial < 24; ++trial) {
        std::size_t b = batch_sizes[trial % 3];
        std::size_t dim = 2 + trial % 7; // up to 8
        ToyEncoder encoder = random_encoder(rng, dim, kVocab);
        TrainingBatch batch = random_batch(rng, b, kVocab);
        for (LossScorer scorer : {LossScorer::PooledDot, LossScorer::MaxSim}) {
            Gradient analytic = loss_gradient(batch, encoder, scorer);
            Gradient fd = fd_gradient(batch, encoder, scorer);
            for (const auto& [token, fd_row] : fd) {
                auto it = analytic.find(token);
                for (std::size_t k = 0; k < fd_row.size(); ++k) {
                    double a = it == analytic.end() ? 0.0 : it->second[k];
                    EXPECT_LE(rel_err(a, fd_row[k]), 1e-5)
                        << "token " << token << " dim " << k;
                }
            }
        }
    }
}

TEST(LossGradient, UnknownTokensAccrueToUnkRow) {
    ToyEncoder encoder(3);
    encoder.set_row("p", {0.2, -0.1, 0.4});
    encoder.set_row("n", {-0.3, 0.5, 0.1});
    TrainingBatch batch;
    batch.triples.push_back({{"oov_query"}, {"p"}, {"n"}});
    Gradient grad = loss_gradient(batch, encoder);
    EXPECT_EQ(grad.count("oov_query"), 0u);
    ASSERT_EQ(grad.count("[UNK]"), 1u);
    double norm = 0.0;
    for (double x : grad.at("[UNK]")) norm += std::abs(x);
    EXPECT_GT(norm, 0.0);
}

TEST(SgdStep, AppliesScaledGradientAndDecreasesLoss) {
    ToyEncoder encoder(2);
    encoder.set_row("a", {1.0, 2.0});
    sgd_step(encoder, {{"a", {0.5, -1.0}}}, 0.1);
    EXPECT_EQ(encoder.row("a"), (Vector{0.95, 2.1}));
    EXPECT_THROW(sgd_step(encoder, {{"missing", {1, 1}}}, 0.1), std::invalid_argument);
    EXPECT_THROW(sgd_step(encoder, {{"a", {1}}}, 0.1), std::invalid_argument);

    std::mt19937 rng(55);
    ToyEncoder trained = random_encoder(rng, 6, kVocab);
    TrainingBatch batch = random_batch(rng, 3, kVocab);
    double before = in_batch_loss(batch, trained);
    sgd_step(trained, loss_gradient(batch, trained), 0.05);
    EXPECT_LT(in_batch_loss(batch, trained), before);
}

TEST(ScoreCollection, SortsByScoreThenDocId) {
    ToyEncoder encoder(2);
    encoder.set_row("q", {1, 0});
    encoder.set_row("hi", {5, 0});
    encoder.set_row("lo", {2, 0});
    std::vector<Passage> passages = {{"d1", {"lo"}}, {"d2", {"hi"}}};
    auto ranked = score_collection({"q"}, passages, encoder, ScoreMode::Dpr);
    ASSERT_EQ(ranked.size(), 2u);
    EXPECT_EQ(ranked[0].doc_id, "d2");
    EXPECT_EQ(ranked[0].rank, 1u);
    EXPECT_DOUBLE_EQ(ranked[0].score, 5.0);
    EXPECT_EQ(ranked[1].doc_id, "d1");
    EXPECT_EQ(ranked[1].rank, 2u);

    // Equal scores break ties by ascending doc id.
    std::vector<Passage> tied = {{"d2", {"lo"}}, {"d1", {"lo"}}};
    auto tied_ranked = score_collection({"q"}, tied, encoder, ScoreMode::Dpr);
    EXPECT_EQ(tied_ranked[0].doc_id, "d1");
    EXPECT_EQ(tied_ranked[1].doc_id, "d2");
}

TEST(ScoreCollection, SinglePassageGetsRankOne) {
    ToyEncoder encoder(2);
    std::vector<Passage> passages = {{"only", {"tok"}}};
    auto ranked = score_collection({"tok"}, passages, encoder, ScoreMode::Dpr);
    ASSERT_EQ(ranked.size(), 1u);
    EXPECT_EQ(ranked[0].rank, 1u);
}

TEST(ScoreCollection, EmptyCollectionAndDuplicateDocs) {
    ToyEncoder encoder(2);
    EXPECT_TRUE(score_collection({"x"}, {}, encoder, ScoreMode::Dpr).empty());
    std::vector<Passage> dup = {{"d1", {"a"}}, {"d1", {"b"}}};
    EXPECT_THROW(score_collection({"x"}, dup, encoder, ScoreMode::Dpr), ValidationError);
}

TEST(ScoreCollection, ColbertModeUsesMarkersAndMaxsim) {
    ToyEncoder encoder(3, {"qa", "pa", "pb"});
    std::vector<std::string> query = {"qa"};
    std::vector<Passage> passages = {{"d1", {"pa", "pb"}}};
    auto ranked = score_collection(query, passages, encoder, ScoreMode::Colbert, Metric::Dot);

    std::vector<std::string> marked_q = {"[Q]", "qa"};
    std::vector<std::string> marked_p = {"[D]", "pa", "pb"};
    double expected = maxsim_score(encoder.encode_tokens(marked_q),
                                   encoder.encode_tokens(marked_p), Metric::Dot);
    ASSERT_EQ(ranked.size(), 1u);
    EXPECT_DOUBLE_EQ(ranked[0].score, expected);

    auto neg_l2 = score_collection(query, passages, encoder, ScoreMode::Colbert,
                                   Metric::NegL2Normalized);
    EXPECT_NE(neg_l2[0].score, ranked[0].score);
}

TEST(ScoreCollection, PerDocScoresIndependentOfRestOfCollection) {
    std::mt19937 rng(17);
    ToyEncoder encoder = random_encoder(rng, 4, kVocab);
    std::vector<Passage> all = {{"a", {"t1", "t2"}}, {"b", {"t3"}}, {"c", {"t4", "t5"}}};
    std::vector<Passage> subset = {{"b", {"t3"}}};
    auto full = score_collection({"t0", "t1"}, all, encoder, ScoreMode::Colbert);
    auto solo = score_collection({"t0", "t1"}, subset, encoder, ScoreMode::Colbert);
    double full_b = 0.0;
    for (const auto& doc : full)
        if (doc.doc_id == "b") full_b = doc.score;
    EXPECT_EQ(full_b, solo[0].score);
}

TEST(ScoreCollection, ResultIndependentOfThreadCount) {
    std::mt19937 rng(23);
    ToyEncoder encoder = random_encoder(rng, 8, kVocab);
    std::vector<Passage> passages;
    for (int i = 0; i < 37; ++i)
        passages.push_back({"d" + std::to_string(i), random_tokens(rng, 6, kVocab)});
    std::vector<std::string> query = random_tokens(rng, 4, kVocab);
    for (ScoreMode mode : {ScoreMode::Dpr, ScoreMode::Colbert}) {
        auto serial = score_collection(query, passages, encoder, mode, Metric::Dot, 1);
        auto threaded = score_collection(query, passages, encoder, mode, Metric::Dot, 4);
        EXPECT_EQ(serial, threaded);
    }
}

} // namespace
