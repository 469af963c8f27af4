#include <benchmark/benchmark.h>

#include <random>
#include <set>
#include <string>
#include <vector>

#include "mathfuse/dense.hpp"
#include "mathfuse/fusion.hpp"
#include "mathfuse/metrics.hpp"
#include "mathfuse/tokenizer.hpp"

using namespace mathfuse;

namespace {

TokenEmbeddings random_embeddings(std::mt19937& rng, std::size_t tokens, std::size_t dim) {
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    TokenEmbeddings out;
    out.rows.resize(tokens);
    for (auto& row : out.rows) {
        row.resize(dim);
        for (double& v : row) v = value(rng);
    }
    return out;
}

std::vector<Passage> synthetic_passages(std::size_t count, std::size_t tokens_each) {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> word(0, 499);
    std::vector<Passage> passages;
    passages.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Passage p;
        p.doc_id = "d" + std::to_string(i);
        for (std::size_t t = 0; t < tokens_each; ++t)
            p.tokens.push_back("w" + std::to_string(word(rng)));
        passages.push_back(std::move(p));
    }
    return passages;
}

ToyEncoder encoder_for(const std::vector<Passage>& passages, std::size_t dim) {
    std::set<std::string> vocabulary;
    for (const auto& p : passages) vocabulary.insert(p.tokens.begin(), p.tokens.end());
    return ToyEncoder(dim, vocabulary);
}

RankedRun synthetic_run(unsigned seed, const std::string& tag, std::size_t topics,
                        std::size_t docs) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> gap(0.01, 1.0);
    RankedRun run;
    run.run_tag = tag;
    for (std::size_t t = 0; t < topics; ++t) {
        auto& entry = run.topics["q" + std::to_string(t)];
        double score = 10000.0;
        for (std::size_t d = 0; d < docs; ++d) {
            score -= gap(rng);
            entry.push_back({"d" + std::to_string((seed * 37 + d * 13) % (docs * 2)), d + 1,
                             score});
        }
    }
    return run;
}

void BM_MaxsimDot(benchmark::State& state) {
    std::mt19937 rng(42);
    TokenEmbeddings q = random_embeddings(rng, 8, static_cast<std::size_t>(state.range(0)));
    TokenEmbeddings p = random_embeddings(rng, 128, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(maxsim_score(q, p, Metric::Dot));
}
BENCHMARK(BM_MaxsimDot)->Arg(64)->Arg(128)->Arg(256);

void BM_ScoreCollection(benchmark::State& state) {
    auto passages = synthetic_passages(1000, 24);
    auto encoder = encoder_for(passages, 64);
    std::vector<std::string> query = {"w1", "w17", "w230", "w444"};
    ScoreMode mode = state.range(0) == 0 ? ScoreMode::Dpr : ScoreMode::Colbert;
    for (auto _ : state)
        benchmark::DoNotOptimize(score_collection(query, passages, encoder, mode));
}
BENCHMARK(BM_ScoreCollection)->Arg(0)->Arg(1);

void BM_LinearFuse(benchmark::State& state) {
    RankedRun a = synthetic_run(1, "a", 50, static_cast<std::size_t>(state.range(0)));
    RankedRun b = synthetic_run(2, "b", 50, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(linear_fuse(a, b, 0.5));
}
BENCHMARK(BM_LinearFuse)->Arg(100)->Arg(1000);

void BM_RrfFuse(benchmark::State& state) {
    std::vector<RankedRun> runs = {synthetic_run(1, "a", 50, 1000),
                                   synthetic_run(2, "b", 50, 1000),
                                   synthetic_run(3, "c", 50, 1000)};
    for (auto _ : state) benchmark::DoNotOptimize(rrf_fuse(runs));
}
BENCHMARK(BM_RrfFuse);

void BM_Pretokenize(benchmark::State& state) {
    std::string text =
        "Show that $\\sum_{n=1}^{\\infty} \\frac{1}{n^2} = \\frac{\\pi^2}{6}$ using "
        "Fourier series of $f(x) = x^2$ on $[-\\pi, \\pi]$ and norm $\\|f\\|_2$.";
    for (auto _ : state) benchmark::DoNotOptimize(pretokenize(text));
}
BENCHMARK(BM_Pretokenize);

void BM_EvaluateRun(benchmark::State& state) {
    RankedRun run = synthetic_run(5, "sys", 50, 1000);
    JudgmentSet judgments;
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> grade(0, 3);
    for (const auto& [topic, entry] : run.topics)
        for (std::size_t i = 0; i < entry.size(); i += 7)
            judgments.grades[topic][entry[i].doc_id] = grade(rng);
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(run, judgments));
}
BENCHMARK(BM_EvaluateRun);

} // namespace

BENCHMARK_MAIN();
