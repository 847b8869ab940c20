// Compares the serial reference paths against the OpenMP kernels:
// tokenization, replicate training (deterministic vs lock-free parallel),
// and the brute-force top-k similarity scan.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include <omp.h>

#include "sublang/consistency.hpp"
#include "sublang/embstore.hpp"
#include "sublang/matcher.hpp"
#include "sublang/rng.hpp"
#include "sublang/terminology.hpp"
#include "sublang/trainer.hpp"

using namespace sublang;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RawCorpus synth_corpus(std::size_t n_lines, std::size_t words_per_line, std::size_t vocab_size,
                       std::uint64_t seed) {
    SplitMix64 rng(seed);
    RawCorpus raw;
    raw.doc_type = "bench";
    std::string doc;
    for (std::size_t l = 0; l < n_lines; ++l) {
        for (std::size_t w = 0; w < words_per_line; ++w) {
            if (w > 0) doc.push_back(' ');
            doc += "w" + std::to_string(rng.next_below(vocab_size));
            if (rng.next_below(20) == 0) doc += " term" + std::to_string(rng.next_below(16));
        }
        doc.push_back('\n');
    }
    raw.documents.push_back(std::move(doc));
    return raw;
}

Terminology synth_terminology() {
    std::vector<std::pair<std::string, std::string>> rows;
    for (int i = 0; i < 16; ++i) {
        rows.emplace_back("C" + std::to_string(i), "term" + std::to_string(i));
    }
    return Terminology::from_rows(rows);
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t n_lines = argc > 1 ? std::stoul(argv[1]) : 20000;
    const int threads = omp_get_max_threads();
    std::printf("sublang benchmark (serial reference vs OpenMP, %d threads)\n\n", threads);

    const RawCorpus raw = synth_corpus(n_lines, 24, 4000, 42);

    // tokenization
    auto t0 = std::chrono::steady_clock::now();
    const TokenizedCorpus serial_tok = tokenize_corpus(raw, 1);
    const double tok_serial = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const TokenizedCorpus parallel_tok = tokenize_corpus(raw, threads);
    const double tok_parallel = seconds_since(t0);
    std::printf("tokenize        %9zu tokens   serial %7.3fs   parallel %7.3fs   (x%.2f)\n",
                serial_tok.stats.token_count, tok_serial, tok_parallel,
                tok_serial / tok_parallel);

    const Matcher matcher(synth_terminology());
    const AnnotatedCorpus annotated = annotate_corpus(serial_tok, matcher, threads);

    // training: deterministic single stream vs lock-free parallel updates
    TrainConfig cfg;
    cfg.dim = 64;
    cfg.epochs = 1;
    cfg.min_freq = 5;
    cfg.seed = 7;
    const Vocabulary vocab = build_vocab(annotated, cfg);
    const std::uint64_t pairs =
        count_schedule(annotated, vocab, cfg).pairs_per_epoch() *
        static_cast<std::uint64_t>(cfg.epochs);

    t0 = std::chrono::steady_clock::now();
    EmbeddingSet det = train_replicate(annotated, vocab, cfg, TrainMode::Deterministic);
    const double train_serial = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    EmbeddingSet par = train_replicate(annotated, vocab, cfg, TrainMode::Parallel, threads);
    const double train_parallel = seconds_since(t0);
    std::printf("train           %9llu pairs    serial %7.3fs   parallel %7.3fs   (x%.2f)\n",
                static_cast<unsigned long long>(pairs), train_serial, train_parallel,
                train_serial / train_parallel);
    std::printf("                serial %9.0f pairs/s, parallel %9.0f pairs/s\n",
                static_cast<double>(pairs) / train_serial,
                static_cast<double>(pairs) / train_parallel);

    // top-k similarity scan over the word table
    std::vector<std::string> pool;
    pool.reserve(det.words.size());
    for (const auto& key : det.words.keys()) pool.push_back(namespaced_key(Space::Word, key));
    const int queries = 200;
    t0 = std::chrono::steady_clock::now();
    for (int q = 0; q < queries; ++q) {
        (void)top_k(pool[static_cast<std::size_t>(q) % pool.size()], det, pool, 5, 1);
    }
    const double nn_serial = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    for (int q = 0; q < queries; ++q) {
        (void)top_k(pool[static_cast<std::size_t>(q) % pool.size()], det, pool, 5, threads);
    }
    const double nn_parallel = seconds_since(t0);
    std::printf("top_k           %4d queries x %zu   serial %7.3fs   parallel %7.3fs   (x%.2f)\n",
                queries, pool.size(), nn_serial, nn_parallel, nn_serial / nn_parallel);

    return 0;
}
