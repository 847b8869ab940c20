#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "sublang/embstore.hpp"
#include "sublang/errors.hpp"
#include "sublang/rng.hpp"
#include "sublang/trainer.hpp"

using namespace sublang;

namespace {

std::vector<std::string> toks(std::initializer_list<const char*> list) {
    return {list.begin(), list.end()};
}

AnnotatedCorpus corpus_from_lines(std::vector<std::vector<std::string>> lines) {
    AnnotatedCorpus annotated;
    annotated.corpus.doc_type = "synthetic";
    annotated.corpus.lines = std::move(lines);
    annotated.corpus.stats.doc_count = 1;
    annotated.corpus.stats.line_count = annotated.corpus.lines.size();
    for (const auto& line : annotated.corpus.lines) {
        annotated.corpus.stats.token_count += line.size();
    }
    return annotated;
}

void add_match(AnnotatedCorpus& annotated, std::size_t line, std::size_t start, std::size_t end,
               std::string term_id, std::vector<std::string> concepts) {
    MatchInstance m;
    m.line_index = line;
    m.start = start;
    m.end = end;
    m.term_id = std::move(term_id);
    m.concept_ids = std::move(concepts);
    m.weight_per_concept = 1.0 / static_cast<double>(m.concept_ids.size());
    annotated.matches.push_back(std::move(m));
    annotated.stats.match_count = annotated.matches.size();
}

bool tables_equal(const VectorTable& a, const VectorTable& b) {
    return a.keys() == b.keys() && a.data() == b.data();
}

bool sets_equal(const EmbeddingSet& a, const EmbeddingSet& b) {
    return tables_equal(a.words, b.words) && tables_equal(a.terms, b.terms) &&
           tables_equal(a.concepts, b.concepts) && tables_equal(a.contexts, b.contexts);
}

bool all_finite(const EmbeddingSet& set) {
    for (const Space s : {Space::Word, Space::Term, Space::Concept, Space::Context}) {
        for (const float x : set.table(s).data()) {
            if (!std::isfinite(x)) return false;
        }
    }
    return true;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace

TEST_CASE("build_vocab applies min_freq per namespace") {
    // "the" x7 retained at min_freq 5; "rare" x4 dropped
    std::vector<std::vector<std::string>> lines;
    for (int i = 0; i < 7; ++i) lines.push_back(toks({"the", "filler"}));
    for (int i = 0; i < 4; ++i) lines.push_back(toks({"rare"}));
    AnnotatedCorpus annotated = corpus_from_lines(std::move(lines));

    TrainConfig cfg;
    cfg.min_freq = 5;
    SUBCASE("word threshold") {
        const Vocabulary vocab = build_vocab(annotated, cfg);
        CHECK(vocab.word_id("the") >= 0);
        CHECK(vocab.word_id("filler") >= 0);
        CHECK(vocab.word_id("rare") == -1);
    }
    SUBCASE("term occurring 4 times is dropped") {
        for (int i = 0; i < 4; ++i) add_match(annotated, 0, 0, 1, "the", {"C9"});
        const Vocabulary vocab = build_vocab(annotated, cfg);
        CHECK(vocab.term_id("the") == -1);
        CHECK(vocab.concept_id("C9") == -1);  // 4 x 1.0 = 4.0 < 5
    }
    SUBCASE("2-concept string occurring 8 times leaves weight 4.0 per concept, dropped") {
        for (int i = 0; i < 8; ++i) add_match(annotated, 0, 0, 1, "the", {"CX", "CY"});
        const Vocabulary vocab = build_vocab(annotated, cfg);
        CHECK(vocab.term_id("the") >= 0);  // term count 8 >= 5
        CHECK(vocab.concept_id("CX") == -1);
        CHECK(vocab.concept_id("CY") == -1);
        // at min_freq 4 the 4.0 weighted count survives
        TrainConfig loose = cfg;
        loose.min_freq = 4;
        const Vocabulary vocab4 = build_vocab(annotated, loose);
        const auto cx = vocab4.concept_id("CX");
        REQUIRE(cx >= 0);
        CHECK(vocab4.concepts[static_cast<std::size_t>(cx)].weighted_count ==
              doctest::Approx(4.0).epsilon(1e-12));
    }
    SUBCASE("empty vocabulary is an error") {
        TrainConfig strict = cfg;
        strict.min_freq = 100;
        CHECK_THROWS_AS(build_vocab(annotated, strict), DataError);
    }
    SUBCASE("noise table follows count^0.75") {
        const Vocabulary vocab = build_vocab(annotated, cfg);
        REQUIRE(vocab.noise_cdf.size() == vocab.words.size());
        double prev = 0.0;
        for (std::size_t i = 0; i < vocab.words.size(); ++i) {
            const double mass = vocab.noise_cdf[i] - prev;
            CHECK(mass ==
                  doctest::Approx(std::pow(static_cast<double>(vocab.words[i].count), 0.75))
                      .epsilon(1e-12));
            prev = vocab.noise_cdf[i];
        }
    }
}

TEST_CASE("pair_loss matches hand values") {
    // t.c = 0 and one negative with t.n = 0: loss = -2 log 0.5 = 2 log 2
    std::vector<float> t = {0.0f, 0.0f}, c = {1.0f, 0.0f}, n = {0.0f, 1.0f};
    const double loss = pair_loss(t, c, {std::span<const float>(n)}, 1.0);
    CHECK(loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    // weight scales the loss
    const double half = pair_loss(t, c, {std::span<const float>(n)}, 0.5);
    CHECK(half == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("zero context and no negatives leaves the target unchanged") {
    std::vector<float> t = {0.25f, -0.5f, 0.125f};
    std::vector<float> c = {0.0f, 0.0f, 0.0f};
    const std::vector<float> t_before = t;
    pair_step(t, c, {}, 1.0, 0.05);
    CHECK(t == t_before);  // gradient (1 - sigma(0)) * 0 vanishes
}

TEST_CASE("analytic gradients match central finite differences") {
    SplitMix64 rng(99);
    const double h = 1e-5;
    for (int iter = 0; iter < 40; ++iter) {
        const std::size_t dim = 10;
        const int n_negs = 1 + static_cast<int>(rng.next_below(4));
        const double weight = iter % 3 == 0 ? 1.0 : (iter % 3 == 1 ? 0.5 : 0.25);

        auto random_vec = [&]() {
            std::vector<float> v(dim);
            for (auto& x : v) x = static_cast<float>(rng.next_double() - 0.5);
            return v;
        };
        std::vector<float> target = random_vec(), context = random_vec();
        std::vector<std::vector<float>> negatives;
        for (int k = 0; k < n_negs; ++k) negatives.push_back(random_vec());

        auto views = [&]() {
            std::vector<std::span<const float>> v;
            for (const auto& n : negatives) v.emplace_back(n);
            return v;
        };
        const PairGradients grads = pair_gradients(target, context, views(), weight);

        // central differences with the realized float step
        auto fd = [&](std::vector<float>& vec, std::size_t j) {
            const float orig = vec[j];
            const auto plus = static_cast<float>(static_cast<double>(orig) + h);
            const auto minus = static_cast<float>(static_cast<double>(orig) - h);
            vec[j] = plus;
            const double loss_plus = pair_loss(target, context, views(), weight);
            vec[j] = minus;
            const double loss_minus = pair_loss(target, context, views(), weight);
            vec[j] = orig;
            return (loss_plus - loss_minus) /
                   (static_cast<double>(plus) - static_cast<double>(minus));
        };

        for (std::size_t j = 0; j < dim; ++j) {
            CHECK(rel_err(grads.target[j], fd(target, j)) < 1e-5);
            CHECK(rel_err(grads.context[j], fd(context, j)) < 1e-5);
        }
        for (int k = 0; k < n_negs; ++k) {
            for (std::size_t j = 0; j < dim; ++j) {
                CHECK(rel_err(grads.negatives[static_cast<std::size_t>(k)][j],
                              fd(negatives[static_cast<std::size_t>(k)], j)) < 1e-5);
            }
        }
    }
}

TEST_CASE("pair_step reduces the loss at small lr and rejects bad input") {
    SplitMix64 rng(123);
    for (int iter = 0; iter < 50; ++iter) {
        const std::size_t dim = 8;
        auto random_vec = [&]() {
            std::vector<float> v(dim);
            for (auto& x : v) x = static_cast<float>(rng.next_double() - 0.5);
            return v;
        };
        std::vector<float> t = random_vec(), c = random_vec();
        std::vector<std::vector<float>> negs = {random_vec(), random_vec()};
        const std::vector<std::span<float>> neg_spans = {negs[0], negs[1]};
        const std::vector<std::span<const float>> neg_views = {negs[0], negs[1]};

        const double before = pair_loss(t, c, neg_views, 1.0);
        CHECK(before > 0.0);
        const double returned = pair_step(t, c, neg_spans, 1.0, 1e-3);
        CHECK(returned == doctest::Approx(before).epsilon(1e-12));
        const double after = pair_loss(t, c, neg_views, 1.0);
        CHECK(after < before);
    }

    std::vector<float> bad = {std::numeric_limits<float>::quiet_NaN(), 0.0f};
    std::vector<float> ok = {0.1f, 0.2f};
    CHECK_THROWS_AS(pair_step(bad, ok, {}, 1.0, 0.1), DataError);
    CHECK_THROWS_AS(pair_step(ok, bad, {}, 1.0, 0.1), DataError);
}

namespace {

AnnotatedCorpus tiny_training_corpus() {
    // 6 lines of 4 retained words plus a matched term on most lines
    AnnotatedCorpus annotated = corpus_from_lines({
        toks({"alpha", "beta", "gamma", "delta"}),
        toks({"beta", "alpha", "delta", "gamma"}),
        toks({"gamma", "delta", "alpha", "beta"}),
        toks({"delta", "gamma", "beta", "alpha"}),
        toks({"alpha", "delta", "beta", "gamma"}),
        toks({"beta", "gamma", "alpha", "delta"}),
    });
    for (std::size_t l = 0; l < 5; ++l) {
        add_match(annotated, l, 1, 2, "beta", {"C1"});
    }
    return annotated;
}

}  // namespace

TEST_CASE("deterministic training is bit-identical for equal seeds") {
    const AnnotatedCorpus annotated = tiny_training_corpus();
    TrainConfig cfg;
    cfg.min_freq = 2;
    cfg.dim = 8;
    cfg.epochs = 3;
    cfg.window = 2;
    cfg.seed = 42;
    const Vocabulary vocab = build_vocab(annotated, cfg);

    const EmbeddingSet a = train_replicate(annotated, vocab, cfg);
    const EmbeddingSet b = train_replicate(annotated, vocab, cfg);
    CHECK(sets_equal(a, b));

    TrainConfig other = cfg;
    other.seed = 43;
    const EmbeddingSet c = train_replicate(annotated, vocab, other);
    CHECK(!sets_equal(a, c));

    SUBCASE("saved files are byte-identical too") {
        namespace fs = std::filesystem;
        const fs::path pa = fs::temp_directory_path() / "sublang_det_a.emb";
        const fs::path pb = fs::temp_directory_path() / "sublang_det_b.emb";
        save_embeddings(a, pa);
        save_embeddings(b, pb);
        std::ifstream fa(pa, std::ios::binary), fb(pb, std::ios::binary);
        std::stringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        CHECK(sa.str() == sb.str());
        CHECK(!sa.str().empty());
    }
}

TEST_CASE("zero matches trains words only") {
    AnnotatedCorpus annotated = tiny_training_corpus();
    annotated.matches.clear();
    annotated.stats.match_count = 0;
    TrainConfig cfg;
    cfg.min_freq = 2;
    cfg.dim = 4;
    cfg.epochs = 1;
    const Vocabulary vocab = build_vocab(annotated, cfg);
    const EmbeddingSet set = train_replicate(annotated, vocab, cfg);
    CHECK(set.terms.size() == 0);
    CHECK(set.concepts.size() == 0);
    CHECK(set.words.size() == 4);
    CHECK(all_finite(set));
}

TEST_CASE("schedule counts match hand enumeration") {
    // two lines "a b c", window 1; per line: a->b, b->a, b->c, c->b = 4 word
    // pairs. Each line has a match [1,2) mapping {C1, C2}; two occurrences
    // put each concept at weighted count 2 x 0.5 = 1.0, clearing min_freq 1.
    // Per line: context {a, c}; 1 term instance (2 pairs), 2 concept
    // instances (4 pairs).
    AnnotatedCorpus annotated =
        corpus_from_lines({toks({"a", "b", "c"}), toks({"a", "b", "c"})});
    add_match(annotated, 0, 1, 2, "b", {"C1", "C2"});
    add_match(annotated, 1, 1, 2, "b", {"C1", "C2"});
    TrainConfig cfg;
    cfg.min_freq = 1;
    cfg.window = 1;
    const Vocabulary vocab = build_vocab(annotated, cfg);
    REQUIRE(vocab.concept_id("C1") >= 0);

    const ScheduleStats stats = count_schedule(annotated, vocab, cfg);
    CHECK(stats.word_pairs == 8);
    CHECK(stats.term_instances == 2);
    CHECK(stats.concept_instances == 4);
    CHECK(stats.term_pairs == 4);
    CHECK(stats.concept_pairs == 8);
    CHECK(stats.pairs_per_epoch() == 20);

    SUBCASE("dropped term still trains retained concepts") {
        TrainConfig strict = cfg;
        strict.min_freq = 2;
        AnnotatedCorpus more = corpus_from_lines({toks({"a", "b", "c"}), toks({"a", "b", "c"})});
        add_match(more, 0, 1, 2, "b", {"C1"});
        add_match(more, 1, 0, 1, "a", {"C1"});
        const Vocabulary vocab2 = build_vocab(more, strict);
        CHECK(vocab2.term_id("b") == -1);  // 1 occurrence each
        CHECK(vocab2.term_id("a") == -1);
        CHECK(vocab2.concept_id("C1") >= 0);  // weight 2.0
        const ScheduleStats s2 = count_schedule(more, vocab2, strict);
        CHECK(s2.term_instances == 0);
        CHECK(s2.concept_instances == 2);
    }
    SUBCASE("window excludes the matched span interior") {
        // match [0,2) on "a b c", window 1: context = {c} only
        AnnotatedCorpus span2 = corpus_from_lines({toks({"a", "b", "c"})});
        add_match(span2, 0, 0, 2, "a_b", {"C1"});
        const Vocabulary v2 = build_vocab(span2, cfg);
        const ScheduleStats s2 = count_schedule(span2, v2, cfg);
        CHECK(s2.concept_pairs == 1);
        CHECK(s2.term_instances == 1);
        CHECK(s2.term_pairs == 1);
    }
}

TEST_CASE("concept embeddings move toward their context cluster") {
    // concept CC only ever co-occurs with cluster {w1..w5}; noise words n*
    // appear in separate lines
    SplitMix64 rng(7);
    std::vector<std::vector<std::string>> lines;
    auto cluster_word = [&]() { return "w" + std::to_string(1 + rng.next_below(5)); };
    auto noise_word = [&]() { return "n" + std::to_string(1 + rng.next_below(10)); };
    for (int i = 0; i < 150; ++i) {
        lines.push_back({cluster_word(), cluster_word(), "cterm", cluster_word(), cluster_word()});
        lines.push_back({noise_word(), noise_word(), noise_word(), noise_word(), noise_word()});
    }
    AnnotatedCorpus annotated = corpus_from_lines(std::move(lines));
    for (std::size_t l = 0; l < annotated.corpus.lines.size(); l += 2) {
        add_match(annotated, l, 2, 3, "cterm", {"CC"});
    }

    TrainConfig cfg;
    cfg.min_freq = 3;
    cfg.dim = 16;
    cfg.epochs = 8;
    cfg.window = 2;
    cfg.seed = 11;
    const Vocabulary vocab = build_vocab(annotated, cfg);
    REQUIRE(vocab.concept_id("CC") >= 0);
    const EmbeddingSet set = train_replicate(annotated, vocab, cfg);
    REQUIRE(all_finite(set));

    const auto concept_vec = vector_of(set, "c:CC");
    double worst_cluster = 2.0, best_noise = -2.0;
    for (int i = 1; i <= 5; ++i) {
        const double sim = cosine(concept_vec, vector_of(set, "x:w" + std::to_string(i)));
        worst_cluster = std::min(worst_cluster, sim);
    }
    for (int i = 1; i <= 10; ++i) {
        const double sim = cosine(concept_vec, vector_of(set, "x:n" + std::to_string(i)));
        best_noise = std::max(best_noise, sim);
    }
    CHECK(worst_cluster > best_noise);
}

TEST_CASE("train_replicates shares vocabulary and varies seeds") {
    const AnnotatedCorpus annotated = tiny_training_corpus();
    TrainConfig cfg;
    cfg.min_freq = 2;
    cfg.dim = 8;
    cfg.epochs = 2;
    cfg.seed = 100;

    SUBCASE("R = 10 yields seeds 100..109") {
        const ReplicateSet reps = train_replicates(annotated, cfg, 10);
        REQUIRE(reps.replicates.size() == 10);
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(reps.replicates[i].seed == 100 + i);
        }
    }
    SUBCASE("R = 1 is a valid replicate set") {
        const ReplicateSet reps = train_replicates(annotated, cfg, 1);
        CHECK(reps.replicates.size() == 1);
    }
    SUBCASE("R = 0 is rejected") {
        CHECK_THROWS_AS(train_replicates(annotated, cfg, 0), UsageError);
    }
    SUBCASE("replicates share keys but differ in vectors") {
        const ReplicateSet reps = train_replicates(annotated, cfg, 3);
        CHECK(reps.replicates[0].words.keys() == reps.replicates[1].words.keys());
        CHECK(reps.replicates[0].concepts.keys() == reps.replicates[2].concepts.keys());
        CHECK(!sets_equal(reps.replicates[0], reps.replicates[1]));
        for (const auto& set : reps.replicates) CHECK(all_finite(set));
    }
    SUBCASE("replicate i equals a solo run with seed + i") {
        const ReplicateSet reps = train_replicates(annotated, cfg, 3);
        TrainConfig solo = cfg;
        solo.seed = cfg.seed + 2;
        const Vocabulary vocab = build_vocab(annotated, cfg);
        const EmbeddingSet direct = train_replicate(annotated, vocab, solo);
        CHECK(sets_equal(reps.replicates[2], direct));
    }
}

TEST_CASE("parallel mode stays finite and keeps the schedule") {
    const AnnotatedCorpus annotated = tiny_training_corpus();
    TrainConfig cfg;
    cfg.min_freq = 2;
    cfg.dim = 8;
    cfg.epochs = 2;
    const Vocabulary vocab = build_vocab(annotated, cfg);
    const EmbeddingSet set = train_replicate(annotated, vocab, cfg, TrainMode::Parallel, 2);
    CHECK(all_finite(set));
    CHECK(set.words.size() == vocab.words.size());
}
