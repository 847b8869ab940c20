#include "sublang/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>

#include <omp.h>

#include "sublang/rng.hpp"

namespace sublang {

void TrainConfig::validate() const {
    if (window < 1) throw UsageError("window must be >= 1");
    if (min_freq < 1) throw UsageError("min_freq must be >= 1");
    if (dim < 1) throw UsageError("dim must be >= 1");
    if (!(lr_min > 0.0) || !(lr_min <= lr0)) throw UsageError("need 0 < lr_min <= lr0");
    if (epochs < 1) throw UsageError("epochs must be >= 1");
    if (negatives < 1) throw UsageError("negatives must be >= 1");
    if (!(unigram_power > 0.0)) throw UsageError("unigram_power must be > 0");
}

void Vocabulary::rebuild_indexes() {
    word_index_.clear();
    term_index_.clear();
    concept_index_.clear();
    for (std::uint32_t i = 0; i < words.size(); ++i) word_index_[words[i].token] = i;
    for (std::uint32_t i = 0; i < terms.size(); ++i) term_index_[terms[i].term_id] = i;
    for (std::uint32_t i = 0; i < concepts.size(); ++i) concept_index_[concepts[i].concept_id] = i;
}

std::uint32_t Vocabulary::sample_noise(double u) const {
    const double x = u * noise_cdf.back();
    const auto it = std::upper_bound(noise_cdf.begin(), noise_cdf.end(), x);
    const auto idx = static_cast<std::size_t>(it - noise_cdf.begin());
    return static_cast<std::uint32_t>(std::min(idx, noise_cdf.size() - 1));
}

Vocabulary build_vocab(const AnnotatedCorpus& annotated, const TrainConfig& config) {
    config.validate();

    std::map<std::string, std::uint64_t> word_counts;
    for (const auto& line : annotated.corpus.lines) {
        for (const auto& token : line) ++word_counts[token];
    }
    std::map<std::string, std::uint64_t> term_counts;
    std::map<std::string, double> concept_weights;
    for (const auto& m : annotated.matches) {
        ++term_counts[m.term_id];
        for (const auto& cid : m.concept_ids) concept_weights[cid] += m.weight_per_concept;
    }

    const auto min_freq = static_cast<double>(config.min_freq);
    Vocabulary vocab;
    for (const auto& [token, count] : word_counts) {
        if (count >= static_cast<std::uint64_t>(config.min_freq)) {
            vocab.words.push_back({token, count});
        }
    }
    for (const auto& [term, count] : term_counts) {
        if (count >= static_cast<std::uint64_t>(config.min_freq)) {
            vocab.terms.push_back({term, count});
        }
    }
    for (const auto& [cid, weight] : concept_weights) {
        if (weight >= min_freq) vocab.concepts.push_back({cid, weight});
    }

    if (vocab.words.empty()) {
        throw DataError("vocabulary empty after min_freq filtering; corpus too small");
    }

    // frequent-first ordering; ties stay lexicographic from the maps above
    std::stable_sort(vocab.words.begin(), vocab.words.end(),
                     [](const auto& a, const auto& b) { return a.count > b.count; });
    std::stable_sort(vocab.terms.begin(), vocab.terms.end(),
                     [](const auto& a, const auto& b) { return a.count > b.count; });
    std::stable_sort(vocab.concepts.begin(), vocab.concepts.end(),
                     [](const auto& a, const auto& b) { return a.weighted_count > b.weighted_count; });

    vocab.noise_cdf.reserve(vocab.words.size());
    double cum = 0.0;
    for (const auto& w : vocab.words) {
        cum += std::pow(static_cast<double>(w.count), config.unigram_power);
        vocab.noise_cdf.push_back(cum);
    }

    vocab.rebuild_indexes();
    return vocab;
}

// ---- pair objective -------------------------------------------------------

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log sigma(x), stable for large |x|
inline double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double dot_fd(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

void check_finite(std::span<const float> v, const char* what) {
    for (const float x : v) {
        if (!std::isfinite(x)) throw DataError(std::string("non-finite value in ") + what);
    }
}

}  // namespace

double pair_loss(std::span<const float> target, std::span<const float> context,
                 const std::vector<std::span<const float>>& negatives, double weight) {
    double loss = log_sigmoid(dot_fd(target, context));
    for (const auto& n : negatives) loss += log_sigmoid(-dot_fd(target, n));
    return -weight * loss;
}

PairGradients pair_gradients(std::span<const float> target, std::span<const float> context,
                             const std::vector<std::span<const float>>& negatives, double weight) {
    const std::size_t dim = target.size();
    PairGradients g;
    g.target.assign(dim, 0.0);
    g.context.assign(dim, 0.0);
    g.negatives.resize(negatives.size());

    const double dot_tc = dot_fd(target, context);
    const double coef_pos = weight * (1.0 - sigmoid(dot_tc));  // -dloss/d(t.c)
    g.loss = -weight * log_sigmoid(dot_tc);
    for (std::size_t j = 0; j < dim; ++j) {
        g.target[j] -= coef_pos * static_cast<double>(context[j]);
        g.context[j] -= coef_pos * static_cast<double>(target[j]);
    }
    for (std::size_t k = 0; k < negatives.size(); ++k) {
        const auto& n = negatives[k];
        const double dot_tn = dot_fd(target, n);
        const double coef_neg = weight * sigmoid(dot_tn);  // +dloss/d(t.n)
        g.loss -= weight * log_sigmoid(-dot_tn);
        auto& gn = g.negatives[k];
        gn.assign(dim, 0.0);
        for (std::size_t j = 0; j < dim; ++j) {
            g.target[j] += coef_neg * static_cast<double>(n[j]);
            gn[j] = coef_neg * static_cast<double>(target[j]);
        }
    }
    return g;
}

double pair_step(std::span<float> target, std::span<float> context,
                 const std::vector<std::span<float>>& negatives, double weight, double lr) {
    if (!(weight > 0.0) || weight > 1.0) throw UsageError("weight must be in (0, 1]");
    if (!(lr > 0.0)) throw UsageError("lr must be > 0");
    check_finite(target, "target vector");
    check_finite(context, "context vector");
    for (const auto& n : negatives) check_finite(n, "negative vector");

    std::vector<std::span<const float>> neg_views(negatives.begin(), negatives.end());
    const PairGradients g = pair_gradients(target, context, neg_views, weight);

    const std::size_t dim = target.size();
    for (std::size_t j = 0; j < dim; ++j) {
        context[j] = static_cast<float>(static_cast<double>(context[j]) - lr * g.context[j]);
    }
    for (std::size_t k = 0; k < negatives.size(); ++k) {
        for (std::size_t j = 0; j < dim; ++j) {
            negatives[k][j] =
                static_cast<float>(static_cast<double>(negatives[k][j]) - lr * g.negatives[k][j]);
        }
    }
    for (std::size_t j = 0; j < dim; ++j) {
        target[j] = static_cast<float>(static_cast<double>(target[j]) - lr * g.target[j]);
    }
    return g.loss;
}

// ---- training --------------------------------------------------------------

namespace {

// Corpus resolved against the vocabulary once, shared by all replicates.
struct ResolvedCorpus {
    // per line, per token: retained word id or -1
    std::vector<std::vector<std::int32_t>> word_ids;

    struct ResolvedInstance {
        std::int32_t target_row;  // row in term or concept table
        bool is_term;
        double weight;
    };
    struct ResolvedMatch {
        std::size_t line, start, end;
        std::vector<ResolvedInstance> instances;
    };
    // grouped by line, (start, end) order within a line
    std::vector<std::vector<ResolvedMatch>> line_matches;
};

ResolvedCorpus resolve_corpus(const AnnotatedCorpus& annotated, const Vocabulary& vocab) {
    ResolvedCorpus rc;
    rc.word_ids.resize(annotated.corpus.lines.size());
    rc.line_matches.resize(annotated.corpus.lines.size());
    for (std::size_t l = 0; l < annotated.corpus.lines.size(); ++l) {
        const auto& line = annotated.corpus.lines[l];
        auto& ids = rc.word_ids[l];
        ids.reserve(line.size());
        for (const auto& token : line) {
            ids.push_back(static_cast<std::int32_t>(vocab.word_id(token)));
        }
    }
    for (const auto& m : annotated.matches) {
        ResolvedCorpus::ResolvedMatch rm;
        rm.line = m.line_index;
        rm.start = m.start;
        rm.end = m.end;
        const std::int64_t t = vocab.term_id(m.term_id);
        if (t >= 0) rm.instances.push_back({static_cast<std::int32_t>(t), true, 1.0});
        for (const auto& cid : m.concept_ids) {
            const std::int64_t c = vocab.concept_id(cid);
            if (c >= 0) {
                rm.instances.push_back({static_cast<std::int32_t>(c), false, m.weight_per_concept});
            }
        }
        if (!rm.instances.empty()) rc.line_matches[rm.line].push_back(std::move(rm));
    }
    for (auto& per_line : rc.line_matches) {
        std::sort(per_line.begin(), per_line.end(), [](const auto& a, const auto& b) {
            return a.start != b.start ? a.start < b.start : a.end < b.end;
        });
    }
    return rc;
}

// retained context-word rows within the window, interior of [start, end) excluded
inline void collect_span_context(const std::vector<std::int32_t>& ids, std::size_t start,
                                 std::size_t end, int window,
                                 std::vector<std::int32_t>& out) {
    out.clear();
    const std::size_t lo = start >= static_cast<std::size_t>(window)
                               ? start - static_cast<std::size_t>(window)
                               : 0;
    for (std::size_t q = lo; q < start; ++q) {
        if (ids[q] >= 0) out.push_back(ids[q]);
    }
    const std::size_t hi = std::min(ids.size(), end + static_cast<std::size_t>(window));
    for (std::size_t q = end; q < hi; ++q) {
        if (ids[q] >= 0) out.push_back(ids[q]);
    }
}

class ReplicateTrainer {
  public:
    ReplicateTrainer(const AnnotatedCorpus& annotated, const Vocabulary& vocab,
                     const ResolvedCorpus& rc, const TrainConfig& config, std::uint64_t total_pairs)
        : vocab_(vocab),
          rc_(rc),
          cfg_(config),
          total_pairs_(std::max<std::uint64_t>(total_pairs, 1)),
          dim_(static_cast<std::size_t>(config.dim)) {
        set_.doc_type = annotated.corpus.doc_type;
        set_.dim = config.dim;
        set_.seed = config.seed;
        init_tables();
    }

    EmbeddingSet take() && { return std::move(set_); }

    void run_deterministic() {
        SplitMix64 rng = derived_stream(cfg_.seed, 1);
        Scratch scratch(dim_);
        std::atomic<std::uint64_t> pair_clock{0};
        for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
            for (std::size_t l = 0; l < rc_.word_ids.size(); ++l) {
                train_line(l, rng, scratch, pair_clock);
            }
        }
    }

    void run_parallel(int jobs) {
        const int threads = jobs > 0 ? jobs : omp_get_max_threads();
        const std::size_t n_lines = rc_.word_ids.size();
        std::atomic<std::uint64_t> pair_clock{0};
        // one RNG stream per line block; vector updates race benignly across blocks
        const auto n_blocks = static_cast<std::size_t>(std::max(threads, 1));
        std::vector<SplitMix64> block_rngs;
        block_rngs.reserve(n_blocks);
        for (std::size_t b = 0; b < n_blocks; ++b) {
            block_rngs.push_back(derived_stream(cfg_.seed, 2 + b));
        }
        for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
#pragma omp parallel num_threads(threads)
            {
                Scratch scratch(dim_);
#pragma omp for schedule(static)
                for (std::size_t b = 0; b < n_blocks; ++b) {
                    const std::size_t lo = n_lines * b / n_blocks;
                    const std::size_t hi = n_lines * (b + 1) / n_blocks;
                    for (std::size_t l = lo; l < hi; ++l) {
                        train_line(l, block_rngs[b], scratch, pair_clock);
                    }
                }
            }
        }
    }

  private:
    struct Scratch {
        explicit Scratch(std::size_t dim) : grad(dim, 0.0) {}
        std::vector<double> grad;
        std::vector<std::int32_t> span_ctx;
    };

    void init_tables() {
        SplitMix64 rng = derived_stream(cfg_.seed, 0);
        auto init_table = [&](VectorTable& table, auto key_of, const auto& entries,
                              bool randomize) {
            table.reset(cfg_.dim);
            for (const auto& e : entries) table.add(key_of(e));
            if (randomize) {
                auto& data = table.data();
                const double inv_dim = 1.0 / static_cast<double>(cfg_.dim);
                for (auto& x : data) {
                    x = static_cast<float>((rng.next_double() - 0.5) * inv_dim);
                }
            }
        };
        init_table(set_.words, [](const auto& e) { return e.token; }, vocab_.words, true);
        init_table(set_.terms, [](const auto& e) { return e.term_id; }, vocab_.terms, true);
        init_table(set_.concepts, [](const auto& e) { return e.concept_id; }, vocab_.concepts, true);
        // context table starts at zero
        init_table(set_.contexts, [](const auto& e) { return e.token; }, vocab_.words, false);
    }

    double lr_at(std::uint64_t pair_index) const {
        const double frac = static_cast<double>(pair_index) / static_cast<double>(total_pairs_);
        return std::max(cfg_.lr_min, cfg_.lr0 - (cfg_.lr0 - cfg_.lr_min) * frac);
    }

    // One positive pair plus sampled negatives; negatives equal to the
    // positive context word are skipped rather than redrawn.
    void train_pair(float* target, std::int32_t ctx_word, double weight, SplitMix64& rng,
                    Scratch& scratch, std::atomic<std::uint64_t>& pair_clock) {
        const double lr = lr_at(pair_clock.fetch_add(1, std::memory_order_relaxed));
        float* ctx = set_.contexts.raw(static_cast<std::uint32_t>(ctx_word));
        double* grad = scratch.grad.data();

        const double dot_tc = dot_fd({target, dim_}, {ctx, dim_});
        const double coef_pos = weight * (1.0 - sigmoid(dot_tc));
        for (std::size_t j = 0; j < dim_; ++j) {
            grad[j] = coef_pos * static_cast<double>(ctx[j]);
            ctx[j] = static_cast<float>(static_cast<double>(ctx[j]) +
                                        lr * coef_pos * static_cast<double>(target[j]));
        }
        for (int k = 0; k < cfg_.negatives; ++k) {
            const auto neg = static_cast<std::int32_t>(vocab_.sample_noise(rng.next_double()));
            if (neg == ctx_word) continue;
            float* nv = set_.contexts.raw(static_cast<std::uint32_t>(neg));
            const double dot_tn = dot_fd({target, dim_}, {nv, dim_});
            const double coef_neg = weight * sigmoid(dot_tn);
            for (std::size_t j = 0; j < dim_; ++j) {
                grad[j] -= coef_neg * static_cast<double>(nv[j]);
                nv[j] = static_cast<float>(static_cast<double>(nv[j]) -
                                           lr * coef_neg * static_cast<double>(target[j]));
            }
        }
        for (std::size_t j = 0; j < dim_; ++j) {
            target[j] = static_cast<float>(static_cast<double>(target[j]) + lr * grad[j]);
        }
    }

    void train_line(std::size_t l, SplitMix64& rng, Scratch& scratch,
                    std::atomic<std::uint64_t>& pair_clock) {
        const auto& ids = rc_.word_ids[l];
        const auto window = static_cast<std::size_t>(cfg_.window);

        // word targets against surrounding retained words
        for (std::size_t p = 0; p < ids.size(); ++p) {
            if (ids[p] < 0) continue;
            float* target = set_.words.raw(static_cast<std::uint32_t>(ids[p]));
            const std::size_t lo = p >= window ? p - window : 0;
            const std::size_t hi = std::min(ids.size(), p + window + 1);
            for (std::size_t q = lo; q < hi; ++q) {
                if (q == p || ids[q] < 0) continue;
                train_pair(target, ids[q], 1.0, rng, scratch, pair_clock);
            }
        }

        // term and concept targets against the window around each match
        for (const auto& rm : rc_.line_matches[l]) {
            collect_span_context(ids, rm.start, rm.end, cfg_.window, scratch.span_ctx);
            if (scratch.span_ctx.empty()) continue;
            for (const auto& inst : rm.instances) {
                float* target = inst.is_term
                                    ? set_.terms.raw(static_cast<std::uint32_t>(inst.target_row))
                                    : set_.concepts.raw(static_cast<std::uint32_t>(inst.target_row));
                for (const std::int32_t ctx : scratch.span_ctx) {
                    train_pair(target, ctx, inst.weight, rng, scratch, pair_clock);
                }
            }
        }
    }

    const Vocabulary& vocab_;
    const ResolvedCorpus& rc_;
    TrainConfig cfg_;
    std::uint64_t total_pairs_;
    std::size_t dim_;
    EmbeddingSet set_;
};

ScheduleStats count_schedule_resolved(const ResolvedCorpus& rc, int window) {
    ScheduleStats s;
    const auto w = static_cast<std::size_t>(window);
    std::vector<std::int32_t> ctx;
    for (std::size_t l = 0; l < rc.word_ids.size(); ++l) {
        const auto& ids = rc.word_ids[l];
        for (std::size_t p = 0; p < ids.size(); ++p) {
            if (ids[p] < 0) continue;
            const std::size_t lo = p >= w ? p - w : 0;
            const std::size_t hi = std::min(ids.size(), p + w + 1);
            for (std::size_t q = lo; q < hi; ++q) {
                if (q != p && ids[q] >= 0) ++s.word_pairs;
            }
        }
        for (const auto& rm : rc.line_matches[l]) {
            collect_span_context(ids, rm.start, rm.end, window, ctx);
            for (const auto& inst : rm.instances) {
                if (inst.is_term) {
                    ++s.term_instances;
                    s.term_pairs += ctx.size();
                } else {
                    ++s.concept_instances;
                    s.concept_pairs += ctx.size();
                }
            }
        }
    }
    return s;
}

}  // namespace

ScheduleStats count_schedule(const AnnotatedCorpus& annotated, const Vocabulary& vocab,
                             const TrainConfig& config) {
    config.validate();
    const ResolvedCorpus rc = resolve_corpus(annotated, vocab);
    return count_schedule_resolved(rc, config.window);
}

EmbeddingSet train_replicate(const AnnotatedCorpus& annotated, const Vocabulary& vocab,
                             const TrainConfig& config, TrainMode mode, int jobs) {
    config.validate();
    if (vocab.words.empty()) {
        throw DataError("vocabulary empty after min_freq filtering; corpus too small");
    }
    const ResolvedCorpus rc = resolve_corpus(annotated, vocab);
    const std::uint64_t total_pairs =
        count_schedule_resolved(rc, config.window).pairs_per_epoch() *
        static_cast<std::uint64_t>(config.epochs);

    ReplicateTrainer trainer(annotated, vocab, rc, config, total_pairs);
    if (mode == TrainMode::Deterministic) {
        trainer.run_deterministic();
    } else {
        trainer.run_parallel(jobs);
    }
    EmbeddingSet set = std::move(trainer).take();
    set.recompute_norms();
    return set;
}

ReplicateSet train_replicates(const AnnotatedCorpus& annotated, const TrainConfig& config, int R,
                              TrainMode mode, int jobs) {
    if (R < 1) throw UsageError("replicate count must be >= 1");
    config.validate();

    ReplicateSet out;
    out.doc_type = annotated.corpus.doc_type;
    out.vocab = build_vocab(annotated, config);
    out.replicates.resize(static_cast<std::size_t>(R));

    const ResolvedCorpus rc = resolve_corpus(annotated, out.vocab);
    const std::uint64_t total_pairs =
        count_schedule_resolved(rc, config.window).pairs_per_epoch() *
        static_cast<std::uint64_t>(config.epochs);

    if (mode == TrainMode::Deterministic) {
        const int threads = jobs > 0 ? std::min(jobs, R) : std::min(omp_get_max_threads(), R);
        std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (int i = 0; i < R; ++i) {
            try {
                TrainConfig rep_cfg = config;
                rep_cfg.seed = config.seed + static_cast<std::uint64_t>(i);
                ReplicateTrainer trainer(annotated, out.vocab, rc, rep_cfg, total_pairs);
                trainer.run_deterministic();
                EmbeddingSet set = std::move(trainer).take();
                set.recompute_norms();
                out.replicates[static_cast<std::size_t>(i)] = std::move(set);
            } catch (...) {
#pragma omp critical
                error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
    } else {
        for (int i = 0; i < R; ++i) {
            TrainConfig rep_cfg = config;
            rep_cfg.seed = config.seed + static_cast<std::uint64_t>(i);
            out.replicates[static_cast<std::size_t>(i)] =
                train_replicate(annotated, out.vocab, rep_cfg, TrainMode::Parallel, jobs);
        }
    }
    return out;
}

}  // namespace sublang
