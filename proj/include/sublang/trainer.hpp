#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sublang/embedding_set.hpp"
#include "sublang/matcher.hpp"

namespace sublang {

struct TrainConfig {
    int window = 5;       // context radius in tokens
    int min_freq = 5;     // vocabulary threshold
    int dim = 100;        // embedding dimensionality
    double lr0 = 0.05;    // initial learning rate
    double lr_min = 1e-4; // learning-rate floor
    int epochs = 10;
    int negatives = 5;          // noise samples per pair
    double unigram_power = 0.75;  // noise-distribution exponent
    std::uint64_t seed = 1;

    void validate() const;
};

// Deterministic runs a single update stream and is bit-exact for a given
// seed. Parallel runs lock-free concurrent updates (higher throughput,
// nondeterministic); replicates always parallelize safely across seeds.
enum class TrainMode { Deterministic, Parallel };

// Frequency-filtered id spaces plus the negative-sampling distribution.
class Vocabulary {
  public:
    struct WordEntry {
        std::string token;
        std::uint64_t count = 0;
    };
    struct TermEntry {
        std::string term_id;
        std::uint64_t count = 0;
    };
    struct ConceptEntry {
        std::string concept_id;
        double weighted_count = 0.0;  // sum of per-match weights
    };

    std::vector<WordEntry> words;
    std::vector<TermEntry> terms;
    std::vector<ConceptEntry> concepts;

    // cumulative count^unigram_power over words, for negative sampling
    std::vector<double> noise_cdf;

    std::int64_t word_id(const std::string& token) const { return lookup(word_index_, token); }
    std::int64_t term_id(const std::string& term) const { return lookup(term_index_, term); }
    std::int64_t concept_id(const std::string& cid) const { return lookup(concept_index_, cid); }

    // id of the word whose CDF interval contains u * total; u in [0, 1)
    std::uint32_t sample_noise(double u) const;

    void rebuild_indexes();

  private:
    static std::int64_t lookup(const std::unordered_map<std::string, std::uint32_t>& index,
                               const std::string& key) {
        const auto it = index.find(key);
        return it == index.end() ? -1 : static_cast<std::int64_t>(it->second);
    }

    std::unordered_map<std::string, std::uint32_t> word_index_, term_index_, concept_index_;
};

// Word counts come from raw token frequencies, term counts from match
// occurrences, concept counts from summed match weights; entries below
// min_freq are dropped. Throws DataError when no word survives.
Vocabulary build_vocab(const AnnotatedCorpus& annotated, const TrainConfig& config);

// ---- log-bilinear negative-sampling objective --------------------------
//
// loss(t, c, n_1..n_N) = -weight * [log sigma(t.c) + sum_i log sigma(-t.n_i)]
//
// Vectors are stored as float32; all arithmetic runs in double.

double pair_loss(std::span<const float> target, std::span<const float> context,
                 const std::vector<std::span<const float>>& negatives, double weight);

struct PairGradients {
    double loss = 0.0;
    std::vector<double> target;
    std::vector<double> context;
    std::vector<std::vector<double>> negatives;
};

PairGradients pair_gradients(std::span<const float> target, std::span<const float> context,
                             const std::vector<std::span<const float>>& negatives, double weight);

// One SGD step on the pair loss: every vector moves by -lr * dloss/dv, with
// all gradients taken at the pre-step values. Returns the pre-step loss.
// Throws DataError on non-finite inputs.
double pair_step(std::span<float> target, std::span<float> context,
                 const std::vector<std::span<float>>& negatives, double weight, double lr);

// ---- training ------------------------------------------------------------

// Scheduled work per epoch; fixes the linear learning-rate decay horizon.
struct ScheduleStats {
    std::uint64_t word_pairs = 0;
    std::uint64_t term_instances = 0;     // matches whose term survived min_freq
    std::uint64_t concept_instances = 0;  // per surviving (match, concept)
    std::uint64_t term_pairs = 0;
    std::uint64_t concept_pairs = 0;

    std::uint64_t pairs_per_epoch() const { return word_pairs + term_pairs + concept_pairs; }
};

ScheduleStats count_schedule(const AnnotatedCorpus& annotated, const Vocabulary& vocab,
                             const TrainConfig& config);

// Trains one embedding set. Word targets pair with every retained context
// word within `window` tokens; each match trains its term plus each mapped
// concept (weight 1/k) against the window around the matched span, interior
// tokens excluded. jobs caps threads in Parallel mode.
EmbeddingSet train_replicate(const AnnotatedCorpus& annotated, const Vocabulary& vocab,
                             const TrainConfig& config, TrainMode mode = TrainMode::Deterministic,
                             int jobs = 0);

struct ReplicateSet {
    std::string doc_type;
    std::vector<EmbeddingSet> replicates;
    Vocabulary vocab;  // shared across replicates; empty when loaded from files
};

// Builds the vocabulary once and trains R replicates, replicate i seeded
// with config.seed + i. In Deterministic mode replicates run in parallel
// (each one is internally serial); in Parallel mode they run one after
// another with jobs worker threads each.
ReplicateSet train_replicates(const AnnotatedCorpus& annotated, const TrainConfig& config, int R,
                              TrainMode mode = TrainMode::Deterministic, int jobs = 0);

}  // namespace sublang
