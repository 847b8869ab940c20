#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sublang/trainer.hpp"

namespace sublang {

struct AnalysisConfig {
    int k = 5;               // neighbors per query
    double threshold = 0.5;  // high-confidence cutoff, inclusive
    int replicates = 10;     // expected replicate count

    void validate() const;
};

struct ConsistencyRecord {
    std::string concept_id;
    double value = 0.0;  // mean pairwise overlap; deltas may be negative
    std::uint64_t pair_count = 0;
};

// |A intersect B| / k for two top-k neighbor key sets.
double overlap(std::span<const std::string> a, std::span<const std::string> b, int k);

// Mean overlap of the concept's top-k neighborhoods over all C(R,2)
// unordered replicate pairs. The neighbor pool is restricted to
// pool_concepts (bare concept ids; the query itself is excluded).
ConsistencyRecord self_consistency(const std::string& concept_id, const ReplicateSet& reps,
                                   std::span<const std::string> pool_concepts,
                                   const AnalysisConfig& cfg);

struct HighConfidenceResult {
    std::vector<ConsistencyRecord> all;       // every concept, by concept_id
    std::vector<ConsistencyRecord> retained;  // self-consistency >= threshold
    double retained_mean = 0.0;               // 0 when nothing is retained
};

// Self-consistency of every concept embedded in all replicates, with the
// full concept namespace as the neighbor pool; retains those >= threshold.
// An empty retained set is a valid outcome.
HighConfidenceResult high_confidence(const ReplicateSet& reps, const AnalysisConfig& cfg,
                                     int jobs = 0);

// Mean overlap over all R_ref x R_cmp ordered replicate pairs. With
// cmp == ref this includes the R identical self-pairs; that degenerate call
// is exercised by tests only.
ConsistencyRecord cross_type_consistency(const std::string& concept_id, const ReplicateSet& ref,
                                         const ReplicateSet& cmp,
                                         std::span<const std::string> pool_concepts,
                                         const AnalysisConfig& cfg);

enum class ShareMode { RefHighConf, BothHighConf };

ShareMode share_mode_from_string(std::string_view name);
std::string to_string(ShareMode mode);

struct ComparisonMeans {
    double reference = 0.0;
    double comparison = 0.0;
    double cross = 0.0;
    double delta = 0.0;
};

// The four per-concept distributions for an ordered document-type pair, all
// indexed by shared_concepts. Within this report every distribution is the
// mean over all RxR ordered replicate pairs (self-pairs included on the
// within-type side as well), which makes compare_types(X, X) yield exactly
// zero deltas; the standalone self_consistency keeps the C(R,2) convention.
struct ComparisonReport {
    std::string reference_type, comparison_type;
    ShareMode mode = ShareMode::RefHighConf;
    std::vector<std::string> shared_concepts;  // sorted
    std::vector<ConsistencyRecord> reference_consistency;
    std::vector<ConsistencyRecord> comparison_consistency;
    std::vector<ConsistencyRecord> cross_consistency;
    std::vector<ConsistencyRecord> deltas;  // reference - cross, sign preserved
    ComparisonMeans means;

    bool empty() const { return shared_concepts.empty(); }
};

// Shared set: high-confidence concepts of the reference present in the
// comparison vocabulary (RefHighConf) or high-confidence in both
// (BothHighConf). Neighbor pools are restricted to the shared set. An empty
// shared set produces an empty report, not an error.
ComparisonReport compare_types(const ReplicateSet& ref, const ReplicateSet& cmp,
                               const AnalysisConfig& cfg, ShareMode mode, int jobs = 0);

struct Regression {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// OLS of y on log(x) for points (corpus token count, mean consistency).
// R^2 = 1 - SS_res/SS_tot, defined as 0 when SS_tot == 0. Needs at least
// two distinct x values.
Regression size_regression(std::span<const std::pair<double, double>> points);

}  // namespace sublang
