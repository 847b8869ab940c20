#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sublang/trainer.hpp"

namespace sublang {

enum class TargetSpace { Concept, Term };

TargetSpace target_space_from_string(std::string_view name);
std::string to_string(TargetSpace space);

// Neighbors by mean cosine distance (1 - cosine) across all replicates;
// robust to the noise of any single embedding run.
struct AveragedNeighborhood {
    std::string concept_id;
    TargetSpace space = TargetSpace::Concept;
    std::vector<std::pair<std::string, double>> neighbors;  // (bare key, mean distance), ascending
};

// Per replicate, the distance from the concept to every key of the target
// namespace (intersection across replicates; the query is excluded when the
// target space is Concept); distances are averaged element-wise and the k
// smallest returned, ties by key.
AveragedNeighborhood averaged_neighbors(const std::string& concept_id, const ReplicateSet& reps,
                                        TargetSpace space, int k, int jobs = 0);

// concepts x document types grid of averaged neighborhoods. A concept not
// embedded for some type yields an absent cell rather than an error.
struct NeighborTable {
    std::vector<std::string> concepts;
    std::vector<std::string> doc_types;
    TargetSpace space = TargetSpace::Concept;
    int k = 5;
    // cells[concept_index][type_index]; nullopt marks an absent column entry
    std::vector<std::vector<std::optional<AveragedNeighborhood>>> cells;

    std::string to_tsv() const;
    std::string to_text() const;  // aligned table for terminals
    // "concept,doc_type,rank,mean_distance" rows for rank-vs-distance plots
    std::string distances_csv() const;
};

NeighborTable neighbor_table(std::span<const std::string> concepts,
                             std::span<const ReplicateSet> type_reps, TargetSpace space, int k,
                             int jobs = 0);

}  // namespace sublang
