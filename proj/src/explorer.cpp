#include "sublang/explorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sublang/embstore.hpp"

namespace sublang {

TargetSpace target_space_from_string(std::string_view name) {
    if (name == "concept") return TargetSpace::Concept;
    if (name == "term") return TargetSpace::Term;
    throw UsageError("unknown target space: " + std::string(name) + " (expected concept or term)");
}

std::string to_string(TargetSpace space) {
    return space == TargetSpace::Concept ? "concept" : "term";
}

AveragedNeighborhood averaged_neighbors(const std::string& concept_id, const ReplicateSet& reps,
                                        TargetSpace space, int k, int) {
    if (k < 1) throw UsageError("k must be >= 1");
    if (reps.replicates.empty()) throw UsageError("empty replicate set");
    const Space target_ns = space == TargetSpace::Concept ? Space::Concept : Space::Term;

    // candidate keys shared by every replicate
    std::vector<std::string> candidates = reps.replicates.front().table(target_ns).keys();
    std::sort(candidates.begin(), candidates.end());
    for (std::size_t r = 1; r < reps.replicates.size(); ++r) {
        const auto& table = reps.replicates[r].table(target_ns);
        std::erase_if(candidates, [&](const std::string& key) { return !table.contains(key); });
    }
    if (space == TargetSpace::Concept) {
        std::erase(candidates, concept_id);
    }

    std::vector<double> mean_dist(candidates.size(), 0.0);
    const std::string query = namespaced_key(Space::Concept, concept_id);
    for (std::size_t r = 0; r < reps.replicates.size(); ++r) {
        const EmbeddingSet& set = reps.replicates[r];
        if (!set.concepts.contains(concept_id)) {
            throw DataError("concept " + concept_id + " missing from replicate " +
                            std::to_string(r) + " of " + reps.doc_type);
        }
        const auto qvec = vector_of(set, query);
        const double qnorm = norm_of(set, query);
        if (qnorm == 0.0) throw DataError("zero-norm query vector: " + query);
        const VectorTable& table = set.table(target_ns);
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const auto row = static_cast<std::uint32_t>(table.row_of(candidates[i]));
            const auto vec = table.vec(row);
            double dot = 0.0;
            for (std::size_t j = 0; j < vec.size(); ++j) {
                dot += static_cast<double>(qvec[j]) * static_cast<double>(vec[j]);
            }
            const double norm = table.norm(row);
            if (norm == 0.0) throw DataError("zero-norm vector: " + candidates[i]);
            mean_dist[i] += 1.0 - dot / (qnorm * norm);
        }
    }
    const auto R = static_cast<double>(reps.replicates.size());
    for (auto& d : mean_dist) d /= R;

    std::vector<std::uint32_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          if (mean_dist[a] != mean_dist[b]) return mean_dist[a] < mean_dist[b];
                          return candidates[a] < candidates[b];
                      });

    AveragedNeighborhood out;
    out.concept_id = concept_id;
    out.space = space;
    out.neighbors.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.neighbors.emplace_back(candidates[order[i]], mean_dist[order[i]]);
    }
    return out;
}

NeighborTable neighbor_table(std::span<const std::string> concepts,
                             std::span<const ReplicateSet> type_reps, TargetSpace space, int k,
                             int jobs) {
    NeighborTable table;
    table.concepts.assign(concepts.begin(), concepts.end());
    for (const auto& reps : type_reps) table.doc_types.push_back(reps.doc_type);
    table.space = space;
    table.k = k;
    table.cells.assign(concepts.size(),
                       std::vector<std::optional<AveragedNeighborhood>>(type_reps.size()));

    for (std::size_t c = 0; c < concepts.size(); ++c) {
        for (std::size_t t = 0; t < type_reps.size(); ++t) {
            const bool embedded_everywhere = std::all_of(
                type_reps[t].replicates.begin(), type_reps[t].replicates.end(),
                [&](const EmbeddingSet& set) { return set.concepts.contains(concepts[c]); });
            if (embedded_everywhere && !type_reps[t].replicates.empty()) {
                table.cells[c][t] = averaged_neighbors(concepts[c], type_reps[t], space, k, jobs);
            }
        }
    }
    return table;
}

namespace {

std::string format_distance(double d) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", d);
    return buf;
}

}  // namespace

std::string NeighborTable::to_tsv() const {
    std::ostringstream out;
    out << "concept\tdoc_type\trank\tneighbor\tmean_distance\n";
    for (std::size_t c = 0; c < concepts.size(); ++c) {
        for (std::size_t t = 0; t < doc_types.size(); ++t) {
            if (!cells[c][t]) {
                out << concepts[c] << '\t' << doc_types[t] << "\t-\tABSENT\t-\n";
                continue;
            }
            const auto& hood = *cells[c][t];
            for (std::size_t r = 0; r < hood.neighbors.size(); ++r) {
                char num[32];
                std::snprintf(num, sizeof num, "%.9g", hood.neighbors[r].second);
                out << concepts[c] << '\t' << doc_types[t] << '\t' << (r + 1) << '\t'
                    << hood.neighbors[r].first << '\t' << num << '\n';
            }
        }
    }
    return out.str();
}

std::string NeighborTable::to_text() const {
    std::ostringstream out;
    for (std::size_t c = 0; c < concepts.size(); ++c) {
        out << "query: " << concepts[c] << "  (" << sublang::to_string(space) << " space)\n";

        std::vector<std::vector<std::string>> columns;
        std::size_t rows = 0;
        for (std::size_t t = 0; t < doc_types.size(); ++t) {
            std::vector<std::string> col;
            col.push_back(doc_types[t]);
            if (!cells[c][t]) {
                col.push_back("(absent)");
            } else {
                for (const auto& [key, dist] : cells[c][t]->neighbors) {
                    col.push_back(key + " (" + format_distance(dist) + ")");
                }
            }
            rows = std::max(rows, col.size());
            columns.push_back(std::move(col));
        }
        std::vector<std::size_t> widths;
        for (const auto& col : columns) {
            std::size_t w = 0;
            for (const auto& cell : col) w = std::max(w, cell.size());
            widths.push_back(w);
        }
        for (std::size_t r = 0; r < rows; ++r) {
            out << "  ";
            for (std::size_t t = 0; t < columns.size(); ++t) {
                const std::string& cell = r < columns[t].size() ? columns[t][r] : "";
                out << cell << std::string(widths[t] - cell.size() + 2, ' ');
            }
            out << '\n';
            if (r == 0) {
                out << "  ";
                for (std::size_t t = 0; t < columns.size(); ++t) {
                    out << std::string(widths[t], '-') << "  ";
                }
                out << '\n';
            }
        }
        out << '\n';
    }
    return out.str();
}

std::string NeighborTable::distances_csv() const {
    std::ostringstream out;
    out << "concept,doc_type,rank,mean_distance\n";
    for (std::size_t c = 0; c < concepts.size(); ++c) {
        for (std::size_t t = 0; t < doc_types.size(); ++t) {
            if (!cells[c][t]) continue;
            const auto& hood = *cells[c][t];
            for (std::size_t r = 0; r < hood.neighbors.size(); ++r) {
                char num[32];
                std::snprintf(num, sizeof num, "%.9g", hood.neighbors[r].second);
                out << concepts[c] << ',' << doc_types[t] << ',' << (r + 1) << ',' << num << '\n';
            }
        }
    }
    return out.str();
}

}  // namespace sublang
