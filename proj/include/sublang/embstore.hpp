#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sublang/embedding_set.hpp"

namespace sublang {

enum class EmbFormat { Text, Binary };

// Text format (canonical): header "<count> <dim>", then one row per vector,
// "<namespace>:<key> <v1> ... <vdim>" at 9 significant digits, which
// round-trips float32 exactly. Binary is a little-endian variant with the
// same logical layout.
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path,
                     EmbFormat format = EmbFormat::Text);
EmbeddingSet load_embeddings(const std::filesystem::path& path, EmbFormat format = EmbFormat::Text);

// u.v / (|u| |v|); throws DataError on dimension mismatch or zero norm.
double cosine(std::span<const float> u, std::span<const float> v);

struct Neighbor {
    std::string key;  // namespaced
    double similarity = 0.0;
};

struct NeighborhoodSet {
    std::string query_key;
    std::vector<Neighbor> neighbors;  // similarity non-increasing, ties by key
};

// The k pool members (query excluded) most cosine-similar to the query.
// Ties break by ascending key so the ordering is total and reproducible.
// Keys are namespaced ("c:...", "t:", "w:", "x:"); the query may live in a
// different namespace than the pool. jobs > 1 parallelizes the similarity
// scan; the result is identical to the serial reference for any jobs value.
NeighborhoodSet top_k(const std::string& query_key, const EmbeddingSet& set,
                      std::span<const std::string> pool, int k, int jobs = 1);

// "rank<TAB>key<TAB>similarity" rows, 1-based rank.
std::string to_tsv(const NeighborhoodSet& hood);

// Resolves a namespaced key; throws DataError when absent.
std::span<const float> vector_of(const EmbeddingSet& set, const std::string& namespaced_key);
double norm_of(const EmbeddingSet& set, const std::string& namespaced_key);

}  // namespace sublang
