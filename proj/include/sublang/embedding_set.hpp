#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sublang/errors.hpp"

namespace sublang {

// Embedding namespaces. Keys are serialized as "<namespace>:<key>".
enum class Space : char { Word = 'w', Term = 't', Concept = 'c', Context = 'x' };

inline char to_char(Space s) { return static_cast<char>(s); }

inline Space space_from_char(char c) {
    switch (c) {
        case 'w': return Space::Word;
        case 't': return Space::Term;
        case 'c': return Space::Concept;
        case 'x': return Space::Context;
        default: throw DataError(std::string("unknown embedding namespace: ") + c);
    }
}

inline std::string namespaced_key(Space s, const std::string& key) {
    std::string out(1, to_char(s));
    out.push_back(':');
    out += key;
    return out;
}

// One keyed table of dim-length float vectors with cached L2 norms.
class VectorTable {
  public:
    void reset(int dim) {
        dim_ = dim;
        keys_.clear();
        index_.clear();
        data_.clear();
        norms_.clear();
    }

    std::uint32_t add(std::string key) {
        const auto id = static_cast<std::uint32_t>(keys_.size());
        if (!index_.emplace(key, id).second) throw DataError("duplicate key: " + key);
        keys_.push_back(std::move(key));
        data_.resize(data_.size() + static_cast<std::size_t>(dim_), 0.0f);
        return id;
    }

    std::size_t size() const { return keys_.size(); }
    int dim() const { return dim_; }
    const std::vector<std::string>& keys() const { return keys_; }

    bool contains(const std::string& key) const { return index_.count(key) != 0; }

    // -1 when absent
    std::int64_t row_of(const std::string& key) const {
        const auto it = index_.find(key);
        return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
    }

    std::span<const float> vec(std::uint32_t row) const {
        return {data_.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(dim_),
                static_cast<std::size_t>(dim_)};
    }
    std::span<float> vec_mut(std::uint32_t row) {
        return {data_.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(dim_),
                static_cast<std::size_t>(dim_)};
    }

    float* raw(std::uint32_t row) {
        return data_.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(dim_);
    }

    // Cached ||v||; recompute_norms must run after vectors change.
    double norm(std::uint32_t row) const { return norms_[row]; }
    void recompute_norms();

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

  private:
    int dim_ = 0;
    std::vector<std::string> keys_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<float> data_;
    std::vector<double> norms_;
};

struct TrainConfig;  // trainer.hpp

// One trained replicate: target tables for words, terms, and concepts plus
// the shared context-word table, all in one vector space.
struct EmbeddingSet {
    std::string doc_type;
    int dim = 0;
    std::uint64_t seed = 0;  // replicate seed, 0 when loaded from file
    VectorTable words, terms, concepts, contexts;

    VectorTable& table(Space s) {
        switch (s) {
            case Space::Word: return words;
            case Space::Term: return terms;
            case Space::Concept: return concepts;
            default: return contexts;
        }
    }
    const VectorTable& table(Space s) const {
        return const_cast<EmbeddingSet*>(this)->table(s);
    }

    std::size_t row_count() const {
        return words.size() + terms.size() + concepts.size() + contexts.size();
    }

    void recompute_norms() {
        words.recompute_norms();
        terms.recompute_norms();
        concepts.recompute_norms();
        contexts.recompute_norms();
    }
};

}  // namespace sublang
