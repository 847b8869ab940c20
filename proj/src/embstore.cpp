#include "sublang/embstore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <omp.h>

#include "sublang/errors.hpp"

namespace sublang {

void VectorTable::recompute_norms() {
    norms_.resize(keys_.size());
    for (std::uint32_t i = 0; i < keys_.size(); ++i) {
        double acc = 0.0;
        for (const float x : vec(i)) acc += static_cast<double>(x) * static_cast<double>(x);
        norms_[i] = std::sqrt(acc);
    }
}

namespace {

constexpr char kBinaryMagic[8] = {'S', 'U', 'B', 'L', 'E', 'M', 'B', '\0'};
constexpr std::uint32_t kBinaryVersion = 1;
constexpr Space kSpaceOrder[4] = {Space::Word, Space::Term, Space::Concept, Space::Context};

struct KeyRef {
    Space space;
    std::uint32_t row;
};

KeyRef resolve(const EmbeddingSet& set, const std::string& namespaced_key) {
    if (namespaced_key.size() < 3 || namespaced_key[1] != ':') {
        throw DataError("malformed embedding key (expected <namespace>:<key>): " + namespaced_key);
    }
    const Space space = space_from_char(namespaced_key[0]);
    const std::int64_t row = set.table(space).row_of(namespaced_key.substr(2));
    if (row < 0) throw DataError("unknown embedding key: " + namespaced_key);
    return {space, static_cast<std::uint32_t>(row)};
}

void save_text(const EmbeddingSet& set, const std::filesystem::path& path) {
    std::FILE* out = std::fopen(path.string().c_str(), "wb");
    if (!out) throw DataError("cannot write file: " + path.string());
    std::fprintf(out, "%zu %d\n", set.row_count(), set.dim);
    char num[64];
    for (const Space space : kSpaceOrder) {
        const VectorTable& table = set.table(space);
        for (std::uint32_t i = 0; i < table.size(); ++i) {
            std::fprintf(out, "%c:%s", to_char(space), table.keys()[i].c_str());
            for (const float x : table.vec(i)) {
                std::snprintf(num, sizeof num, " %.9g", static_cast<double>(x));
                std::fputs(num, out);
            }
            std::fputc('\n', out);
        }
    }
    if (std::fclose(out) != 0) throw DataError("write failed: " + path.string());
}

EmbeddingSet load_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read embedding file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("malformed header in " + path.string());
    std::size_t count = 0;
    int dim = 0;
    {
        char extra;
        if (std::sscanf(line.c_str(), "%zu %d %c", &count, &dim, &extra) != 2 || dim < 1) {
            throw DataError("malformed header in " + path.string() + ": '" + line + "'");
        }
    }

    EmbeddingSet set;
    set.dim = dim;
    for (const Space space : kSpaceOrder) set.table(space).reset(dim);

    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row_no;
        const std::size_t sp = line.find(' ');
        if (sp == std::string::npos || sp < 3 || line[1] != ':') {
            throw DataError("malformed row " + std::to_string(row_no) + " in " + path.string());
        }
        const Space space = space_from_char(line[0]);
        VectorTable& table = set.table(space);
        const std::uint32_t row = table.add(line.substr(2, sp - 2));

        std::span<float> vec = table.vec_mut(row);
        const char* p = line.c_str() + sp;
        char* end = nullptr;
        int got = 0;
        while (got < dim) {
            const float x = std::strtof(p, &end);
            if (end == p) break;
            vec[static_cast<std::size_t>(got++)] = x;
            p = end;
        }
        while (*p == ' ') ++p;
        if (got != dim || *p != '\0') {
            throw DataError("row " + std::to_string(row_no) + " in " + path.string() +
                            " does not have " + std::to_string(dim) + " values (key " +
                            line.substr(0, sp) + ")");
        }
    }
    if (set.row_count() != count) {
        throw DataError("header of " + path.string() + " promises " + std::to_string(count) +
                        " rows, found " + std::to_string(set.row_count()));
    }
    set.recompute_norms();
    return set;
}

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_raw(std::ifstream& in, const std::filesystem::path& path) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
        throw DataError("truncated embedding file: " + path.string());
    }
    return value;
}

void save_binary(const EmbeddingSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path.string());
    out.write(kBinaryMagic, sizeof kBinaryMagic);
    write_raw(out, kBinaryVersion);
    write_raw(out, static_cast<std::uint64_t>(set.row_count()));
    write_raw(out, static_cast<std::uint32_t>(set.dim));
    for (const Space space : kSpaceOrder) {
        const VectorTable& table = set.table(space);
        for (std::uint32_t i = 0; i < table.size(); ++i) {
            write_raw(out, to_char(space));
            const auto& key = table.keys()[i];
            write_raw(out, static_cast<std::uint32_t>(key.size()));
            out.write(key.data(), static_cast<std::streamsize>(key.size()));
            const auto vec = table.vec(i);
            out.write(reinterpret_cast<const char*>(vec.data()),
                      static_cast<std::streamsize>(vec.size_bytes()));
        }
    }
    if (!out) throw DataError("write failed: " + path.string());
}

EmbeddingSet load_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read embedding file: " + path.string());
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kBinaryMagic, sizeof magic) != 0) {
        throw DataError("not a binary embedding file: " + path.string());
    }
    if (read_raw<std::uint32_t>(in, path) != kBinaryVersion) {
        throw DataError("unsupported embedding file version: " + path.string());
    }
    const auto count = read_raw<std::uint64_t>(in, path);
    const auto dim = static_cast<int>(read_raw<std::uint32_t>(in, path));
    if (dim < 1) throw DataError("malformed header in " + path.string());

    EmbeddingSet set;
    set.dim = dim;
    for (const Space space : kSpaceOrder) set.table(space).reset(dim);
    for (std::uint64_t r = 0; r < count; ++r) {
        const char ns = read_raw<char>(in, path);
        const auto key_len = read_raw<std::uint32_t>(in, path);
        std::string key(key_len, '\0');
        if (!in.read(key.data(), static_cast<std::streamsize>(key_len))) {
            throw DataError("truncated embedding file: " + path.string());
        }
        VectorTable& table = set.table(space_from_char(ns));
        const std::uint32_t row = table.add(std::move(key));
        auto vec = table.vec_mut(row);
        if (!in.read(reinterpret_cast<char*>(vec.data()),
                     static_cast<std::streamsize>(vec.size_bytes()))) {
            throw DataError("truncated embedding file: " + path.string());
        }
    }
    set.recompute_norms();
    return set;
}

}  // namespace

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path, EmbFormat format) {
    if (format == EmbFormat::Text) {
        save_text(set, path);
    } else {
        save_binary(set, path);
    }
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, EmbFormat format) {
    return format == EmbFormat::Text ? load_text(path) : load_binary(path);
}

double cosine(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size()) throw DataError("cosine: dimension mismatch");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = u[i], b = v[i];
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (nu == 0.0 || nv == 0.0) throw DataError("cosine: zero-norm vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

std::span<const float> vector_of(const EmbeddingSet& set, const std::string& namespaced_key) {
    const KeyRef ref = resolve(set, namespaced_key);
    return set.table(ref.space).vec(ref.row);
}

double norm_of(const EmbeddingSet& set, const std::string& namespaced_key) {
    const KeyRef ref = resolve(set, namespaced_key);
    return set.table(ref.space).norm(ref.row);
}

NeighborhoodSet top_k(const std::string& query_key, const EmbeddingSet& set,
                      std::span<const std::string> pool, int k, int jobs) {
    if (k < 1) throw UsageError("k must be >= 1");
    const KeyRef query = resolve(set, query_key);
    const auto qvec = set.table(query.space).vec(query.row);
    const double qnorm = set.table(query.space).norm(query.row);
    if (qnorm == 0.0) throw DataError("zero-norm query vector: " + query_key);

    // resolve and validate outside the parallel region
    std::vector<KeyRef> refs;
    std::vector<std::uint32_t> candidates;
    refs.reserve(pool.size());
    candidates.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i] == query_key) {
            refs.push_back({Space::Word, 0});  // placeholder, never read
            continue;
        }
        const KeyRef ref = resolve(set, pool[i]);
        if (set.table(ref.space).norm(ref.row) == 0.0) {
            throw DataError("zero-norm vector in pool: " + pool[i]);
        }
        refs.push_back(ref);
        candidates.push_back(static_cast<std::uint32_t>(i));
    }

    // similarity scan; embarrassingly parallel, each slot written once
    std::vector<double> sims(pool.size());
    const auto n = static_cast<std::int64_t>(candidates.size());
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1 && n > 256)
    for (std::int64_t i = 0; i < n; ++i) {
        const std::uint32_t idx = candidates[static_cast<std::size_t>(i)];
        const KeyRef ref = refs[idx];
        const VectorTable& table = set.table(ref.space);
        const auto vec = table.vec(ref.row);
        double dot = 0.0;
        for (std::size_t j = 0; j < vec.size(); ++j) {
            dot += static_cast<double>(qvec[j]) * static_cast<double>(vec[j]);
        }
        sims[idx] = dot / (qnorm * table.norm(ref.row));
    }

    std::vector<std::uint32_t> order = candidates;
    const auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (sims[a] != sims[b]) return sims[a] > sims[b];
        return pool[a] < pool[b];
    };
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end(), better);

    NeighborhoodSet hood;
    hood.query_key = query_key;
    hood.neighbors.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        hood.neighbors.push_back({pool[order[i]], sims[order[i]]});
    }
    return hood;
}

std::string to_tsv(const NeighborhoodSet& hood) {
    std::string out;
    char buf[64];
    for (std::size_t i = 0; i < hood.neighbors.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu\t%s\t%.9g\n", i + 1, hood.neighbors[i].key.c_str(),
                      hood.neighbors[i].similarity);
        out += buf;
    }
    return out;
}

}  // namespace sublang
