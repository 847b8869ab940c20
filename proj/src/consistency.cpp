#include "sublang/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <omp.h>

#include "sublang/embstore.hpp"

namespace sublang {

void AnalysisConfig::validate() const {
    if (k < 1) throw UsageError("k must be >= 1");
    if (!(threshold > 0.0) || threshold > 1.0) throw UsageError("threshold must be in (0, 1]");
    if (replicates < 2) throw UsageError("need >= 2 replicates");
}

ShareMode share_mode_from_string(std::string_view name) {
    if (name == "ref-high-conf") return ShareMode::RefHighConf;
    if (name == "both-high-conf") return ShareMode::BothHighConf;
    throw UsageError("unknown share mode: " + std::string(name) +
                     " (expected ref-high-conf or both-high-conf)");
}

std::string to_string(ShareMode mode) {
    return mode == ShareMode::RefHighConf ? "ref-high-conf" : "both-high-conf";
}

double overlap(std::span<const std::string> a, std::span<const std::string> b, int k) {
    if (k < 1) throw UsageError("k must be >= 1");
    if (a.size() > static_cast<std::size_t>(k) || b.size() > static_cast<std::size_t>(k)) {
        throw UsageError("overlap: neighbor set larger than k");
    }
    std::vector<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::size_t common = 0;
    auto ia = sa.begin();
    for (const auto& key : sb) {
        ia = std::lower_bound(ia, sa.end(), key);
        if (ia == sa.end()) break;
        if (*ia == key) ++common;
    }
    return static_cast<double>(common) / static_cast<double>(k);
}

namespace {

// concept ids present in the concept table of every replicate, sorted
std::vector<std::string> shared_concept_keys(const ReplicateSet& reps) {
    if (reps.replicates.empty()) return {};
    std::vector<std::string> shared = reps.replicates.front().concepts.keys();
    std::sort(shared.begin(), shared.end());
    for (std::size_t r = 1; r < reps.replicates.size(); ++r) {
        const auto& table = reps.replicates[r].concepts;
        std::erase_if(shared, [&](const std::string& key) { return !table.contains(key); });
    }
    return shared;
}

std::vector<std::string> namespaced_pool(std::span<const std::string> concept_ids) {
    std::vector<std::string> pool;
    pool.reserve(concept_ids.size());
    for (const auto& cid : concept_ids) pool.push_back(namespaced_key(Space::Concept, cid));
    return pool;
}

// sorted neighbor keys of one concept in one replicate, pool-restricted
std::vector<std::string> neighborhood(const EmbeddingSet& set, const std::string& concept_id,
                                      std::span<const std::string> pool, int k) {
    NeighborhoodSet hood = top_k(namespaced_key(Space::Concept, concept_id), set, pool, k, 1);
    std::vector<std::string> keys;
    keys.reserve(hood.neighbors.size());
    for (auto& n : hood.neighbors) keys.push_back(std::move(n.key));
    std::sort(keys.begin(), keys.end());
    return keys;
}

void require_embedded(const ReplicateSet& reps, const std::string& concept_id) {
    for (std::size_t r = 0; r < reps.replicates.size(); ++r) {
        if (!reps.replicates[r].concepts.contains(concept_id)) {
            throw DataError("concept " + concept_id + " missing from replicate " +
                            std::to_string(r) + " of " + reps.doc_type);
        }
    }
}

double sorted_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b,
                      int k) {
    std::size_t common = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++common;
            ++ia;
            ++ib;
        }
    }
    return static_cast<double>(common) / static_cast<double>(k);
}

// mean overlap over all ordered pairs of two neighborhood lists
double ordered_pair_mean(const std::vector<std::vector<std::string>>& a,
                         const std::vector<std::vector<std::string>>& b, int k) {
    double sum = 0.0;
    for (const auto& na : a) {
        for (const auto& nb : b) sum += sorted_overlap(na, nb, k);
    }
    return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

std::vector<std::vector<std::string>> neighborhoods_per_replicate(
    const ReplicateSet& reps, const std::string& concept_id, std::span<const std::string> pool,
    int k) {
    std::vector<std::vector<std::string>> hoods;
    hoods.reserve(reps.replicates.size());
    for (const auto& set : reps.replicates) {
        hoods.push_back(neighborhood(set, concept_id, pool, k));
    }
    return hoods;
}

}  // namespace

ConsistencyRecord self_consistency(const std::string& concept_id, const ReplicateSet& reps,
                                   std::span<const std::string> pool_concepts,
                                   const AnalysisConfig& cfg) {
    cfg.validate();
    const std::size_t R = reps.replicates.size();
    if (R < 2) throw UsageError("need >= 2 replicates");
    require_embedded(reps, concept_id);

    const auto pool = namespaced_pool(pool_concepts);
    const auto hoods = neighborhoods_per_replicate(reps, concept_id, pool, cfg.k);

    double sum = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = i + 1; j < R; ++j) sum += sorted_overlap(hoods[i], hoods[j], cfg.k);
    }
    const std::uint64_t pairs = static_cast<std::uint64_t>(R) * (R - 1) / 2;
    return {concept_id, sum / static_cast<double>(pairs), pairs};
}

HighConfidenceResult high_confidence(const ReplicateSet& reps, const AnalysisConfig& cfg,
                                     int jobs) {
    cfg.validate();
    if (reps.replicates.size() < 2) throw UsageError("need >= 2 replicates");

    const std::vector<std::string> concepts = shared_concept_keys(reps);
    const auto pool = namespaced_pool(concepts);

    HighConfidenceResult result;
    result.all.resize(concepts.size());

    const auto n = static_cast<std::int64_t>(concepts.size());
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            const auto idx = static_cast<std::size_t>(i);
            const auto hoods = neighborhoods_per_replicate(reps, concepts[idx], pool, cfg.k);
            const std::size_t R = reps.replicates.size();
            double sum = 0.0;
            for (std::size_t a = 0; a < R; ++a) {
                for (std::size_t b = a + 1; b < R; ++b) {
                    sum += sorted_overlap(hoods[a], hoods[b], cfg.k);
                }
            }
            const std::uint64_t pairs = static_cast<std::uint64_t>(R) * (R - 1) / 2;
            result.all[idx] = {concepts[idx], sum / static_cast<double>(pairs), pairs};
        } catch (...) {
#pragma omp critical
            error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);

    double mean = 0.0;
    for (const auto& rec : result.all) {
        if (rec.value >= cfg.threshold) {
            result.retained.push_back(rec);
            mean += rec.value;
        }
    }
    if (!result.retained.empty()) result.retained_mean = mean / static_cast<double>(result.retained.size());
    return result;
}

ConsistencyRecord cross_type_consistency(const std::string& concept_id, const ReplicateSet& ref,
                                         const ReplicateSet& cmp,
                                         std::span<const std::string> pool_concepts,
                                         const AnalysisConfig& cfg) {
    cfg.validate();
    if (ref.replicates.empty() || cmp.replicates.empty()) throw UsageError("empty replicate set");
    require_embedded(ref, concept_id);
    require_embedded(cmp, concept_id);

    const auto pool = namespaced_pool(pool_concepts);
    const auto ref_hoods = neighborhoods_per_replicate(ref, concept_id, pool, cfg.k);
    const auto cmp_hoods = neighborhoods_per_replicate(cmp, concept_id, pool, cfg.k);

    const std::uint64_t pairs =
        static_cast<std::uint64_t>(ref_hoods.size()) * cmp_hoods.size();
    return {concept_id, ordered_pair_mean(ref_hoods, cmp_hoods, cfg.k), pairs};
}

ComparisonReport compare_types(const ReplicateSet& ref, const ReplicateSet& cmp,
                               const AnalysisConfig& cfg, ShareMode mode, int jobs) {
    cfg.validate();
    ComparisonReport report;
    report.reference_type = ref.doc_type;
    report.comparison_type = cmp.doc_type;
    report.mode = mode;

    const HighConfidenceResult ref_hc = high_confidence(ref, cfg, jobs);
    if (mode == ShareMode::RefHighConf) {
        const auto cmp_concepts = shared_concept_keys(cmp);
        const std::set<std::string> present(cmp_concepts.begin(), cmp_concepts.end());
        for (const auto& rec : ref_hc.retained) {
            if (present.count(rec.concept_id)) report.shared_concepts.push_back(rec.concept_id);
        }
    } else {
        const HighConfidenceResult cmp_hc = high_confidence(cmp, cfg, jobs);
        std::set<std::string> cmp_set;
        for (const auto& rec : cmp_hc.retained) cmp_set.insert(rec.concept_id);
        for (const auto& rec : ref_hc.retained) {
            if (cmp_set.count(rec.concept_id)) report.shared_concepts.push_back(rec.concept_id);
        }
    }
    std::sort(report.shared_concepts.begin(), report.shared_concepts.end());
    if (report.shared_concepts.empty()) return report;

    const auto& shared = report.shared_concepts;
    const auto pool = namespaced_pool(shared);
    const std::size_t n = shared.size();
    const std::size_t r_ref = ref.replicates.size();
    const std::size_t r_cmp = cmp.replicates.size();

    report.reference_consistency.resize(n);
    report.comparison_consistency.resize(n);
    report.cross_consistency.resize(n);
    report.deltas.resize(n);

    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        try {
            const auto idx = static_cast<std::size_t>(i);
            const auto& cid = shared[idx];
            const auto ref_hoods = neighborhoods_per_replicate(ref, cid, pool, cfg.k);
            const auto cmp_hoods = neighborhoods_per_replicate(cmp, cid, pool, cfg.k);

            // all four values share the ordered-pair convention; see ComparisonReport
            const double ref_val = ordered_pair_mean(ref_hoods, ref_hoods, cfg.k);
            const double cmp_val = ordered_pair_mean(cmp_hoods, cmp_hoods, cfg.k);
            const double cross_val = ordered_pair_mean(ref_hoods, cmp_hoods, cfg.k);

            report.reference_consistency[idx] = {cid, ref_val,
                                                 static_cast<std::uint64_t>(r_ref) * r_ref};
            report.comparison_consistency[idx] = {cid, cmp_val,
                                                  static_cast<std::uint64_t>(r_cmp) * r_cmp};
            report.cross_consistency[idx] = {cid, cross_val,
                                             static_cast<std::uint64_t>(r_ref) * r_cmp};
            report.deltas[idx] = {cid, ref_val - cross_val,
                                  static_cast<std::uint64_t>(r_ref) * r_cmp};
        } catch (...) {
#pragma omp critical
            error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);

    for (std::size_t i = 0; i < n; ++i) {
        report.means.reference += report.reference_consistency[i].value;
        report.means.comparison += report.comparison_consistency[i].value;
        report.means.cross += report.cross_consistency[i].value;
        report.means.delta += report.deltas[i].value;
    }
    const auto dn = static_cast<double>(n);
    report.means.reference /= dn;
    report.means.comparison /= dn;
    report.means.cross /= dn;
    report.means.delta /= dn;
    return report;
}

Regression size_regression(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2) throw UsageError("size_regression needs at least 2 points");
    std::vector<double> lx(points.size()), y(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].first > 0.0)) {
            throw DataError("size_regression: corpus sizes must be positive");
        }
        lx[i] = std::log(points[i].first);
        y[i] = points[i].second;
    }
    const std::set<double> distinct(lx.begin(), lx.end());
    if (distinct.size() < 2) throw DataError("size_regression needs >= 2 distinct corpus sizes");

    const auto dn = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        mx += lx[i];
        my += y[i];
    }
    mx /= dn;
    my /= dn;

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (y[i] - my);
    }

    Regression reg;
    reg.slope = sxy / sxx;
    reg.intercept = my - reg.slope * mx;

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double fit = reg.intercept + reg.slope * lx[i];
        ss_res += (y[i] - fit) * (y[i] - fit);
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    reg.r_squared = ss_tot == 0.0 ? 0.0 : 1.0 - ss_res / ss_tot;
    return reg;
}

}  // namespace sublang
