#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "sublang/embstore.hpp"
#include "sublang/errors.hpp"
#include "sublang/explorer.hpp"

using namespace sublang;

namespace {

// 2D vectors with chosen cosine to the query direction (1, 0); scale lets
// tests build exact cosine ties via scaled copies.
EmbeddingSet set_from_sims(const std::map<std::string, double>& concept_sims,
                           const std::map<std::string, double>& term_sims = {},
                           const std::map<std::string, double>& scales = {}) {
    EmbeddingSet set;
    set.dim = 2;
    for (const Space s : {Space::Word, Space::Term, Space::Concept, Space::Context}) {
        set.table(s).reset(2);
    }
    auto fill = [&](Space space, const std::map<std::string, double>& sims) {
        for (const auto& [key, sim] : sims) {
            const double scale = scales.count(key) ? scales.at(key) : 1.0;
            const std::uint32_t row = set.table(space).add(key);
            auto vec = set.table(space).vec_mut(row);
            vec[0] = static_cast<float>(scale * sim);
            vec[1] = static_cast<float>(scale * std::sqrt(std::max(0.0, 1.0 - sim * sim)));
        }
    };
    fill(Space::Concept, concept_sims);
    fill(Space::Term, term_sims);
    set.recompute_norms();
    return set;
}

ReplicateSet reps_of(std::string doc_type, std::vector<EmbeddingSet> sets) {
    ReplicateSet reps;
    reps.doc_type = std::move(doc_type);
    reps.replicates = std::move(sets);
    return reps;
}

// d is a scaled copy of b, so their cosines tie exactly in every replicate
EmbeddingSet fixture_replicate(double a, double b, double c) {
    EmbeddingSet set = set_from_sims({{"q", 1.0}, {"a", a}, {"b", b}, {"c", c}, {"d", b}},
                                     {}, {{"d", 2.0}});
    return set;
}

}  // namespace

TEST_CASE("averaged_neighbors matches the hand-computed 3x4 enumeration") {
    // per-replicate cosines to q:           distances (1 - cos):
    //   rep1: a .9  b .8  c .7  d .8          .1  .2  .3  .2
    //   rep2: a .6  b .9  c .8  d .9          .4  .1  .2  .1
    //   rep3: a .9  b .1  c .8  d .1          .1  .9  .2  .9
    // means: a .2, b .4, c .2333..., d .4 (d ties b exactly, key breaks it)
    const ReplicateSet reps = reps_of("echo", {fixture_replicate(0.9, 0.8, 0.7),
                                               fixture_replicate(0.6, 0.9, 0.8),
                                               fixture_replicate(0.9, 0.1, 0.8)});

    const AveragedNeighborhood hood = averaged_neighbors("q", reps, TargetSpace::Concept, 4);
    REQUIRE(hood.neighbors.size() == 4);
    CHECK(hood.neighbors[0].first == "a");
    CHECK(hood.neighbors[1].first == "c");
    CHECK(hood.neighbors[2].first == "b");
    CHECK(hood.neighbors[3].first == "d");

    CHECK(hood.neighbors[0].second == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(hood.neighbors[1].second == doctest::Approx(0.7 / 3.0).epsilon(1e-6));
    CHECK(hood.neighbors[2].second == doctest::Approx(0.4).epsilon(1e-6));
    CHECK(hood.neighbors[2].second == hood.neighbors[3].second);  // exact tie

    SUBCASE("means equal independently recomputed per-replicate distances") {
        for (const auto& [key, mean] : hood.neighbors) {
            double sum = 0.0;
            for (const auto& set : reps.replicates) {
                sum += 1.0 - cosine(vector_of(set, "c:q"), vector_of(set, "c:" + key));
            }
            CHECK(std::abs(mean - sum / 3.0) < 1e-12);
        }
    }
    SUBCASE("distances are non-decreasing by rank") {
        for (std::size_t i = 1; i < hood.neighbors.size(); ++i) {
            CHECK(hood.neighbors[i - 1].second <= hood.neighbors[i].second);
        }
    }
    SUBCASE("replicate order permutation changes nothing") {
        const ReplicateSet shuffled = reps_of("echo", {reps.replicates[2], reps.replicates[0],
                                                       reps.replicates[1]});
        const AveragedNeighborhood again =
            averaged_neighbors("q", shuffled, TargetSpace::Concept, 4);
        REQUIRE(again.neighbors.size() == hood.neighbors.size());
        for (std::size_t i = 0; i < hood.neighbors.size(); ++i) {
            CHECK(again.neighbors[i].first == hood.neighbors[i].first);
            CHECK(again.neighbors[i].second == doctest::Approx(hood.neighbors[i].second)
                                                   .epsilon(1e-15));
        }
    }
    SUBCASE("the query never appears in concept space") {
        const AveragedNeighborhood wide = averaged_neighbors("q", reps, TargetSpace::Concept, 50);
        for (const auto& [key, dist] : wide.neighbors) CHECK(key != "q");
        CHECK(wide.neighbors.size() == 4);
    }
}

TEST_CASE("averaged_neighbors degenerate cases") {
    const EmbeddingSet one = fixture_replicate(0.9, 0.8, 0.7);

    SUBCASE("R = 1 reduces to single-replicate top_k by distance") {
        const ReplicateSet reps = reps_of("echo", {one});
        const AveragedNeighborhood hood = averaged_neighbors("q", reps, TargetSpace::Concept, 3);
        const std::vector<std::string> pool = {"c:a", "c:b", "c:c", "c:d"};
        const NeighborhoodSet direct = top_k("c:q", one, pool, 3);
        REQUIRE(hood.neighbors.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK("c:" + hood.neighbors[i].first == direct.neighbors[i].key);
            CHECK(hood.neighbors[i].second ==
                  doctest::Approx(1.0 - direct.neighbors[i].similarity).epsilon(1e-12));
        }
    }
    SUBCASE("identical replicates equal any single one") {
        const ReplicateSet reps = reps_of("echo", {one, one, one});
        const AveragedNeighborhood hood = averaged_neighbors("q", reps, TargetSpace::Concept, 4);
        const AveragedNeighborhood solo =
            averaged_neighbors("q", reps_of("echo", {one}), TargetSpace::Concept, 4);
        REQUIRE(hood.neighbors.size() == solo.neighbors.size());
        for (std::size_t i = 0; i < hood.neighbors.size(); ++i) {
            CHECK(hood.neighbors[i].first == solo.neighbors[i].first);
            CHECK(hood.neighbors[i].second ==
                  doctest::Approx(solo.neighbors[i].second).epsilon(1e-12));
        }
    }
    SUBCASE("missing concept is an error") {
        const ReplicateSet reps = reps_of("echo", {one});
        CHECK_THROWS_AS(averaged_neighbors("nope", reps, TargetSpace::Concept, 3), DataError);
    }
}

TEST_CASE("term space targets the term table") {
    const EmbeddingSet set = set_from_sims({{"q", 1.0}}, {{"alpha", 0.9}, {"beta", 0.5}});
    const ReplicateSet reps = reps_of("echo", {set, set});
    const AveragedNeighborhood hood = averaged_neighbors("q", reps, TargetSpace::Term, 5);
    REQUIRE(hood.neighbors.size() == 2);
    CHECK(hood.neighbors[0].first == "alpha");
    CHECK(hood.neighbors[1].first == "beta");
    CHECK(hood.space == TargetSpace::Term);
}

TEST_CASE("neighbor_table assembles per-type columns") {
    const ReplicateSet echo = reps_of("echo", {fixture_replicate(0.9, 0.8, 0.7),
                                               fixture_replicate(0.6, 0.9, 0.8)});
    // the second type lacks concept q entirely
    const EmbeddingSet other = set_from_sims({{"z", 1.0}, {"a", 0.5}});
    const ReplicateSet nursing = reps_of("nursing", {other, other});

    const std::vector<std::string> concepts = {"q"};
    const std::vector<ReplicateSet> types = {echo, nursing};
    const NeighborTable table = neighbor_table(concepts, types, TargetSpace::Concept, 3);

    REQUIRE(table.cells.size() == 1);
    REQUIRE(table.cells[0].size() == 2);
    CHECK(table.cells[0][0].has_value());
    CHECK(!table.cells[0][1].has_value());  // absent marker

    SUBCASE("populated cells equal direct averaged_neighbors calls") {
        const AveragedNeighborhood direct = averaged_neighbors("q", echo, TargetSpace::Concept, 3);
        const auto& cell = *table.cells[0][0];
        REQUIRE(cell.neighbors.size() == direct.neighbors.size());
        for (std::size_t i = 0; i < cell.neighbors.size(); ++i) {
            CHECK(cell.neighbors[i].first == direct.neighbors[i].first);
            CHECK(cell.neighbors[i].second == direct.neighbors[i].second);
        }
    }
    SUBCASE("TSV marks absent columns") {
        const std::string tsv = table.to_tsv();
        CHECK(tsv.find("ABSENT") != std::string::npos);
        CHECK(tsv.find("q\techo\t1\t") != std::string::npos);
    }
    SUBCASE("text rendering includes both type headers") {
        const std::string text = table.to_text();
        CHECK(text.find("echo") != std::string::npos);
        CHECK(text.find("nursing") != std::string::npos);
        CHECK(text.find("(absent)") != std::string::npos);
    }
    SUBCASE("distance CSV has k rows per populated cell") {
        const std::string csv = table.distances_csv();
        std::size_t rows = 0;
        for (const char ch : csv) rows += ch == '\n' ? 1 : 0;
        CHECK(rows == 1 + 3);  // header + k rows for the single populated cell
        CHECK(csv.find("q,echo,1,") != std::string::npos);
    }
}

TEST_CASE("a 2x2 grid matches per-cell direct calls") {
    const ReplicateSet type_a = reps_of("a", {fixture_replicate(0.9, 0.8, 0.7),
                                              fixture_replicate(0.6, 0.9, 0.8)});
    const ReplicateSet type_b = reps_of("b", {fixture_replicate(0.5, 0.6, 0.9),
                                              fixture_replicate(0.8, 0.7, 0.9)});
    const std::vector<std::string> concepts = {"a", "b"};
    const std::vector<ReplicateSet> types = {type_a, type_b};
    const NeighborTable table = neighbor_table(concepts, types, TargetSpace::Concept, 2);

    for (std::size_t c = 0; c < concepts.size(); ++c) {
        for (std::size_t t = 0; t < types.size(); ++t) {
            REQUIRE(table.cells[c][t].has_value());
            const AveragedNeighborhood direct =
                averaged_neighbors(concepts[c], types[t], TargetSpace::Concept, 2);
            const auto& cell = *table.cells[c][t];
            REQUIRE(cell.neighbors.size() == direct.neighbors.size());
            for (std::size_t i = 0; i < cell.neighbors.size(); ++i) {
                CHECK(cell.neighbors[i].first == direct.neighbors[i].first);
                CHECK(cell.neighbors[i].second == direct.neighbors[i].second);
            }
        }
    }
}
