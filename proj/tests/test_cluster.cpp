#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "cardsort/cluster.hpp"
#include "cardsort/rng.hpp"
#include "cardsort/similarity.hpp"
#include "helpers.hpp"

using namespace cardsort;
using Catch::Approx;

namespace {

// Dissimilarity with two perfect blocks: 0 within, 1 across.
DissimilarityMatrix two_blocks(std::size_t block_a, std::size_t block_b) {
    DissimilarityMatrix d;
    const std::size_t m = block_a + block_b;
    for (std::size_t i = 0; i < m; ++i) d.card_ids.push_back("c" + std::to_string(i));
    d.values.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const bool same_block = (i < block_a) == (j < block_a);
            d.values[i * m + j] = same_block ? 0.0 : 1.0;
        }
    return d;
}

Clustering make_clustering(const std::vector<int>& assignment, int k) {
    Clustering c;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        c.card_ids.push_back("c" + std::to_string(i));
    c.assignment = assignment;
    c.k = k;
    return c;
}

} // namespace

TEST_CASE("kmeans recovers two perfect blocks") {
    const auto d = two_blocks(3, 3);
    const auto clustering = kmeans(d, 2, 1, 10);
    CHECK(clustering.k == 2);
    CHECK(clustering.inertia == Approx(0.0).margin(1e-12));
    CHECK(clustering.assignment[0] == clustering.assignment[1]);
    CHECK(clustering.assignment[1] == clustering.assignment[2]);
    CHECK(clustering.assignment[3] == clustering.assignment[4]);
    CHECK(clustering.assignment[4] == clustering.assignment[5]);
    CHECK(clustering.assignment[0] != clustering.assignment[3]);
}

TEST_CASE("kmeans block recovery holds across 100 consecutive seeds") {
    const auto d = two_blocks(4, 3);
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto clustering = kmeans(d, 2, seed, 10);
        CHECK(clustering.inertia == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("kmeans degenerate k values") {
    const auto d = two_blocks(3, 2);
    const auto one = kmeans(d, 1, 7, 5);
    CHECK(one.k == 1);
    for (int a : one.assignment) CHECK(a == 0);
    CHECK(one.inertia > 0);

    const auto all = kmeans(d, 5, 7, 5);
    CHECK(all.inertia == Approx(0.0).margin(1e-12));
    std::set<int> used(all.assignment.begin(), all.assignment.end());
    CHECK(used.size() == 5);

    CHECK_THROWS_AS(kmeans(d, 6, 7, 5), Error);
    CHECK_THROWS_AS(kmeans(d, 0, 7, 5), Error);
}

TEST_CASE("every cluster index is used") {
    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        const StudyData data = testutil::random_study(rng, 8, 6);
        const auto sim = compute_similarity(data).first;
        const auto d = to_dissimilarity(sim, 0.0);
        const int k = 1 + static_cast<int>(rng.uniform_below(data.card_count()));
        const auto clustering = kmeans(d, k, trial, 3);
        std::set<int> used(clustering.assignment.begin(), clustering.assignment.end());
        CHECK(used.size() == static_cast<std::size_t>(k));
        for (int c : clustering.assignment) {
            CHECK(c >= 0);
            CHECK(c < k);
        }
    }
}

TEST_CASE("kmeans is deterministic given seed and restarts") {
    Rng rng(66);
    const StudyData data = testutil::random_study(rng, 8, 6);
    const auto d = to_dissimilarity(compute_similarity(data).first, 0.0);
    const auto a = kmeans(d, 3, 123, 10);
    const auto b = kmeans(d, 3, 123, 10);
    CHECK(a.assignment == b.assignment);
    CHECK(a.inertia == b.inertia);
}

TEST_CASE("elbow rule picks the maximum chord deviation") {
    // max deviation from the chord (1,100)-(5,16) is at k=2
    CHECK(elbow_from_inertia(1, {100, 20, 18, 17, 16}) == 2);
    // strictly linear curve has no elbow; tie-break toward smaller k
    CHECK(elbow_from_inertia(1, {50, 40, 30, 20, 10}) == 1);
    CHECK(elbow_from_inertia(3, {9, 9, 9}) == 3);
}

TEST_CASE("elbow_k on two perfect blocks") {
    const auto d = two_blocks(4, 4);
    CHECK(elbow_k(d, 1, 6, 3) == 2);
    CHECK(elbow_k(d, 2, 2, 3) == 2);
    CHECK_THROWS_AS(elbow_k(d, 0, 4, 3), Error);
    CHECK_THROWS_AS(elbow_k(d, 3, 2, 3), Error);
    CHECK_THROWS_AS(elbow_k(d, 1, 9, 3), Error);
}

TEST_CASE("ami identity and trivial cases") {
    const auto a = make_clustering({0, 0, 0, 1, 1, 1}, 2);
    CHECK(ami(a, a) == Approx(1.0).margin(1e-9));

    const auto relabeled = make_clustering({1, 1, 1, 0, 0, 0}, 2);
    CHECK(ami(a, relabeled) == Approx(1.0).margin(1e-9));

    const auto lump = make_clustering({0, 0, 0, 0, 0, 0}, 1);
    CHECK(ami(a, lump) == Approx(0.0).margin(1e-9));
}

TEST_CASE("ami matches the hand-computed contingency evaluation") {
    // a = {AB|CD}, b = {AC|BD}: MI = 0, E[MI] = ln2/3, mean entropy = ln2,
    // so AMI = -E[MI] / (ln2 - E[MI]) = -1/2.
    const auto a = make_clustering({0, 0, 1, 1}, 2);
    const auto b = make_clustering({0, 1, 0, 1}, 2);
    CHECK(ami(a, b) == Approx(-0.5).margin(1e-9));
}

TEST_CASE("ami is symmetric") {
    Rng rng(9);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 6 + rng.uniform_below(8);
        std::vector<int> xa(n), xb(n);
        const int ka = 2 + static_cast<int>(rng.uniform_below(3));
        const int kb = 2 + static_cast<int>(rng.uniform_below(3));
        for (auto& v : xa) v = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(ka)));
        for (auto& v : xb) v = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(kb)));
        // normalize so every index is used
        auto compact = [](std::vector<int>& xs) {
            std::map<int, int> remap;
            for (int& v : xs) {
                if (!remap.count(v)) {
                    const int next = static_cast<int>(remap.size());
                    remap[v] = next;
                }
                v = remap[v];
            }
            return static_cast<int>(remap.size());
        };
        const int cka = compact(xa);
        const int ckb = compact(xb);
        const auto a = make_clustering(xa, cka);
        const auto b = make_clustering(xb, ckb);
        CHECK(ami(a, b) == Approx(ami(b, a)).margin(1e-12));
    }
}

TEST_CASE("ami of independent random partitions averages near zero") {
    Rng rng(1234);
    double sum = 0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        std::vector<int> xa(20), xb(20);
        for (auto& v : xa) v = static_cast<int>(rng.uniform_below(4));
        for (auto& v : xb) v = static_cast<int>(rng.uniform_below(4));
        auto compact = [](std::vector<int>& xs) {
            std::map<int, int> remap;
            for (int& v : xs) {
                if (!remap.count(v)) {
                    const int next = static_cast<int>(remap.size());
                    remap[v] = next;
                }
                v = remap[v];
            }
            return static_cast<int>(remap.size());
        };
        const int ka = compact(xa);
        const int kb = compact(xb);
        sum += ami(make_clustering(xa, ka), make_clustering(xb, kb));
    }
    CHECK(std::abs(sum / seeds) < 0.05);
}

TEST_CASE("ami rejects different card sets") {
    const auto a = make_clustering({0, 1}, 2);
    Clustering b = make_clustering({0, 1, 0}, 2);
    CHECK_THROWS_AS(ami(a, b), Error);
}

TEST_CASE("ami aligns identical card sets in different orders") {
    Clustering a = make_clustering({0, 0, 1, 1}, 2);
    Clustering b;
    b.card_ids = {"c3", "c2", "c1", "c0"};
    b.assignment = {1, 1, 0, 0};
    b.k = 2;
    CHECK(ami(a, b) == Approx(1.0).margin(1e-9));
}

TEST_CASE("clustering csv lists card and cluster") {
    const auto a = make_clustering({0, 1, 0}, 2);
    CHECK(clustering_to_csv(a) == "card_id,cluster\nc0,0\nc1,1\nc2,0\n");
}
