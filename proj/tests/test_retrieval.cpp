#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cvgeo/retrieval.hpp"
#include "cvgeo/rng.hpp"

using namespace cvgeo;

namespace {

Vec unit(Rng& rng, int k) {
    Vec v(k);
    for (auto& x : v) x = rng.normal();
    return l2_normalize(v);
}

std::string pid(int i) { return "q" + std::to_string(1000 + i).substr(1); }

}  // namespace

TEST_CASE("rank_all matches an independent sort") {
    const int K = 8;
    Rng rng(1);
    EmbeddingIndex index;
    for (int i = 0; i < 20; ++i) {
        index.ids.push_back(pid(i));
        index.embeddings.push_back(unit(rng, K));
    }
    std::vector<Vec> queries;
    for (int i = 0; i < 7; ++i) queries.push_back(unit(rng, K));

    auto ranked = rank_all(queries, index);
    REQUIRE(ranked.size() == queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        REQUIRE(ranked[q].size() == index.ids.size());
        // recompute and sort independently
        std::vector<std::pair<double, std::string>> want;
        for (std::size_t i = 0; i < index.ids.size(); ++i)
            want.push_back(
                {cosine_similarity(queries[q], index.embeddings[i]), index.ids[i]});
        std::sort(want.begin(), want.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(ranked[q][i].id == want[i].second);
            CHECK(ranked[q][i].similarity ==
                  doctest::Approx(want[i].first).epsilon(1e-12));
        }
    }
}

TEST_CASE("ground_truth_ranks matches the full ranking") {
    const int K = 6;
    Rng rng(2);
    EmbeddingIndex index;
    for (int i = 0; i < 30; ++i) {
        index.ids.push_back(pid(i));
        index.embeddings.push_back(unit(rng, K));
    }
    std::vector<Vec> queries;
    std::vector<std::string> truth;
    for (int i = 0; i < 10; ++i) {
        queries.push_back(unit(rng, K));
        truth.push_back(pid(static_cast<int>(rng.uniform_int(30))));
    }
    auto ranks = ground_truth_ranks(queries, truth, index);
    auto full = rank_all(queries, index);
    for (std::size_t q = 0; q < queries.size(); ++q) {
        std::size_t pos = 0;
        while (full[q][pos].id != truth[q]) ++pos;
        CHECK(ranks[q] == pos + 1);
    }
}

TEST_CASE("ground_truth_ranks rejects unknown ids") {
    Rng rng(3);
    EmbeddingIndex index;
    index.ids = {"a"};
    index.embeddings = {unit(rng, 4)};
    CHECK_THROWS_AS(
        ground_truth_ranks({unit(rng, 4)}, {"missing"}, index), ShapeError);
}

TEST_CASE("recall_at on a hand case") {
    // ranks: 1, 3, 2, 7, 1 over 200 references
    std::vector<std::size_t> ranks{1, 3, 2, 7, 1};
    RecallReport rep = recall_at(ranks, {1, 5, 10}, 200);
    CHECK(rep.recall_at_k.at(1) == doctest::Approx(2.0 / 5));
    CHECK(rep.recall_at_k.at(5) == doctest::Approx(4.0 / 5));
    CHECK(rep.recall_at_k.at(10) == doctest::Approx(1.0));
    CHECK(rep.top1pct_k == 2);  // ceil(200/100)
    CHECK(rep.recall_top1pct == doctest::Approx(3.0 / 5));
}

TEST_CASE("top-1% uses a ceiling and is at least recall@1") {
    std::vector<std::size_t> ranks{1, 2, 5};
    RecallReport a = recall_at(ranks, {1}, 50);
    CHECK(a.top1pct_k == 1);  // ceil(50/100) = 1
    CHECK(a.recall_top1pct == a.recall_at_k.at(1));

    RecallReport b = recall_at(ranks, {1}, 101);
    CHECK(b.top1pct_k == 2);
    CHECK(b.recall_top1pct >= b.recall_at_k.at(1));
}

TEST_CASE("recall_curve is monotone and matches recall_at") {
    Rng rng(4);
    std::vector<std::size_t> ranks;
    for (int i = 0; i < 40; ++i) ranks.push_back(1 + rng.uniform_int(25));
    auto curve = recall_curve(ranks, 25);
    REQUIRE(curve.size() == 25);
    double prev = 0.0;
    for (const auto& [k, r] : curve) {
        CHECK(r >= prev);
        prev = r;
        RecallReport rep = recall_at(ranks, {k}, 100);
        CHECK(r == doctest::Approx(rep.recall_at_k.at(k)).epsilon(1e-12));
    }
    CHECK(curve.back().second == doctest::Approx(1.0));
}
