#include "cvgeo/retrieval.hpp"

#include <algorithm>

#include "cvgeo/errors.hpp"

namespace cvgeo {

namespace {

void validate_index(const EmbeddingIndex& index) {
    if (index.ids.empty()) throw EmptyBatchError("retrieval: empty index");
    if (index.ids.size() != index.embeddings.size())
        throw ShapeError("retrieval: ids/embeddings length mismatch");
}

}  // namespace

std::vector<std::vector<RankedCandidate>> rank_all(
    const std::vector<Vec>& queries, const EmbeddingIndex& index) {
    validate_index(index);
    std::vector<std::vector<RankedCandidate>> out;
    out.reserve(queries.size());
    for (const auto& q : queries) {
        std::vector<RankedCandidate> ranked;
        ranked.reserve(index.ids.size());
        for (std::size_t j = 0; j < index.ids.size(); ++j)
            ranked.push_back({index.ids[j], dot(q, index.embeddings[j])});
        std::sort(ranked.begin(), ranked.end(),
                  [](const RankedCandidate& a, const RankedCandidate& b) {
                      if (a.similarity != b.similarity)
                          return a.similarity > b.similarity;
                      return a.id < b.id;
                  });
        out.push_back(std::move(ranked));
    }
    return out;
}

std::vector<std::size_t> ground_truth_ranks(
    const std::vector<Vec>& queries,
    const std::vector<std::string>& ground_truth_ids,
    const EmbeddingIndex& index) {
    if (queries.size() != ground_truth_ids.size())
        throw ShapeError("ground_truth_ranks: queries/ids length mismatch");
    validate_index(index);
    std::vector<std::size_t> ranks;
    ranks.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        // rank without materializing the full sorted list: count candidates
        // strictly better under the (similarity desc, id asc) order
        std::size_t gt = index.ids.size();
        for (std::size_t j = 0; j < index.ids.size(); ++j)
            if (index.ids[j] == ground_truth_ids[i]) gt = j;
        if (gt == index.ids.size())
            throw ShapeError("ground_truth_ranks: ground truth id not in index");
        double gt_sim = dot(queries[i], index.embeddings[gt]);
        std::size_t better = 0;
        for (std::size_t j = 0; j < index.ids.size(); ++j) {
            if (j == gt) continue;
            double s = dot(queries[i], index.embeddings[j]);
            if (s > gt_sim || (s == gt_sim && index.ids[j] < index.ids[gt]))
                ++better;
        }
        ranks.push_back(better + 1);
    }
    return ranks;
}

RecallReport recall_at(const std::vector<std::size_t>& ranks,
                       const std::vector<std::size_t>& ks,
                       std::size_t n_references) {
    if (ranks.empty()) throw EmptyBatchError("recall_at: empty ranks");
    for (auto r : ranks)
        if (r == 0) throw ShapeError("recall_at: ranks are 1-based");
    RecallReport rep;
    rep.ranks = ranks;
    auto frac_within = [&](std::size_t k) {
        std::size_t hits = 0;
        for (auto r : ranks)
            if (r <= k) ++hits;
        return static_cast<double>(hits) / static_cast<double>(ranks.size());
    };
    for (auto k : ks) rep.recall_at_k[k] = frac_within(k);
    rep.top1pct_k = (n_references + 99) / 100;  // ceil(N/100)
    rep.recall_top1pct = frac_within(rep.top1pct_k);
    return rep;
}

std::vector<std::pair<std::size_t, double>> recall_curve(
    const std::vector<std::size_t>& ranks, std::size_t k_max) {
    if (ranks.empty()) throw EmptyBatchError("recall_curve: empty ranks");
    std::vector<std::pair<std::size_t, double>> curve;
    curve.reserve(k_max);
    std::vector<std::size_t> counts(k_max + 1, 0);
    for (auto r : ranks)
        if (r <= k_max) ++counts[r];
    std::size_t cum = 0;
    for (std::size_t k = 1; k <= k_max; ++k) {
        cum += counts[k];
        curve.emplace_back(
            k, static_cast<double>(cum) / static_cast<double>(ranks.size()));
    }
    return curve;
}

}  // namespace cvgeo
