#ifndef CVGEO_RETRIEVAL_HPP
#define CVGEO_RETRIEVAL_HPP

#include <map>
#include <string>
#include <vector>

#include "cvgeo/tensor.hpp"

namespace cvgeo {

struct EmbeddingIndex {
    std::vector<std::string> ids;   // unique
    std::vector<Vec> embeddings;    // unit-norm, parallel to ids
};

struct RankedCandidate {
    std::string id;
    double similarity;
};

// Exhaustive ranking by cosine similarity, descending; ties break by id.
std::vector<std::vector<RankedCandidate>> rank_all(
    const std::vector<Vec>& queries, const EmbeddingIndex& index);

// 1-based rank of each query's ground-truth id under the same ordering.
std::vector<std::size_t> ground_truth_ranks(
    const std::vector<Vec>& queries,
    const std::vector<std::string>& ground_truth_ids,
    const EmbeddingIndex& index);

struct RecallReport {
    std::vector<std::size_t> ranks;       // per query, 1-based
    std::map<std::size_t, double> recall_at_k;
    double recall_top1pct = 0.0;
    std::size_t top1pct_k = 0;            // ceil(N/100)
};

RecallReport recall_at(const std::vector<std::size_t>& ranks,
                       const std::vector<std::size_t>& ks,
                       std::size_t n_references);

// (k, recall@k) for k = 1..k_max; monotone non-decreasing.
std::vector<std::pair<std::size_t, double>> recall_curve(
    const std::vector<std::size_t>& ranks, std::size_t k_max);

}  // namespace cvgeo

#endif
