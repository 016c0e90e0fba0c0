#include "cvgeo/mining.hpp"

#include <algorithm>

#include "cvgeo/errors.hpp"

namespace cvgeo {

void MiningPool::push(View view, const std::string& pair_id,
                      const Vec& embedding, long step) {
    if (!is_unit(embedding))
        throw NormalizationError("MiningPool::push: non-unit embedding");
    auto& q = ring(view);
    for (auto it = q.begin(); it != q.end(); ++it) {
        if (it->pair_id == pair_id) {
            q.erase(it);
            break;
        }
    }
    q.push_back(PoolEntry{pair_id, embedding, step});
    while (q.size() > capacity_) q.pop_front();
}

NegativeSelection MiningPool::hardest_negatives(View candidate_view,
                                                const Vec& anchor,
                                                const std::string& anchor_pair_id,
                                                std::size_t r, Rng& rng) const {
    if (r == 0) throw ShapeError("hardest_negatives: r must be >= 1");
    const auto& q = ring(candidate_view);

    struct Scored {
        double sim;
        const PoolEntry* entry;
    };
    std::vector<Scored> eligible;
    eligible.reserve(q.size());
    for (const auto& e : q) {
        if (e.pair_id == anchor_pair_id) continue;
        eligible.push_back({dot(anchor, e.embedding), &e});
    }
    if (eligible.empty())
        throw PoolEmptyError("hardest_negatives: no eligible pool entries");

    auto harder = [](const Scored& a, const Scored& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.entry->pair_id < b.entry->pair_id;
    };
    std::size_t keep = std::min(r, eligible.size());
    std::partial_sort(eligible.begin(), eligible.begin() + keep,
                      eligible.end(), harder);
    eligible.resize(keep);

    NegativeSelection sel;
    sel.anchor_id = anchor_pair_id;
    for (const auto& s : eligible) sel.candidate_set.push_back(s.entry->pair_id);
    std::size_t pick = rng.uniform_int(keep);
    sel.selected_id = eligible[pick].entry->pair_id;
    sel.similarity = eligible[pick].sim;
    return sel;
}

void MiningPool::refresh_from_batch(const std::vector<BatchMember>& batch,
                                    long step) {
    for (const auto& m : batch) push(m.view, m.pair_id, m.embedding, step);
}

std::vector<NegativeSelection> batch_hardest(
    const std::vector<Vec>& anchors, const std::vector<Vec>& candidates,
    const std::vector<std::string>& pair_ids) {
    if (anchors.size() != candidates.size() ||
        anchors.size() != pair_ids.size())
        throw ShapeError("batch_hardest: batch arrays differ in length");
    if (anchors.size() < 2)
        throw BatchTooSmallError("batch_hardest: needs >= 2 pairs");

    std::vector<NegativeSelection> out;
    out.reserve(anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        NegativeSelection sel;
        sel.anchor_id = pair_ids[i];
        bool found = false;
        double best = 0.0;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < candidates.size(); ++j) {
            if (j == i) continue;  // never the anchor's own positive
            double s = dot(anchors[i], candidates[j]);
            if (!found || s > best ||
                (s == best && pair_ids[j] < pair_ids[best_j])) {
                best = s;
                best_j = j;
                found = true;
            }
        }
        sel.selected_id = pair_ids[best_j];
        sel.similarity = best;
        sel.candidate_set.push_back(pair_ids[best_j]);
        out.push_back(std::move(sel));
    }
    return out;
}

}  // namespace cvgeo
