#ifndef CVGEO_MINING_HPP
#define CVGEO_MINING_HPP

#include <deque>
#include <string>
#include <vector>

#include "cvgeo/model.hpp"
#include "cvgeo/rng.hpp"
#include "cvgeo/tensor.hpp"

namespace cvgeo {

struct PoolEntry {
    std::string pair_id;
    Vec embedding;
    long step = 0;
};

struct NegativeSelection {
    std::string anchor_id;
    std::string selected_id;
    double similarity = 0.0;
    std::vector<std::string> candidate_set;  // the r ids considered
};

struct BatchMember {
    View view;
    std::string pair_id;
    Vec embedding;
};

// FIFO cache of recent embeddings, one ring per view. Re-pushing a live
// pair_id replaces the entry and moves it to the back. The pool only decides
// WHICH sample is a hard negative; its (possibly stale) vectors never feed
// the loss directly.
class MiningPool {
public:
    explicit MiningPool(std::size_t capacity) : capacity_(capacity) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t size(View view) const { return ring(view).size(); }
    const std::deque<PoolEntry>& entries(View view) const { return ring(view); }

    void push(View view, const std::string& pair_id, const Vec& embedding,
              long step);

    // Top-r most similar entries of the given view (the anchor's opposite),
    // excluding the anchor's own pair. Ties break toward the smaller pair_id;
    // one candidate is then drawn uniformly. Fewer than r eligible entries
    // fall back to all of them.
    NegativeSelection hardest_negatives(View candidate_view, const Vec& anchor,
                                        const std::string& anchor_pair_id,
                                        std::size_t r, Rng& rng) const;

    void refresh_from_batch(const std::vector<BatchMember>& batch, long step);

private:
    const std::deque<PoolEntry>& ring(View view) const {
        return view == View::street ? street_ : aerial_;
    }
    std::deque<PoolEntry>& ring(View view) {
        return view == View::street ? street_ : aerial_;
    }

    std::size_t capacity_;
    std::deque<PoolEntry> street_;
    std::deque<PoolEntry> aerial_;
};

// Within-batch baseline: for each anchor, the hardest same-batch negative by
// cosine similarity (never the anchor's own positive).
std::vector<NegativeSelection> batch_hardest(
    const std::vector<Vec>& anchors, const std::vector<Vec>& candidates,
    const std::vector<std::string>& pair_ids);

}  // namespace cvgeo

#endif
