#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>

namespace ghostdiff {

/// Order-independent pairwise reduction over indexed leaves.
///
/// Every leaf carries the index of the item it summarizes. Partial sums are
/// nodes of a fixed binary tree over the index space: the node at
/// (level, base) covers indices [base, base + 2^level). A node is formed the
/// moment both of its children exist, combining them as left.add(right).
/// After any set of leaves has been inserted, in any order and split across
/// any number of reducers that are then merged, the surviving node set and
/// every addition performed are uniquely determined by the index set alone,
/// so floating-point results are bit-identical regardless of scheduling.
///
/// The payload type must provide void add(const P&) that folds the argument
/// (the right operand) into *this (the left operand).
template <class P>
class PairwiseReducer {
  public:
    /// Insert a leaf payload for an index not inserted before.
    void insert_leaf(std::uint64_t index, P leaf) {
        insert_node(0, index, std::move(leaf));
        ++count_;
    }

    /// Absorb another reducer built over a disjoint set of indices.
    void merge_from(PairwiseReducer&& other) {
        for (auto& [key, payload] : other.nodes_)
            insert_node(key.first, key.second, std::move(payload));
        count_ += other.count_;
        other.nodes_.clear();
        other.count_ = 0;
    }

    std::uint64_t count() const { return count_; }
    bool empty() const { return nodes_.empty(); }

    /// Combine the surviving nodes in ascending base order into one total.
    /// Throws if nothing was inserted.
    P fold() const {
        if (nodes_.empty()) throw std::logic_error("reduction: fold of empty reducer");
        // Surviving nodes cover disjoint ranges; ascending base order is
        // well defined and canonical for the inserted index set.
        std::map<std::uint64_t, const P*> by_base;
        for (const auto& [key, payload] : nodes_) by_base.emplace(key.second, &payload);
        auto it = by_base.begin();
        P acc = *it->second;
        for (++it; it != by_base.end(); ++it) acc.add(*it->second);
        return acc;
    }

  private:
    void insert_node(int level, std::uint64_t base, P payload) {
        for (;;) {
            std::uint64_t sibling = base ^ (1ull << level);
            auto it = nodes_.find({level, sibling});
            if (it == nodes_.end()) {
                auto [pos, inserted] = nodes_.emplace(Key{level, base}, std::move(payload));
                if (!inserted)
                    throw std::logic_error("reduction: duplicate leaf index");
                return;
            }
            if (sibling < base) {
                it->second.add(payload);
                payload = std::move(it->second);
            } else {
                payload.add(it->second);
            }
            nodes_.erase(it);
            base &= ~(1ull << level);
            ++level;
        }
    }

    using Key = std::pair<int, std::uint64_t>;
    std::map<Key, P> nodes_;
    std::uint64_t count_ = 0;
};

}  // namespace ghostdiff
