#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "hmmec/seq.hpp"

namespace hmmec {

using StateId = uint32_t;
constexpr StateId kNoState = std::numeric_limits<StateId>::max();

// The set K of kmers observed in the input reads, with succession counts
// n(alpha, beta). Ids are dense and assigned in sorted kmer order, so they do
// not depend on read order. States can be deactivated (pruned) later; ids of
// surviving states never change.
class StateSpace {
public:
    StateSpace() = default;

    // Scans every N-free length-k window; counts alpha->beta whenever the next
    // base is A/C/G/T. Deterministic for a fixed read multiset.
    static StateSpace from_reads(std::span<const Read> reads, int k, int threads = 1);

    // States only, all counts zero. Input must be sorted and duplicate-free.
    static StateSpace from_kmers(int k, std::vector<uint64_t> sorted_bits);

    int k() const { return k_; }
    size_t size() const { return bits_.size(); }           // including inactive
    size_t active_count() const { return active_count_; }
    uint64_t version() const { return version_; }          // bumps on deactivate

    bool is_active(StateId id) const { return active_[id] != 0; }
    uint64_t kmer_bits(StateId id) const { return bits_[id]; }
    Kmer kmer(StateId id) const { return Kmer{static_cast<uint8_t>(k_), bits_[id]}; }

    StateId find(const Kmer& km) const;        // kNoState if absent or inactive
    StateId find_bits(uint64_t bits) const;

    // Precomputed (k-1)-overlap successor; kNoState if absent or inactive.
    StateId successor(StateId id, Base b) const {
        StateId s = succ_id_[id][static_cast<size_t>(b)];
        return (s != kNoState && active_[s]) ? s : kNoState;
    }

    const std::array<uint64_t, 4>& succ_counts(StateId id) const { return succ_counts_[id]; }
    uint64_t occurrence_count(StateId id) const { return occ_[id]; }
    uint64_t total_adjacencies() const { return total_adjacencies_; }

    void deactivate(std::span<const StateId> ids);

    // One line per active state: kmer, occurrence count, four successor counts.
    void dump(std::ostream& out) const;

private:
    void build_successor_table();

    int k_ = 0;
    std::vector<uint64_t> bits_;                        // sorted ascending
    std::vector<std::array<uint64_t, 4>> succ_counts_;
    std::vector<uint64_t> occ_;
    std::vector<std::array<StateId, 4>> succ_id_;
    std::vector<uint8_t> active_;
    size_t active_count_ = 0;
    uint64_t total_adjacencies_ = 0;
    uint64_t version_ = 0;
};

// N_d(center) restricted to K: ids of all active states within Hamming
// distance d of center. Members are ascending.
struct Neighborhood {
    Kmer center;
    int d = 0;
    std::vector<StateId> members;
};

Neighborhood neighborhood(const Kmer& center, int d, const StateSpace& space);

// Memoized neighborhood lookups keyed by center kmer. Thread-safe: concurrent
// readers share results; first query for a center computes and inserts once.
// After pruning, call refresh() to drop deactivated members from cached sets.
class NeighborhoodCache {
public:
    NeighborhoodCache(const StateSpace& space, int d);

    const StateSpace& space() const { return space_; }
    int d() const { return d_; }

    std::shared_ptr<const std::vector<StateId>> members(uint64_t center_bits) const;

    void refresh();

private:
    const StateSpace& space_;
    int d_;
    std::vector<StateId> by_suffix_;  // all ids ordered by (suffix bits, id)
    mutable std::shared_mutex mu_;
    mutable std::unordered_map<uint64_t, std::shared_ptr<const std::vector<StateId>>> memo_;
};

}  // namespace hmmec
