#include "hmmec/state_space.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace hmmec {

namespace {

struct CountEntry {
    std::array<uint64_t, 4> succ{0, 0, 0, 0};
    uint64_t occ = 0;
};

using CountMap = std::unordered_map<uint64_t, CountEntry>;

// Adds every N-free window of one read to the map. A window's succession count
// is bumped only when the following base is A/C/G/T.
void count_read(const Read& r, int k, CountMap& m) {
    const size_t len = r.bases.size();
    if (len < static_cast<size_t>(k)) return;
    const uint64_t mask = (k == 32) ? ~0ull : ((1ull << (2 * k)) - 1);
    uint64_t bits = 0;
    size_t filled = 0;  // valid trailing bases accumulated in `bits`
    for (size_t i = 0; i < len; ++i) {
        Base b = r.bases[i];
        if (!is_acgt(b)) {
            filled = 0;
            bits = 0;
            continue;
        }
        bits = ((bits << 2) | static_cast<uint64_t>(b)) & mask;
        if (filled < static_cast<size_t>(k)) ++filled;
        if (filled < static_cast<size_t>(k)) continue;
        CountEntry& e = m[bits];
        e.occ += 1;
        if (i + 1 < len && is_acgt(r.bases[i + 1]))
            e.succ[static_cast<size_t>(r.bases[i + 1])] += 1;
    }
}

}  // namespace

StateSpace StateSpace::from_reads(std::span<const Read> reads, int k, int threads) {
    if (k < 1 || k > kMaxK) throw std::invalid_argument("StateSpace: k must be in [1, 32]");
    if (threads < 1) threads = 1;

    // Per-thread maps over fixed contiguous chunks, merged in chunk order.
    size_t n = reads.size();
    size_t nchunks = std::min<size_t>(static_cast<size_t>(threads), std::max<size_t>(n, 1));
    std::vector<CountMap> maps(nchunks);
    if (nchunks <= 1) {
        for (const Read& r : reads) count_read(r, k, maps[0]);
    } else {
        size_t chunk = (n + nchunks - 1) / nchunks;
        std::vector<std::thread> pool;
        for (size_t c = 0; c < nchunks; ++c) {
            size_t lo = c * chunk, hi = std::min(n, lo + chunk);
            pool.emplace_back([&, c, lo, hi] {
                for (size_t i = lo; i < hi; ++i) count_read(reads[i], k, maps[c]);
            });
        }
        for (auto& t : pool) t.join();
    }

    CountMap total = std::move(maps[0]);
    for (size_t c = 1; c < maps.size(); ++c) {
        for (const auto& [bits, e] : maps[c]) {
            CountEntry& acc = total[bits];
            acc.occ += e.occ;
            for (int b = 0; b < 4; ++b) acc.succ[b] += e.succ[b];
        }
    }

    StateSpace s;
    s.k_ = k;
    s.bits_.reserve(total.size());
    for (const auto& [bits, e] : total) s.bits_.push_back(bits);
    std::sort(s.bits_.begin(), s.bits_.end());

    s.succ_counts_.resize(s.bits_.size());
    s.occ_.resize(s.bits_.size());
    for (size_t i = 0; i < s.bits_.size(); ++i) {
        const CountEntry& e = total.at(s.bits_[i]);
        s.succ_counts_[i] = e.succ;
        s.occ_[i] = e.occ;
        for (int b = 0; b < 4; ++b) s.total_adjacencies_ += e.succ[b];
    }
    s.active_.assign(s.bits_.size(), 1);
    s.active_count_ = s.bits_.size();
    s.build_successor_table();
    return s;
}

StateSpace StateSpace::from_kmers(int k, std::vector<uint64_t> sorted_bits) {
    if (k < 1 || k > kMaxK) throw std::invalid_argument("StateSpace: k must be in [1, 32]");
    if (!std::is_sorted(sorted_bits.begin(), sorted_bits.end()) ||
        std::adjacent_find(sorted_bits.begin(), sorted_bits.end()) != sorted_bits.end())
        throw std::invalid_argument("StateSpace: kmer list must be sorted and duplicate-free");
    StateSpace s;
    s.k_ = k;
    s.bits_ = std::move(sorted_bits);
    s.succ_counts_.assign(s.bits_.size(), {0, 0, 0, 0});
    s.occ_.assign(s.bits_.size(), 0);
    s.active_.assign(s.bits_.size(), 1);
    s.active_count_ = s.bits_.size();
    s.build_successor_table();
    return s;
}

void StateSpace::build_successor_table() {
    const uint64_t mask = (k_ == 32) ? ~0ull : ((1ull << (2 * k_)) - 1);
    succ_id_.resize(bits_.size());
    for (size_t i = 0; i < bits_.size(); ++i) {
        for (int b = 0; b < 4; ++b) {
            uint64_t next = ((bits_[i] << 2) | static_cast<uint64_t>(b)) & mask;
            auto it = std::lower_bound(bits_.begin(), bits_.end(), next);
            succ_id_[i][b] = (it != bits_.end() && *it == next)
                                 ? static_cast<StateId>(it - bits_.begin())
                                 : kNoState;
        }
    }
}

StateId StateSpace::find_bits(uint64_t bits) const {
    auto it = std::lower_bound(bits_.begin(), bits_.end(), bits);
    if (it == bits_.end() || *it != bits) return kNoState;
    auto id = static_cast<StateId>(it - bits_.begin());
    return active_[id] ? id : kNoState;
}

StateId StateSpace::find(const Kmer& km) const {
    if (km.k != k_) throw std::invalid_argument("StateSpace::find: kmer length mismatch");
    return find_bits(km.bits);
}

void StateSpace::deactivate(std::span<const StateId> ids) {
    bool changed = false;
    for (StateId id : ids) {
        if (id >= active_.size()) throw std::invalid_argument("deactivate: bad state id");
        if (active_[id]) {
            active_[id] = 0;
            --active_count_;
            changed = true;
        }
    }
    if (changed) ++version_;
}

void StateSpace::dump(std::ostream& out) const {
    for (size_t i = 0; i < bits_.size(); ++i) {
        if (!active_[i]) continue;
        out << decode_kmer(Kmer{static_cast<uint8_t>(k_), bits_[i]}) << '\t' << occ_[i];
        for (int b = 0; b < 4; ++b) out << '\t' << succ_counts_[i][b];
        out << '\n';
    }
}

}  // namespace hmmec
