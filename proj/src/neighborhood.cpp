#include <algorithm>
#include <mutex>
#include <stdexcept>

#include "hmmec/state_space.hpp"

namespace hmmec {

namespace {

// Visits every packed segment (len bases) within Hamming distance r of seg,
// including seg itself. Deterministic order; each mutant visited exactly once.
template <typename F>
void visit_mutants(uint64_t seg, int len, int pos, int r, F&& f) {
    if (r == 0 || pos == len) {
        f(seg);
        return;
    }
    visit_mutants(seg, len, pos + 1, r, f);
    int shift = 2 * (len - 1 - pos);
    uint64_t cur = (seg >> shift) & 3u;
    for (uint64_t b = 0; b < 4; ++b) {
        if (b == cur) continue;
        uint64_t mut = (seg & ~(3ull << shift)) | (b << shift);
        visit_mutants(mut, len, pos + 1, r - 1, f);
    }
}

// Sum_{i<=d} C(k,i) * 3^i, saturating; used to pick a search strategy.
uint64_t mutant_count(int k, int d) {
    uint64_t total = 0, comb = 1, pow3 = 1;
    for (int i = 0; i <= d; ++i) {
        if (i > 0) {
            comb = comb * static_cast<uint64_t>(k - i + 1) / static_cast<uint64_t>(i);
            pow3 *= 3;
        }
        uint64_t term = comb * pow3;
        if (term > (1ull << 40)) return ~0ull;
        total += term;
    }
    return total;
}

std::vector<StateId> scan_all(const StateSpace& space, uint64_t center, int d) {
    std::vector<StateId> out;
    for (StateId id = 0; id < space.size(); ++id)
        if (space.is_active(id) && hamming_bits(space.kmer_bits(id), center) <= static_cast<uint32_t>(d))
            out.push_back(id);
    return out;
}

std::vector<StateId> enumerate_probe(const StateSpace& space, uint64_t center, int k, int d) {
    std::vector<StateId> out;
    visit_mutants(center, k, 0, d, [&](uint64_t mut) {
        StateId id = space.find_bits(mut);
        if (id != kNoState) out.push_back(id);
    });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Pigeonhole over the two kmer halves: any state within distance d has at most
// floor(d/2) mismatches in at least one half, so probing both halves at radius
// floor(d/2) covers N_d exactly.
std::vector<StateId> half_split(const StateSpace& space, const std::vector<StateId>& by_suffix,
                                uint64_t center, int k, int d) {
    const int k2 = k / 2;           // suffix bases (low bits)
    const int k1 = k - k2;          // prefix bases (high bits)
    const int r = d / 2;
    const uint64_t suf_mask = (1ull << (2 * k2)) - 1;
    std::vector<StateId> out;

    // Prefix side: states are id-ordered by full bits, so one prefix value is a
    // contiguous id range.
    visit_mutants(center >> (2 * k2), k1, 0, r, [&](uint64_t pre) {
        uint64_t lo_bits = pre << (2 * k2);
        StateId lo = 0, hi = static_cast<StateId>(space.size());
        while (lo < hi) {  // lower_bound on lo_bits
            StateId mid = lo + (hi - lo) / 2;
            if (space.kmer_bits(mid) < lo_bits) lo = mid + 1; else hi = mid;
        }
        for (StateId id = lo; id < space.size() && (space.kmer_bits(id) >> (2 * k2)) == pre; ++id)
            if (space.is_active(id) && hamming_bits(space.kmer_bits(id), center) <= static_cast<uint32_t>(d))
                out.push_back(id);
    });

    // Suffix side via the (suffix, id)-ordered index.
    visit_mutants(center & suf_mask, k2, 0, r, [&](uint64_t suf) {
        auto cmp = [&](StateId id, uint64_t key) { return (space.kmer_bits(id) & suf_mask) < key; };
        auto it = std::lower_bound(by_suffix.begin(), by_suffix.end(), suf, cmp);
        for (; it != by_suffix.end() && (space.kmer_bits(*it) & suf_mask) == suf; ++it)
            if (space.is_active(*it) && hamming_bits(space.kmer_bits(*it), center) <= static_cast<uint32_t>(d))
                out.push_back(*it);
    });

    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<StateId> compute_members(const StateSpace& space, uint64_t center, int d,
                                     const std::vector<StateId>* by_suffix) {
    const int k = space.k();
    if (d < 0) throw std::invalid_argument("neighborhood: d must be >= 0");
    // Strategy: tiny spaces scan; small radii enumerate-and-probe; larger radii
    // use the half-split (direct enumeration grows like C(k,d)*3^d).
    if (d >= k || space.size() <= 4096 || mutant_count(k, d) > space.size())
        return scan_all(space, center, d);
    if (d <= 2) return enumerate_probe(space, center, k, d);
    if (by_suffix != nullptr) return half_split(space, *by_suffix, center, k, d);

    std::vector<StateId> suffix_order(space.size());
    for (StateId i = 0; i < space.size(); ++i) suffix_order[i] = i;
    const uint64_t suf_mask = (1ull << (2 * (k / 2))) - 1;
    std::stable_sort(suffix_order.begin(), suffix_order.end(), [&](StateId a, StateId b) {
        return (space.kmer_bits(a) & suf_mask) < (space.kmer_bits(b) & suf_mask);
    });
    return half_split(space, suffix_order, center, k, d);
}

}  // namespace

Neighborhood neighborhood(const Kmer& center, int d, const StateSpace& space) {
    if (center.k != space.k()) throw std::invalid_argument("neighborhood: kmer length mismatch");
    Neighborhood nb;
    nb.center = center;
    nb.d = d;
    nb.members = compute_members(space, center.bits, d, nullptr);
    return nb;
}

NeighborhoodCache::NeighborhoodCache(const StateSpace& space, int d) : space_(space), d_(d) {
    if (d < 0 || d > space.k()) throw std::invalid_argument("NeighborhoodCache: bad d");
    by_suffix_.resize(space.size());
    for (StateId i = 0; i < space.size(); ++i) by_suffix_[i] = i;
    const uint64_t suf_mask = (1ull << (2 * (space.k() / 2))) - 1;
    std::stable_sort(by_suffix_.begin(), by_suffix_.end(), [&](StateId a, StateId b) {
        return (space_.kmer_bits(a) & suf_mask) < (space_.kmer_bits(b) & suf_mask);
    });
}

std::shared_ptr<const std::vector<StateId>> NeighborhoodCache::members(uint64_t center_bits) const {
    {
        std::shared_lock lock(mu_);
        auto it = memo_.find(center_bits);
        if (it != memo_.end()) return it->second;
    }
    auto fresh = std::make_shared<std::vector<StateId>>(
        compute_members(space_, center_bits, d_, &by_suffix_));
    std::unique_lock lock(mu_);
    auto [it, inserted] = memo_.emplace(center_bits, std::move(fresh));
    return it->second;  // first inserter wins; identical content either way
}

void NeighborhoodCache::refresh() {
    std::unique_lock lock(mu_);
    for (auto& [bits, members] : memo_) {
        bool stale = false;
        for (StateId id : *members)
            if (!space_.is_active(id)) { stale = true; break; }
        if (!stale) continue;
        auto filtered = std::make_shared<std::vector<StateId>>();
        filtered->reserve(members->size());
        for (StateId id : *members)
            if (space_.is_active(id)) filtered->push_back(id);
        members = filtered;
    }
}

}  // namespace hmmec
