#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hmmec {

// 2-bit base codes. N is representable in a Read but never inside a packed kmer.
enum class Base : uint8_t { A = 0, C = 1, G = 2, T = 3, N = 4 };

constexpr int kAlphabet = 4;

inline bool is_acgt(Base b) { return static_cast<uint8_t>(b) < 4; }

char base_char(Base b);
Base base_from_char(char c);  // accepts acgtn/ACGTN, throws on anything else

std::string bases_to_string(std::span<const Base> bases);
std::vector<Base> bases_from_string(std::string_view s);

// Packed kmer, first base in the most significant bit pair, so integer order on
// `bits` matches lexicographic order on the base string (A < C < G < T).
struct Kmer {
    uint8_t k = 0;
    uint64_t bits = 0;
    friend auto operator<=>(const Kmer&, const Kmer&) = default;  // orders by (k, bits)
};

constexpr int kMaxK = 32;

Kmer encode_kmer(std::span<const Base> window);
Kmer encode_kmer(std::string_view window);
std::string decode_kmer(const Kmer& km);
void decode_kmer(const Kmer& km, std::span<Base> out);

Base kmer_base(const Kmer& km, int pos);  // pos in [0, k), 0 is the leftmost base

inline Base kmer_last_base(const Kmer& km) { return static_cast<Base>(km.bits & 3u); }

// Drops the leftmost base and appends b on the right: the (k-1)-overlap successor.
Kmer kmer_extend(const Kmer& km, Base b);

// Number of mismatched base positions between two equal-length packed kmers.
inline uint32_t hamming_bits(uint64_t a, uint64_t b) {
    uint64_t x = a ^ b;
    x = (x | (x >> 1)) & 0x5555555555555555ull;  // collapse each bit pair to one flag
    return static_cast<uint32_t>(std::popcount(x));
}

uint32_t hamming_distance(const Kmer& a, const Kmer& b);  // throws if a.k != b.k

struct Read {
    std::string id;
    std::vector<Base> bases;
    std::vector<uint8_t> quals;  // discrete scores, 1..Qmax
    size_t length() const { return bases.size(); }
    bool has_n() const;
};

}  // namespace hmmec
