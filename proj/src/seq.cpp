#include "hmmec/seq.hpp"

#include <array>
#include <stdexcept>

namespace hmmec {

char base_char(Base b) {
    static constexpr std::array<char, 5> tab = {'A', 'C', 'G', 'T', 'N'};
    auto v = static_cast<uint8_t>(b);
    if (v >= tab.size()) throw std::invalid_argument("base_char: bad base code");
    return tab[v];
}

Base base_from_char(char c) {
    switch (c) {
        case 'A': case 'a': return Base::A;
        case 'C': case 'c': return Base::C;
        case 'G': case 'g': return Base::G;
        case 'T': case 't': return Base::T;
        case 'N': case 'n': return Base::N;
        default:
            throw std::invalid_argument(std::string("base_from_char: invalid character '") + c + "'");
    }
}

std::string bases_to_string(std::span<const Base> bases) {
    std::string s;
    s.reserve(bases.size());
    for (Base b : bases) s.push_back(base_char(b));
    return s;
}

std::vector<Base> bases_from_string(std::string_view s) {
    std::vector<Base> v;
    v.reserve(s.size());
    for (char c : s) v.push_back(base_from_char(c));
    return v;
}

Kmer encode_kmer(std::span<const Base> window) {
    if (window.empty() || window.size() > kMaxK)
        throw std::invalid_argument("encode_kmer: k must be in [1, 32]");
    Kmer km;
    km.k = static_cast<uint8_t>(window.size());
    for (Base b : window) {
        if (!is_acgt(b)) throw std::invalid_argument("encode_kmer: window contains N");
        km.bits = (km.bits << 2) | static_cast<uint64_t>(b);
    }
    return km;
}

Kmer encode_kmer(std::string_view window) {
    std::vector<Base> v = bases_from_string(window);
    return encode_kmer(std::span<const Base>(v));
}

void decode_kmer(const Kmer& km, std::span<Base> out) {
    if (out.size() != km.k) throw std::invalid_argument("decode_kmer: output size != k");
    for (int i = 0; i < km.k; ++i)
        out[i] = static_cast<Base>((km.bits >> (2 * (km.k - 1 - i))) & 3u);
}

std::string decode_kmer(const Kmer& km) {
    std::string s(km.k, '?');
    for (int i = 0; i < km.k; ++i)
        s[i] = base_char(static_cast<Base>((km.bits >> (2 * (km.k - 1 - i))) & 3u));
    return s;
}

Base kmer_base(const Kmer& km, int pos) {
    if (pos < 0 || pos >= km.k) throw std::invalid_argument("kmer_base: position out of range");
    return static_cast<Base>((km.bits >> (2 * (km.k - 1 - pos))) & 3u);
}

Kmer kmer_extend(const Kmer& km, Base b) {
    if (!is_acgt(b)) throw std::invalid_argument("kmer_extend: cannot append N");
    Kmer out;
    out.k = km.k;
    uint64_t mask = (km.k == 32) ? ~0ull : ((1ull << (2 * km.k)) - 1);
    out.bits = ((km.bits << 2) | static_cast<uint64_t>(b)) & mask;
    return out;
}

uint32_t hamming_distance(const Kmer& a, const Kmer& b) {
    if (a.k != b.k) throw std::invalid_argument("hamming_distance: length mismatch");
    return hamming_bits(a.bits, b.bits);
}

bool Read::has_n() const {
    for (Base b : bases)
        if (!is_acgt(b)) return true;
    return false;
}

}  // namespace hmmec
