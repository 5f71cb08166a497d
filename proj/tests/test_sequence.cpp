#include <random>
#include <sstream>

#include "doctest.h"
#include "hmmec/errors.hpp"
#include "hmmec/fastq.hpp"
#include "hmmec/seq.hpp"

using namespace hmmec;

TEST_CASE("base character round-trip") {
    CHECK(base_char(Base::A) == 'A');
    CHECK(base_char(Base::T) == 'T');
    CHECK(base_from_char('a') == Base::A);
    CHECK(base_from_char('G') == Base::G);
    CHECK(base_from_char('n') == Base::N);
    CHECK_THROWS(base_from_char('X'));
    CHECK_THROWS(base_from_char(' '));
}

TEST_CASE("kmer packing matches lexicographic order") {
    // AAC < AAT < ACA: integer order on bits must agree.
    Kmer a = encode_kmer("AAC");
    Kmer b = encode_kmer("AAT");
    Kmer c = encode_kmer("ACA");
    CHECK(a.bits < b.bits);
    CHECK(b.bits < c.bits);
    CHECK(a < b);
    CHECK(decode_kmer(a) == "AAC");
    CHECK(decode_kmer(c) == "ACA");
}

TEST_CASE("encode_kmer rejects N and wrong lengths") {
    CHECK_THROWS(encode_kmer("ACN"));
    CHECK_THROWS(encode_kmer(""));
    std::string long_kmer(33, 'A');
    CHECK_THROWS(encode_kmer(long_kmer));
}

TEST_CASE("kmer_base and kmer_last_base") {
    Kmer km = encode_kmer("GATC");
    CHECK(kmer_base(km, 0) == Base::G);
    CHECK(kmer_base(km, 1) == Base::A);
    CHECK(kmer_base(km, 3) == Base::C);
    CHECK(kmer_last_base(km) == Base::C);
}

TEST_CASE("kmer_extend drops the left base and appends") {
    Kmer km = encode_kmer("GATC");
    Kmer ext = kmer_extend(km, Base::T);
    CHECK(decode_kmer(ext) == "ATCT");
    CHECK(ext.k == 4);
    // chaining walks the sequence
    ext = kmer_extend(ext, Base::G);
    CHECK(decode_kmer(ext) == "TCTG");
}

TEST_CASE("hamming distance equals naive character comparison") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        int k = 1 + int(rng() % 32);
        std::string s1(k, 'A'), s2(k, 'A');
        const char* abc = "ACGT";
        for (int i = 0; i < k; ++i) {
            s1[i] = abc[rng() % 4];
            s2[i] = abc[rng() % 4];
        }
        int naive = 0;
        for (int i = 0; i < k; ++i) naive += s1[i] != s2[i];
        Kmer a = encode_kmer(s1), b = encode_kmer(s2);
        CHECK(hamming_distance(a, b) == uint32_t(naive));
        CHECK(hamming_bits(a.bits, b.bits) == uint32_t(naive));
    }
    CHECK_THROWS(hamming_distance(encode_kmer("ACG"), encode_kmer("ACGT")));
}

TEST_CASE("encode/decode round-trip on random kmers") {
    std::mt19937_64 rng(12);
    const char* abc = "ACGT";
    for (int trial = 0; trial < 100; ++trial) {
        int k = 1 + int(rng() % 32);
        std::string s(k, 'A');
        for (int i = 0; i < k; ++i) s[i] = abc[rng() % 4];
        CHECK(decode_kmer(encode_kmer(s)) == s);
    }
}

TEST_CASE("Read helpers") {
    Read r;
    r.bases = bases_from_string("ACGTN");
    CHECK(r.length() == 5);
    CHECK(r.has_n());
    r.bases.pop_back();
    CHECK(!r.has_n());
    CHECK(bases_to_string(r.bases) == "ACGT");
}

TEST_CASE("fastq parse and canonical write round-trip") {
    std::string text =
        "@read1 extra tokens kept\n"
        "ACGT\n"
        "+\n"
        "!#%'\n"
        "@read2\n"
        "TTTT\n"
        "+read2\n"
        "IIII\n";
    std::istringstream in(text);
    auto reads = parse_fastq(in);
    REQUIRE(reads.size() == 2);
    CHECK(reads[0].id == "read1 extra tokens kept");
    CHECK(bases_to_string(reads[0].bases) == "ACGT");
    // '!' is phred 0, clamped up to 1; '#' is 2; '%' is 4; '\'' is 6
    CHECK(reads[0].quals == std::vector<uint8_t>{1, 2, 4, 6});
    CHECK(reads[1].quals == std::vector<uint8_t>{40, 40, 40, 40});

    std::ostringstream out;
    write_fastq(out, reads, 33);
    std::istringstream in2(out.str());
    auto reads2 = parse_fastq(in2);
    REQUIRE(reads2.size() == 2);
    CHECK(reads2[0].bases == reads[0].bases);
    CHECK(reads2[0].quals == reads[0].quals);
    CHECK(reads2[1].id == reads[1].id);
}

TEST_CASE("fastq tolerates leading comments and CRLF") {
    std::string text = "# produced by something\r\n\r\n@r\r\nACGN\r\n+\r\nIIII\r\n";
    std::istringstream in(text);
    auto reads = parse_fastq(in);
    REQUIRE(reads.size() == 1);
    CHECK(reads[0].bases[3] == Base::N);
}

TEST_CASE("fastq errors carry the record number") {
    std::istringstream bad("@r\nACGT\nXXXX\nIIII\n");  // missing '+' line
    CHECK_THROWS_AS(parse_fastq(bad), ParseError);
    std::istringstream bad2("@r\nACGT\n+\nII\n");  // length mismatch
    CHECK_THROWS_AS(parse_fastq(bad2), ParseError);
    std::istringstream bad3("ACGT\n+\nIIII\n");  // no header
    CHECK_THROWS_AS(parse_fastq(bad3), ParseError);
}

TEST_CASE("quality clamp floors at 1 and caps at the limit") {
    std::istringstream in("@r\nAC\n+\n!~\n");  // phred 0 and 93
    auto reads = parse_fastq(in, {33, 40});
    CHECK(reads[0].quals[0] == 1);
    CHECK(reads[0].quals[1] == 40);
}

TEST_CASE("fasta parse and wrapped write") {
    std::string text = ">g1 description\nACGTACGT\nACGT\n>g2\nTTTT\n";
    std::istringstream in(text);
    auto recs = parse_fasta(in);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].name == "g1 description");
    CHECK(bases_to_string(recs[0].bases) == "ACGTACGTACGT");

    std::ostringstream out;
    write_fasta(out, "long", std::vector<Base>(150, Base::C));
    std::istringstream in2(out.str());
    auto recs2 = parse_fasta(in2);
    REQUIRE(recs2.size() == 1);
    CHECK(recs2[0].bases.size() == 150);
}
