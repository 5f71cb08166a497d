#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hmmec/errors.hpp"
#include "hmmec/seq.hpp"

namespace hmmec {

struct FastqOptions {
    int phred_offset = 33;  // 33 or 64
    int quality_cap = 60;   // scores clamp to [1, quality_cap]
};

// Reads all records. Lines starting with '#' before the first record are
// skipped (our own writers put a config echo there). Record ids keep the whole
// header line after '@'. Scores clamp to [1, quality_cap].
std::vector<Read> parse_fastq(std::istream& in, const FastqOptions& opt = {});

// Canonical form: @id / bases / + / quals, no comment lines, '\n' endings.
void write_fastq(std::ostream& out, std::span<const Read> reads, int phred_offset = 33);

struct FastaRecord {
    std::string name;
    std::vector<Base> bases;
};

std::vector<FastaRecord> parse_fasta(std::istream& in);
void write_fasta(std::ostream& out, std::string_view name, std::span<const Base> seq,
                 size_t wrap = 70);

}  // namespace hmmec
