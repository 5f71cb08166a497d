#pragma once

#include <stdexcept>

namespace hmmec {

// Malformed input files (FASTQ/FASTA/TSV/model). Messages carry the 1-based
// record or line index.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hmmec
