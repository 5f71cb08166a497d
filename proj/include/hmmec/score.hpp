#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hmmec/simulate.hpp"

namespace hmmec {

struct CorrectionReport {
    uint64_t e = 0;   // ground-truth errors past the excluded first kmer
    uint64_t ce = 0;  // errors restored to the true base
    uint64_t fa = 0;  // correct bases corrupted + errors moved to another wrong base
    double zeta = 0;  // ce/e (0 when e == 0)
    double eta = 0;   // (ce - fa)/e (0 when e == 0)
    uint64_t reads = 0;
    // Decoder failure tallies, merged in from correction diagnostics.
    uint64_t dead_trellis = 0;
    uint64_t budget_exceeded = 0;
};

// Per-base tally at positions > k_exclusion (1-based). All three inputs must
// be aligned: same order, same ids, same lengths.
CorrectionReport score_corrections(std::span<const Read> original, std::span<const Read> corrected,
                                   std::span<const TruthRecord> truth, int k_exclusion);

// Truth TSV: read_id <TAB> position <TAB> true_sequence. '#' lines skipped.
void write_truth_tsv(std::ostream& out, std::span<const TruthRecord> truth);
std::vector<TruthRecord> ingest_external_truth(std::istream& in);

void write_report_tsv(std::ostream& out, const CorrectionReport& report);
void print_report(std::ostream& out, const CorrectionReport& report);

}  // namespace hmmec
