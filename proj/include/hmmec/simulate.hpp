#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hmmec/seq.hpp"

namespace hmmec {

// Per-position distribution of quality scores 1..qmax.
struct QualityModel {
    int qmax = 0;
    std::vector<std::vector<double>> pmf;  // [position 0-based][q - 1]

    int read_len() const { return static_cast<int>(pmf.size()); }
    void validate() const;  // every PMF sums to 1 within 1e-10

    // Mean over positions of sum_q pmf(q) * 10^(-q/10): the substitution rate
    // the model induces.
    double implied_error_rate() const;
};

QualityModel constant_quality_model(int read_len, int qmax, int q);

// Two-component PMF per position: a high-quality mode at qmax and a
// low-quality tail (q = 10 or lower) whose weight grows linearly with t,
// calibrated so the implied error rate hits the target. Deterministic.
QualityModel default_quality_model(int read_len, int qmax, double target_error_rate);

struct TruthRecord {
    std::string read_id;
    uint64_t genome_pos = 0;  // 1-based start of the read on the forward strand
    std::vector<Base> true_bases;
};

struct SimulatedReads {
    std::vector<Read> reads;
    std::vector<TruthRecord> truth;
    uint64_t substituted_bases = 0;  // realized errors across all reads
};

// Draws n_reads forward-strand reads of length read_len with starts uniform on
// 1..|genome|-read_len+1. Per position: quality q ~ qmodel, then with
// probability 10^(-q/10) the base is replaced by one of the 3 alternatives
// uniformly. One RNG stream; a fixed seed fixes every byte of the output.
SimulatedReads simulate_reads(std::span<const Base> genome, uint64_t n_reads, int read_len,
                              const QualityModel& qmodel, uint64_t seed);

// Uniform random A/C/G/T sequence (for building test genomes).
std::vector<Base> random_genome(size_t length, uint64_t seed);

}  // namespace hmmec
