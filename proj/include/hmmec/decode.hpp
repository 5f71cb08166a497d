#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hmmec/model.hpp"
#include "hmmec/state_space.hpp"

namespace hmmec {

enum class DecodeStatus : uint8_t {
    ok = 0,
    dead_trellis,     // every candidate state died at some position
    budget_exceeded,  // sequential search ran past its node budget
};

const char* decode_status_name(DecodeStatus s);

struct DecodeStats {
    uint64_t visited = 0;          // node expansions
    uint64_t back_moves = 0;
    uint64_t threshold_drops = 0;  // times T was lowered
};

struct DecodeResult {
    DecodeStatus status = DecodeStatus::dead_trellis;
    std::vector<StateId> path;     // one state per position t = k..L; empty on failure
    std::vector<Base> corrected;   // reconstructed bases; empty on failure
    double score = 0;              // ln path probability (A-Viterbi) / final metric (Fano)
    DecodeStats stats;
    int last_live_stage = 0;       // deepest 1-based t reached before dying
};

// Viterbi restricted to states within Hamming distance d of each observed
// window. Ties break to the smallest state id, so results are reproducible.
// Pre: read is N-free; quality scores clamp to [1, qmax] internally.
DecodeResult aviterbi_decode(const Read& read, const HmmParams& params, const StateSpace& space,
                             const NeighborhoodCache& nbhd, int d, StateId initial_state);

// One step of the path metric: M_s = M_c + log2(trans) + log2(emit) + bias.
double fano_metric_update(double metric_current, double trans_prob, double emit_prob, double bias);

// Threshold tightening after a first visit: the largest multiple of delta
// that does not exceed the current metric.
double fano_tighten(double metric_current, double delta);

struct FanoConfig {
    double delta = 0.5;       // threshold quantum
    double bias = 2.0;        // per-branch bonus B
    uint64_t max_visits = 0;  // 0 means 64 * (L - k)
};

// Fano sequential search over K-restricted extensions (no Hamming pruning).
// Called-base N at a position falls back to an uninformative base factor 1/4.
DecodeResult fano_decode(const Read& read, const HmmParams& params, const StateSpace& space,
                         const FanoConfig& cfg, StateId initial_state);

// First kmer + last base of each following state. Throws if consecutive states
// do not overlap by k-1 (that would be a decoder bug).
std::vector<Base> reconstruct_read(std::span<const StateId> path, const StateSpace& space);

// Initial state for decoding: the observed first kmer if it is in K (N mapped
// to A); otherwise the neighborhood member with the highest incoming
// transition mass (smallest id on ties); kNoState if the neighborhood is empty.
StateId choose_initial_state(const Read& read, const HmmParams& params, const StateSpace& space,
                             const NeighborhoodCache& nbhd);

}  // namespace hmmec
