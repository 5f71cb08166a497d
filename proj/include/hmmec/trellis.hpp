#pragma once

#include <vector>

#include "hmmec/model.hpp"
#include "hmmec/state_space.hpp"

namespace hmmec {

// Stage s holds the surviving states for position t = k + s (1-based). Stage 0
// is the pinned initial state. A state enters stage s >= 1 only if it is an
// active successor (positive transition probability) of a stage s-1 state and
// lies within Hamming distance d of the observed window ending at t.
struct Trellis {
    int k = 0;
    int L = 0;                    // read length
    bool dead = false;
    int last_live_stage = 0;      // 1-based t of the deepest nonempty stage
    std::vector<std::vector<StateId>> stages;  // ids ascending within a stage
};

// Pre: read is N-free, length >= k, initial_state active in space.
Trellis build_trellis(const Read& read, const StateSpace& space, const HmmParams& params,
                      const NeighborhoodCache& nbhd, int d, StateId initial_state);

}  // namespace hmmec
