// Independent reference implementations used to validate the library.
// Everything here favors obviousness over speed: linear scans, explicit
// path enumeration, grid search. Nothing shares logic with src/.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hmmec/model.hpp"
#include "hmmec/seq.hpp"
#include "hmmec/state_space.hpp"

namespace oracle {

using hmmec::Base;
using hmmec::HmmParams;
using hmmec::Kmer;
using hmmec::Read;
using hmmec::StateId;
using hmmec::StateSpace;

// Naive Hamming distance via decoded strings.
inline int naive_hamming(const StateSpace& space, StateId a, uint64_t center_bits) {
    std::string sa = decode_kmer(space.kmer(a));
    std::string sc = decode_kmer(Kmer{static_cast<uint8_t>(space.k()), center_bits});
    int dist = 0;
    for (size_t i = 0; i < sa.size(); ++i) dist += sa[i] != sc[i];
    return dist;
}

// Linear-scan neighborhood: every active state within Hamming d of center.
inline std::vector<StateId> naive_neighborhood(const StateSpace& space, uint64_t center_bits,
                                               int d) {
    std::vector<StateId> out;
    for (StateId id = 0; id < space.size(); ++id) {
        if (!space.is_active(id)) continue;
        if (naive_hamming(space, id, center_bits) <= d) out.push_back(id);
    }
    return out;
}

// One complete state path through a read's trellis plus its probability
// pieces, accumulated exactly the way the decoders do (stage-ordered left
// fold) so scores are bit-comparable.
struct PathInfo {
    std::vector<StateId> states;  // length L-k+1, states[0] = initial
    double log_prob;              // natural log, transitions + emissions
    double lin_prob;              // same thing in linear domain
};

// Enumerate every positive-probability path: start pinned at initial_state,
// each following state must be an active successor via a positive transition
// and lie within Hamming d of the observed window at that position.
inline std::vector<PathInfo> enumerate_paths(const HmmParams& params, const Read& read,
                                             const StateSpace& space, int d,
                                             StateId initial_state) {
    const int k = space.k();
    const size_t L = read.length();
    const size_t stages = L - static_cast<size_t>(k);  // transitions taken
    std::vector<PathInfo> done;
    if (initial_state == hmmec::kNoState || !space.is_active(initial_state)) return done;

    // Observed windows at positions t = k+1 .. L (1-based), as raw bits.
    std::vector<uint64_t> window(stages);
    {
        Kmer w = encode_kmer(std::span<const Base>(read.bases.data(), static_cast<size_t>(k)));
        for (size_t s = 0; s < stages; ++s) {
            w = kmer_extend(w, read.bases[k + s]);
            window[s] = w.bits;
        }
    }

    struct Frame {
        std::vector<StateId> states;
        double log_prob = 0.0;
        double lin_prob = 1.0;
    };
    std::vector<Frame> frontier;
    frontier.push_back({{initial_state}, 0.0, 1.0});
    for (size_t s = 0; s < stages; ++s) {
        const int t = k + 1 + static_cast<int>(s);  // 1-based position emitted
        std::vector<Frame> next;
        for (const Frame& f : frontier) {
            StateId u = f.states.back();
            for (int b = 0; b < 4; ++b) {
                double a = params.trans(u, static_cast<Base>(b));
                if (a <= 0.0) continue;
                StateId v = space.find(kmer_extend(space.kmer(u), static_cast<Base>(b)));
                if (v == hmmec::kNoState || !space.is_active(v)) continue;
                if (naive_hamming(space, v, window[s]) > d) continue;
                Base true_base = static_cast<Base>(space.kmer_bits(v) & 3);
                Base called = read.bases[k + s];
                int q = read.quals[k + s];
                double xi = params.qual_pmf(t, called == true_base ? 0 : 1, q) *
                            params.confusion(t, true_base, called);
                if (xi <= 0.0) continue;
                Frame g = f;
                g.states.push_back(v);
                g.log_prob = (g.log_prob + std::log(a)) + std::log(xi);
                g.lin_prob = g.lin_prob * a * xi;
                next.push_back(std::move(g));
            }
        }
        frontier = std::move(next);
    }
    done.reserve(frontier.size());
    for (Frame& f : frontier)
        done.push_back({std::move(f.states), f.log_prob, f.lin_prob});
    return done;
}

// The decoder's documented tie-break (smallest predecessor id at every DP
// step, smallest final state) picks, among max-score paths, the one whose
// state sequence is smallest when compared back-to-front.
inline const PathInfo* oracle_viterbi(const std::vector<PathInfo>& paths) {
    const PathInfo* best = nullptr;
    for (const PathInfo& p : paths) {
        if (!best) { best = &p; continue; }
        if (p.log_prob > best->log_prob) { best = &p; continue; }
        if (p.log_prob == best->log_prob) {
            const auto& a = p.states;
            const auto& b = best->states;
            for (size_t i = a.size(); i-- > 0;) {
                if (a[i] == b[i]) continue;
                if (a[i] < b[i]) best = &p;
                break;
            }
        }
    }
    return best;
}

// Posterior-weighted expected counts by explicit path enumeration.
struct EnumStats {
    double loglik = 0.0;
    std::vector<std::array<double, 4>> exp_trans;            // [state][base]
    std::vector<std::array<std::array<double, 4>, 4>> conf;  // [stage][true][called]
    std::vector<std::array<std::vector<double>, 2>> qual;    // [stage][j][q-1]
};

inline EnumStats oracle_estep(const HmmParams& params, const Read& read, const StateSpace& space,
                              int d, StateId initial_state) {
    const int k = space.k();
    const size_t stages = read.length() - static_cast<size_t>(k);
    auto paths = enumerate_paths(params, read, space, d, initial_state);
    EnumStats out;
    out.exp_trans.assign(space.size(), {0, 0, 0, 0});
    out.conf.assign(stages, {});
    out.qual.assign(stages, {});
    for (size_t s = 0; s < stages; ++s)
        for (int j = 0; j < 2; ++j) out.qual[s][j].assign(params.qmax(), 0.0);

    long double z = 0.0;
    for (const PathInfo& p : paths) z += p.lin_prob;
    out.loglik = std::log(static_cast<double>(z));
    if (z <= 0.0) return out;

    for (const PathInfo& p : paths) {
        double w = static_cast<double>(p.lin_prob / z);
        for (size_t s = 0; s < stages; ++s) {
            StateId u = p.states[s];
            StateId v = p.states[s + 1];
            int b = static_cast<int>(space.kmer_bits(v) & 3);
            out.exp_trans[u][b] += w;
            Base true_base = static_cast<Base>(space.kmer_bits(v) & 3);
            Base called = read.bases[k + s];
            int q = read.quals[k + s];
            out.conf[s][static_cast<int>(true_base)][static_cast<int>(called)] += w;
            out.qual[s][called == true_base ? 0 : 1][q - 1] += w;
        }
    }
    return out;
}

// Penalized row objective, written out longhand.
inline double row_objective_ref(const std::array<double, 4>& p, const std::array<double, 4>& c,
                                double lambda, double gamma) {
    double lam_eff = lambda / std::log1p(1.0 / gamma);
    double obj = 0.0;
    for (int b = 0; b < 4; ++b) {
        if (c[b] > 0.0) {
            if (p[b] <= 0.0) return -std::numeric_limits<double>::infinity();
            obj += c[b] * std::log(p[b]);
        }
        obj -= lam_eff * std::log1p(p[b] / gamma);
    }
    return obj;
}

// Simplex grid search with iterative local refinement down to step <= 1e-5.
// Returns the best objective found; the solver must match or beat it.
inline double grid_search_best(const std::array<double, 4>& c, double lambda, double gamma) {
    auto eval = [&](const std::array<double, 4>& p) {
        return row_objective_ref(p, c, lambda, gamma);
    };

    // Coarse pass: all compositions of `divs` among 4 parts.
    const int divs = 48;
    std::array<double, 4> best_p = {0.25, 0.25, 0.25, 0.25};
    double best = eval(best_p);
    for (int i = 0; i <= divs; ++i)
        for (int j = 0; i + j <= divs; ++j)
            for (int l = 0; i + j + l <= divs; ++l) {
                std::array<double, 4> p = {double(i) / divs, double(j) / divs, double(l) / divs,
                                           double(divs - i - j - l) / divs};
                double v = eval(p);
                if (v > best) { best = v; best_p = p; }
            }
    // Seed with the ratio point too.
    double cs = c[0] + c[1] + c[2] + c[3];
    if (cs > 0) {
        std::array<double, 4> p = {c[0] / cs, c[1] / cs, c[2] / cs, c[3] / cs};
        double v = eval(p);
        if (v > best) { best = v; best_p = p; }
    }

    // Local refinement: shrink a coordinate box around the incumbent and
    // re-grid until the step is below 1e-5. Points are projected back onto
    // the simplex by normalization; exact zeros are kept reachable.
    double span = 2.0 / divs;
    const int sub = 10;
    while (span > 1e-5 / sub) {
        bool improved = true;
        while (improved) {
            improved = false;
            std::array<int, 4> idx = {0, 0, 0, 0};
            // 4 nested loops over sub+1 offsets per coordinate.
            for (idx[0] = 0; idx[0] <= sub; ++idx[0])
                for (idx[1] = 0; idx[1] <= sub; ++idx[1])
                    for (idx[2] = 0; idx[2] <= sub; ++idx[2])
                        for (idx[3] = 0; idx[3] <= sub; ++idx[3]) {
                            std::array<double, 4> p;
                            double sum = 0.0;
                            for (int b = 0; b < 4; ++b) {
                                double lo = std::max(0.0, best_p[b] - span / 2);
                                p[b] = lo + span * idx[b] / sub;
                                if (p[b] < 1e-12) p[b] = 0.0;  // snap to the boundary
                                sum += p[b];
                            }
                            if (sum <= 0.0) continue;
                            for (int b = 0; b < 4; ++b) p[b] /= sum;
                            double v = eval(p);
                            if (v > best) { best = v; best_p = p; improved = true; }
                        }
        }
        span /= 5.0;
    }
    return best;
}

// ---- Toy instance generation -------------------------------------------
// Small worlds where exhaustive enumeration is feasible: k in 3..5, L <= 12,
// |K| <= 30, random (but valid) parameters, reads drawn along real paths.

struct ToyInstance {
    StateSpace space;
    HmmParams params;
    Read read;
    StateId initial;
    int d;
};

inline ToyInstance make_toy(std::mt19937_64& rng) {
    auto unif = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<uint64_t>(n)); };

    const int k = 3 + pick(3);           // 3..5
    const int L = k + 2 + pick(12 - k - 1);  // k+2 .. 12
    const int qmax = 5;

    // Random small genome, circularized so kmer successors exist.
    const int glen = 14 + pick(10);
    std::vector<Base> genome(glen);
    for (auto& b : genome) b = static_cast<Base>(pick(4));
    std::vector<Base> circ = genome;
    circ.insert(circ.end(), genome.begin(), genome.begin() + k);

    std::vector<uint64_t> kbits;
    for (size_t i = 0; i + k <= circ.size(); ++i)
        kbits.push_back(encode_kmer(std::span<const Base>(circ.data() + i, size_t(k))).bits);
    std::sort(kbits.begin(), kbits.end());
    kbits.erase(std::unique(kbits.begin(), kbits.end()), kbits.end());
    while (kbits.size() > 30) kbits.erase(kbits.begin() + pick(int(kbits.size())));

    ToyInstance toy{StateSpace::from_kmers(k, kbits), HmmParams(), Read{}, 0, k};

    // Random parameter set. Transition rows: random simplex points with some
    // entries zeroed (only where a successor state exists to keep paths
    // alive; rows keep at least one positive mass on an existing successor
    // when the state has any successor at all).
    HmmParams p = hmmec::init_params(toy.space, L, qmax, 1e-4, 0.0, k);
    for (StateId id = 0; id < toy.space.size(); ++id) {
        std::array<double, 4> row;
        std::vector<int> live;
        for (int b = 0; b < 4; ++b)
            if (toy.space.successor(id, static_cast<Base>(b)) != hmmec::kNoState)
                live.push_back(b);
        double sum = 0.0;
        for (int b = 0; b < 4; ++b) {
            row[b] = unif(0.05, 1.0);
            if (!live.empty() && pick(4) == 0 &&
                !(live.size() == 1 && b == live[0]))
                row[b] = 0.0;  // sparsify, but never kill the only live branch
            sum += row[b];
        }
        int anchor = live.empty() ? 0 : live[pick(int(live.size()))];
        if (row[anchor] == 0.0) { row[anchor] = unif(0.2, 1.0); sum += row[anchor]; }
        for (int b = 0; b < 4; ++b) row[b] /= sum;
        p.set_trans_row(id, row);
    }
    for (int t = k + 1; t <= L; ++t) {
        std::array<std::array<double, 4>, 4> g;
        for (int tb = 0; tb < 4; ++tb) {
            double sum = 0.0;
            for (int cb = 0; cb < 4; ++cb) { g[tb][cb] = unif(0.02, 1.0); sum += g[tb][cb]; }
            for (int cb = 0; cb < 4; ++cb) g[tb][cb] /= sum;
        }
        p.set_confusion(t, g);
        for (int j = 0; j < 2; ++j) {
            std::vector<double> pmf(qmax);
            double sum = 0.0;
            for (int q = 0; q < qmax; ++q) { pmf[q] = unif(0.02, 1.0); sum += pmf[q]; }
            for (int q = 0; q < qmax; ++q) pmf[q] /= sum;
            p.set_qual_pmf(t, j, pmf);
        }
    }

    // Draw a true state path along positive transitions, then a read.
    StateId cur = static_cast<StateId>(pick(int(toy.space.size())));
    std::vector<StateId> path = {cur};
    for (int s = 0; s < L - k; ++s) {
        std::vector<int> options;
        for (int b = 0; b < 4; ++b)
            if (p.trans(cur, static_cast<Base>(b)) > 0.0 &&
                toy.space.successor(cur, static_cast<Base>(b)) != hmmec::kNoState)
                options.push_back(b);
        if (options.empty()) { path.clear(); break; }
        int b = options[pick(int(options.size()))];
        cur = toy.space.successor(cur, static_cast<Base>(b));
        path.push_back(cur);
    }
    if (path.empty()) return make_toy(rng);  // dead end; redraw

    Read r;
    r.id = "toy";
    std::string first = decode_kmer(toy.space.kmer(path[0]));
    for (char ch : first) r.bases.push_back(hmmec::base_from_char(ch));
    for (int i = 0; i < k; ++i) r.quals.push_back(static_cast<uint8_t>(1 + pick(qmax)));
    for (size_t s = 1; s < path.size(); ++s) {
        Base true_base = static_cast<Base>(toy.space.kmer_bits(path[s]) & 3);
        Base called = pick(5) == 0 ? static_cast<Base>(pick(4)) : true_base;
        r.bases.push_back(called);
        r.quals.push_back(static_cast<uint8_t>(1 + pick(qmax)));
    }
    toy.params = std::move(p);
    toy.read = std::move(r);
    toy.initial = path[0];
    toy.d = k;  // no pruning: whole K visible at every stage
    return toy;
}

}  // namespace oracle
