#include "hmmec/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hmmec/trellis.hpp"

namespace hmmec {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline int clamp_qual(uint8_t q, int qmax) {
    return std::clamp(static_cast<int>(q), 1, qmax);
}

}  // namespace

const char* decode_status_name(DecodeStatus s) {
    switch (s) {
        case DecodeStatus::ok: return "ok";
        case DecodeStatus::dead_trellis: return "dead_trellis";
        case DecodeStatus::budget_exceeded: return "budget_exceeded";
    }
    return "unknown";
}

std::vector<Base> reconstruct_read(std::span<const StateId> path, const StateSpace& space) {
    if (path.empty()) throw std::invalid_argument("reconstruct_read: empty path");
    const int k = space.k();
    std::vector<Base> out(static_cast<size_t>(k));
    decode_kmer(space.kmer(path[0]), out);
    for (size_t i = 1; i < path.size(); ++i) {
        Base b = kmer_last_base(space.kmer(path[i]));
        Kmer expect = kmer_extend(space.kmer(path[i - 1]), b);
        if (expect.bits != space.kmer_bits(path[i]))
            throw std::logic_error("reconstruct_read: path states do not overlap by k-1");
        out.push_back(b);
    }
    return out;
}

DecodeResult aviterbi_decode(const Read& read, const HmmParams& params, const StateSpace& space,
                             const NeighborhoodCache& nbhd, int d, StateId initial_state) {
    const int k = space.k();
    DecodeResult res;
    Trellis tr = build_trellis(read, space, params, nbhd, d, initial_state);
    res.last_live_stage = tr.last_live_stage;
    if (tr.dead) return res;

    const int S = tr.L - k;
    std::vector<std::vector<double>> score(static_cast<size_t>(S) + 1);
    std::vector<std::vector<uint32_t>> from(static_cast<size_t>(S) + 1);
    score[0] = {0.0};
    for (int s = 1; s <= S; ++s) {
        const int t = k + s;
        const Base called = read.bases[static_cast<size_t>(t - 1)];
        const int q = clamp_qual(read.quals[static_cast<size_t>(t - 1)], params.qmax());
        const auto& prev = tr.stages[static_cast<size_t>(s - 1)];
        const auto& cur = tr.stages[static_cast<size_t>(s)];
        score[static_cast<size_t>(s)].assign(cur.size(), kNegInf);
        from[static_cast<size_t>(s)].assign(cur.size(), 0);
        auto& sc = score[static_cast<size_t>(s)];
        auto& fr = from[static_cast<size_t>(s)];
        // Predecessors scan in ascending id order; strict improvement keeps the
        // smallest-id predecessor on score ties.
        for (size_t ui = 0; ui < prev.size(); ++ui) {
            const double su = score[static_cast<size_t>(s - 1)][ui];
            if (su == kNegInf) continue;
            for (int b = 0; b < 4; ++b) {
                if (params.trans(prev[ui], static_cast<Base>(b)) <= 0) continue;
                StateId v = space.successor(prev[ui], static_cast<Base>(b));
                if (v == kNoState) continue;
                auto it = std::lower_bound(cur.begin(), cur.end(), v);
                if (it == cur.end() || *it != v) continue;
                size_t vi = static_cast<size_t>(it - cur.begin());
                double cand = su + params.trans_log(prev[ui], static_cast<Base>(b));
                if (cand > sc[vi]) {
                    sc[vi] = cand;
                    fr[vi] = static_cast<uint32_t>(ui);
                }
            }
        }
        bool live = false;
        for (size_t vi = 0; vi < cur.size(); ++vi) {
            if (sc[vi] == kNegInf) continue;
            sc[vi] += params.emission_log(t, called, q, kmer_last_base(space.kmer(cur[vi])));
            if (sc[vi] != kNegInf) live = true;
        }
        if (!live) {
            res.last_live_stage = t - 1;
            return res;  // dead_trellis
        }
    }

    // Endpoint: best final score, smallest state id on ties.
    size_t best = 0;
    double best_score = kNegInf;
    const auto& last = tr.stages[static_cast<size_t>(S)];
    for (size_t vi = 0; vi < last.size(); ++vi) {
        if (score[static_cast<size_t>(S)][vi] > best_score) {
            best_score = score[static_cast<size_t>(S)][vi];
            best = vi;
        }
    }

    res.path.resize(static_cast<size_t>(S) + 1);
    size_t idx = best;
    for (int s = S; s >= 0; --s) {
        res.path[static_cast<size_t>(s)] = tr.stages[static_cast<size_t>(s)][idx];
        if (s > 0) idx = from[static_cast<size_t>(s)][idx];
    }
    res.status = DecodeStatus::ok;
    res.score = best_score;
    res.corrected = reconstruct_read(res.path, space);
    res.last_live_stage = tr.L;
    res.stats.visited = static_cast<uint64_t>(S) + 1;
    return res;
}

double fano_metric_update(double metric_current, double trans_prob, double emit_prob,
                          double bias) {
    if (!(trans_prob > 0) || !(emit_prob > 0)) return kNegInf;
    return metric_current + std::log2(trans_prob) + std::log2(emit_prob) + bias;
}

double fano_tighten(double metric_current, double delta) {
    return delta * std::floor(metric_current / delta);
}

namespace {

struct FanoBranch {
    double metric = kNegInf;  // absolute metric after taking this branch
    Base base = Base::A;
    StateId state = kNoState;
};

// Successor branches of `u` at position t_next, best metric first; equal
// metrics order by ascending base. Zero-probability branches are dropped.
void fano_successors(const Read& read, const HmmParams& params, const StateSpace& space,
                     double metric, StateId u, int t_next, double bias,
                     std::vector<FanoBranch>& out) {
    out.clear();
    const Base called = read.bases[static_cast<size_t>(t_next - 1)];
    const int q = clamp_qual(read.quals[static_cast<size_t>(t_next - 1)], params.qmax());
    for (int b = 0; b < 4; ++b) {
        double a = params.trans(u, static_cast<Base>(b));
        if (a <= 0) continue;
        StateId v = space.successor(u, static_cast<Base>(b));
        if (v == kNoState) continue;
        Base true_b = kmer_last_base(space.kmer(v));
        double xi;
        if (is_acgt(called)) {
            int j = (called == true_b) ? 0 : 1;
            xi = params.qual_pmf(t_next, j, q) *
                 params.confusion(t_next, true_b, called);
        } else {
            // Called base unreadable: keep the quality factor, flat base factor.
            xi = params.qual_pmf(t_next, 1, q) * 0.25;
        }
        double m = fano_metric_update(metric, a, xi, bias);
        if (m == kNegInf) continue;
        out.push_back(FanoBranch{m, static_cast<Base>(b), v});
    }
    std::sort(out.begin(), out.end(), [](const FanoBranch& x, const FanoBranch& y) {
        if (x.metric != y.metric) return x.metric > y.metric;
        return x.base < y.base;
    });
}

}  // namespace

DecodeResult fano_decode(const Read& read, const HmmParams& params, const StateSpace& space,
                         const FanoConfig& cfg, StateId initial_state) {
    const int k = space.k();
    DecodeResult res;
    if (cfg.delta <= 0) throw std::invalid_argument("fano_decode: delta must be positive");
    if (read.length() < static_cast<size_t>(k))
        throw std::invalid_argument("fano_decode: read shorter than k");
    if (initial_state == kNoState || !space.is_active(initial_state))
        throw std::invalid_argument("fano_decode: initial state not active");

    const int S = static_cast<int>(read.length()) - k;  // branches to decode
    res.last_live_stage = k;
    if (S == 0) {
        res.status = DecodeStatus::ok;
        res.path = {initial_state};
        res.corrected = reconstruct_read(res.path, space);
        return res;
    }

    const uint64_t budget =
        cfg.max_visits > 0 ? cfg.max_visits : 64ull * static_cast<uint64_t>(S);

    std::vector<StateId> path(static_cast<size_t>(S) + 1, kNoState);
    std::vector<double> metric(static_cast<size_t>(S) + 1, 0.0);
    std::vector<std::vector<FanoBranch>> succs(static_cast<size_t>(S) + 1);
    std::vector<size_t> rank(static_cast<size_t>(S) + 1, 0);

    path[0] = initial_state;
    metric[0] = 0.0;
    int depth = 0, max_depth = 0;
    double T = 0.0;
    fano_successors(read, params, space, metric[0], path[0], k + 1, cfg.bias, succs[0]);

    while (true) {
        if (res.stats.visited >= budget) {
            res.status = DecodeStatus::budget_exceeded;
            res.last_live_stage = k + max_depth;
            return res;
        }
        res.stats.visited += 1;

        const auto& branches = succs[static_cast<size_t>(depth)];
        const double m_next =
            rank[static_cast<size_t>(depth)] < branches.size()
                ? branches[rank[static_cast<size_t>(depth)]].metric
                : kNegInf;

        if (m_next >= T) {
            // Forward move.
            const FanoBranch& br = branches[rank[static_cast<size_t>(depth)]];
            const double m_prev = metric[static_cast<size_t>(depth)];
            ++depth;
            max_depth = std::max(max_depth, depth);
            path[static_cast<size_t>(depth)] = br.state;
            metric[static_cast<size_t>(depth)] = br.metric;
            if (depth == S) {
                res.status = DecodeStatus::ok;
                res.path = path;
                res.score = metric[static_cast<size_t>(depth)];
                res.corrected = reconstruct_read(res.path, space);
                res.last_live_stage = static_cast<int>(read.length());
                return res;
            }
            // First visit at this threshold: tighten T up to the metric.
            if (m_prev < T + cfg.delta) T = fano_tighten(br.metric, cfg.delta);
            rank[static_cast<size_t>(depth)] = 0;
            fano_successors(read, params, space, br.metric, br.state, k + depth + 1, cfg.bias,
                            succs[static_cast<size_t>(depth)]);
            continue;
        }

        // No acceptable successor: back up while the predecessor metric allows,
        // else lower the threshold and rescan from the best branch.
        for (;;) {
            const double m_back = depth == 0 ? kNegInf : metric[static_cast<size_t>(depth - 1)];
            if (m_back >= T) {
                res.stats.back_moves += 1;
                --depth;
                rank[static_cast<size_t>(depth)] += 1;
                if (rank[static_cast<size_t>(depth)] < succs[static_cast<size_t>(depth)].size())
                    break;  // try this sibling against T at the loop top
            } else {
                T -= cfg.delta;
                res.stats.threshold_drops += 1;
                rank[static_cast<size_t>(depth)] = 0;
                break;
            }
        }
    }
}

StateId choose_initial_state(const Read& read, const HmmParams& params, const StateSpace& space,
                             const NeighborhoodCache& nbhd) {
    const int k = space.k();
    if (read.length() < static_cast<size_t>(k)) return kNoState;
    std::vector<Base> window(read.bases.begin(), read.bases.begin() + k);
    for (Base& b : window)
        if (!is_acgt(b)) b = Base::A;
    Kmer km = encode_kmer(window);
    StateId id = space.find(km);
    if (id != kNoState) return id;

    // Fall back to the neighborhood member other states feed the most.
    auto nb = nbhd.members(km.bits);
    StateId best = kNoState;
    double best_mass = -1.0;
    for (StateId m : *nb) {
        double mass = 0;
        uint64_t mbits = space.kmer_bits(m);
        Base last = kmer_last_base(space.kmer(m));
        for (uint64_t pb = 0; pb < 4; ++pb) {
            uint64_t ubits = (mbits >> 2) | (pb << (2 * (k - 1)));
            StateId u = space.find_bits(ubits);
            if (u != kNoState) mass += params.trans(u, last);
        }
        if (mass > best_mass) {  // ascending scan keeps the smallest id on ties
            best_mass = mass;
            best = m;
        }
    }
    return best;
}

}  // namespace hmmec
