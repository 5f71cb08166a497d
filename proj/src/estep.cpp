#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "hmmec/model.hpp"
#include "hmmec/trellis.hpp"
#include "textio.hpp"

namespace hmmec {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double logadd(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

inline size_t index_in(const std::vector<StateId>& sorted_ids, StateId id) {
    auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(), id);
    return static_cast<size_t>(it - sorted_ids.begin());
}

}  // namespace

Trellis build_trellis(const Read& read, const StateSpace& space, const HmmParams& params,
                      const NeighborhoodCache& nbhd, int d, StateId initial_state) {
    const int k = space.k();
    if (&nbhd.space() != &space)
        throw std::invalid_argument("build_trellis: cache bound to a different state space");
    if (nbhd.d() != d) throw std::invalid_argument("build_trellis: cache built with different d");
    if (read.length() < static_cast<size_t>(k))
        throw std::invalid_argument("build_trellis: read shorter than k");
    if (read.has_n()) throw std::invalid_argument("build_trellis: read contains N");
    if (initial_state == kNoState || !space.is_active(initial_state))
        throw std::invalid_argument("build_trellis: initial state not active");

    Trellis tr;
    tr.k = k;
    tr.L = static_cast<int>(read.length());
    tr.stages.resize(static_cast<size_t>(tr.L - k) + 1);
    tr.stages[0] = {initial_state};
    tr.last_live_stage = k;

    // Roll the observed window; stage s looks at the window ending at t = k+s.
    Kmer window = encode_kmer(std::span<const Base>(read.bases.data(), static_cast<size_t>(k)));
    std::vector<StateId> next;
    for (int s = 1; s <= tr.L - k; ++s) {
        window = kmer_extend(window, read.bases[static_cast<size_t>(k + s - 1)]);
        auto nb = nbhd.members(window.bits);
        next.clear();
        for (StateId u : tr.stages[static_cast<size_t>(s - 1)]) {
            for (int b = 0; b < 4; ++b) {
                if (params.trans(u, static_cast<Base>(b)) <= 0) continue;
                StateId v = space.successor(u, static_cast<Base>(b));
                if (v == kNoState) continue;
                if (!std::binary_search(nb->begin(), nb->end(), v)) continue;
                next.push_back(v);
            }
        }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        if (next.empty()) {
            tr.dead = true;
            return tr;
        }
        tr.stages[static_cast<size_t>(s)] = next;
        tr.last_live_stage = k + s;
    }
    return tr;
}

EStepOutcome e_step_read(const HmmParams& params, const Read& read, const StateSpace& space,
                         const NeighborhoodCache& nbhd, StateId initial_state, SuffStats& acc) {
    const int k = params.k();
    if (read.length() < static_cast<size_t>(k) + 1)
        throw std::invalid_argument("e_step_read: read shorter than k+1");
    if (read.length() > static_cast<size_t>(params.read_len()))
        throw std::invalid_argument("e_step_read: read longer than the model length");
    for (uint8_t q : read.quals)
        if (q < 1 || q > params.qmax())
            throw std::invalid_argument("e_step_read: quality outside [1, qmax]");

    EStepOutcome out;
    Trellis tr = build_trellis(read, space, params, nbhd, params.d(), initial_state);
    out.last_live_stage = tr.last_live_stage;
    if (tr.dead) {
        acc.reads_skipped += 1;
        return out;
    }

    const int S = tr.L - k;
    std::vector<std::vector<double>> emis(static_cast<size_t>(S) + 1);
    std::vector<std::vector<double>> alpha(static_cast<size_t>(S) + 1);
    std::vector<std::vector<double>> beta(static_cast<size_t>(S) + 1);
    for (int s = 1; s <= S; ++s) {
        const int t = k + s;
        const Base called = read.bases[static_cast<size_t>(t - 1)];
        const int q = read.quals[static_cast<size_t>(t - 1)];
        const auto& st = tr.stages[static_cast<size_t>(s)];
        auto& em = emis[static_cast<size_t>(s)];
        em.resize(st.size());
        for (size_t i = 0; i < st.size(); ++i)
            em[i] = params.emission_log(t, called, q, kmer_last_base(space.kmer(st[i])));
    }

    alpha[0] = {0.0};
    for (int s = 1; s <= S; ++s) {
        const auto& prev = tr.stages[static_cast<size_t>(s - 1)];
        const auto& cur = tr.stages[static_cast<size_t>(s)];
        auto& a = alpha[static_cast<size_t>(s)];
        a.assign(cur.size(), kNegInf);
        for (size_t ui = 0; ui < prev.size(); ++ui) {
            const double au = alpha[static_cast<size_t>(s - 1)][ui];
            if (au == kNegInf) continue;
            for (int b = 0; b < 4; ++b) {
                if (params.trans(prev[ui], static_cast<Base>(b)) <= 0) continue;
                StateId v = space.successor(prev[ui], static_cast<Base>(b));
                if (v == kNoState) continue;
                size_t vi = index_in(cur, v);
                if (vi == cur.size() || cur[vi] != v) continue;
                a[vi] = logadd(a[vi], au + params.trans_log(prev[ui], static_cast<Base>(b)));
            }
        }
        bool live = false;
        for (size_t vi = 0; vi < cur.size(); ++vi) {
            a[vi] += emis[static_cast<size_t>(s)][vi];
            if (a[vi] != kNegInf) live = true;
        }
        if (!live) {  // every surviving state has zero emission probability here
            acc.reads_skipped += 1;
            out.last_live_stage = k + s - 1;
            return out;
        }
    }

    double loglik = kNegInf;
    for (double a : alpha[static_cast<size_t>(S)]) loglik = logadd(loglik, a);

    beta[static_cast<size_t>(S)].assign(tr.stages[static_cast<size_t>(S)].size(), 0.0);
    for (int s = S - 1; s >= 0; --s) {
        const auto& cur = tr.stages[static_cast<size_t>(s)];
        const auto& nxt = tr.stages[static_cast<size_t>(s + 1)];
        auto& bv = beta[static_cast<size_t>(s)];
        bv.assign(cur.size(), kNegInf);
        for (size_t ui = 0; ui < cur.size(); ++ui) {
            for (int b = 0; b < 4; ++b) {
                if (params.trans(cur[ui], static_cast<Base>(b)) <= 0) continue;
                StateId v = space.successor(cur[ui], static_cast<Base>(b));
                if (v == kNoState) continue;
                size_t vi = index_in(nxt, v);
                if (vi == nxt.size() || nxt[vi] != v) continue;
                bv[ui] = logadd(bv[ui], params.trans_log(cur[ui], static_cast<Base>(b)) +
                                            emis[static_cast<size_t>(s + 1)][vi] +
                                            beta[static_cast<size_t>(s + 1)][vi]);
            }
        }
    }
    out.loglik_backward = beta[0][0];

    // Posterior accumulation. Edge posteriors and state posteriors both come
    // from the same normalized trellis quantities.
    for (int s = 1; s <= S; ++s) {
        const int t = k + s;
        const Base called = read.bases[static_cast<size_t>(t - 1)];
        const int q = read.quals[static_cast<size_t>(t - 1)];
        const size_t e = params.eidx(t);
        const auto& prev = tr.stages[static_cast<size_t>(s - 1)];
        const auto& cur = tr.stages[static_cast<size_t>(s)];
        for (size_t ui = 0; ui < prev.size(); ++ui) {
            const double au = alpha[static_cast<size_t>(s - 1)][ui];
            if (au == kNegInf) continue;
            for (int b = 0; b < 4; ++b) {
                if (params.trans(prev[ui], static_cast<Base>(b)) <= 0) continue;
                StateId v = space.successor(prev[ui], static_cast<Base>(b));
                if (v == kNoState) continue;
                size_t vi = index_in(cur, v);
                if (vi == cur.size() || cur[vi] != v) continue;
                double x = au + params.trans_log(prev[ui], static_cast<Base>(b)) +
                           emis[static_cast<size_t>(s)][vi] +
                           beta[static_cast<size_t>(s)][vi] - loglik;
                double w = std::exp(x);
                if (w > 0) acc.exp_trans[prev[ui]][b] += w;
            }
        }
        for (size_t vi = 0; vi < cur.size(); ++vi) {
            double g = std::exp(alpha[static_cast<size_t>(s)][vi] +
                                beta[static_cast<size_t>(s)][vi] - loglik);
            if (g <= 0) continue;
            Base tb = kmer_last_base(space.kmer(cur[vi]));
            acc.exp_confusion[e][static_cast<size_t>(tb)][static_cast<size_t>(called)] += g;
            int j = (called == tb) ? 0 : 1;
            acc.exp_qual[e][j][static_cast<size_t>(q - 1)] += g;
        }
    }

    acc.loglik += loglik;
    acc.reads_used += 1;
    out.ok = true;
    out.loglik = loglik;
    return out;
}

namespace {

uint64_t count_nonzero_transitions(const HmmParams& params, const StateSpace& space) {
    uint64_t nnz = 0;
    for (StateId id = 0; id < space.size(); ++id) {
        if (!space.is_active(id)) continue;
        for (int b = 0; b < 4; ++b)
            if (params.trans(id, static_cast<Base>(b)) > 0) ++nnz;
    }
    return nnz;
}

// Deactivates states no active state can reach (zero incoming transition
// mass), keeping pinned initial states. Runs to a fixpoint.
size_t prune_states(StateSpace& space, const HmmParams& params, const std::vector<uint8_t>& keep) {
    size_t total = 0;
    while (true) {
        std::vector<uint8_t> incoming(space.size(), 0);
        for (StateId u = 0; u < space.size(); ++u) {
            if (!space.is_active(u)) continue;
            for (int b = 0; b < 4; ++b) {
                if (params.trans(u, static_cast<Base>(b)) <= 0) continue;
                StateId v = space.successor(u, static_cast<Base>(b));
                if (v != kNoState) incoming[v] = 1;
            }
        }
        std::vector<StateId> drop;
        for (StateId v = 0; v < space.size(); ++v)
            if (space.is_active(v) && !incoming[v] && !keep[v]) drop.push_back(v);
        if (drop.empty()) break;
        space.deactivate(drop);
        total += drop.size();
    }
    return total;
}

}  // namespace

FitResult fit(std::span<const Read> reads, StateSpace& space, const FitConfig& cfg) {
    if (cfg.max_iters < 1) throw std::invalid_argument("fit: max_iters must be >= 1");
    if (cfg.threads < 1) throw std::invalid_argument("fit: threads must be >= 1");
    if (cfg.d < 0 || cfg.d > space.k()) throw std::invalid_argument("fit: d out of range");

    const int k = space.k();
    int read_len = 0, qmax = 1;
    std::vector<size_t> trainable;
    uint64_t skipped_input = 0;
    for (size_t i = 0; i < reads.size(); ++i) {
        const Read& r = reads[i];
        if (r.has_n() || r.length() < static_cast<size_t>(k) + 1) {
            ++skipped_input;
            continue;
        }
        trainable.push_back(i);
        read_len = std::max(read_len, static_cast<int>(r.length()));
        for (uint8_t q : r.quals) qmax = std::max(qmax, static_cast<int>(q));
    }
    if (trainable.empty()) throw std::invalid_argument("fit: no trainable reads");

    // Initial states stay active even if the penalty empties their incoming mass.
    std::vector<uint8_t> keep(space.size(), 0);
    std::vector<StateId> initials(reads.size(), kNoState);
    for (size_t i : trainable) {
        Kmer first = encode_kmer(
            std::span<const Base>(reads[i].bases.data(), static_cast<size_t>(k)));
        StateId id = space.find(first);
        initials[i] = id;
        if (id != kNoState) keep[id] = 1;
    }

    NeighborhoodCache nbhd(space, cfg.d);
    HmmParams params = init_params(space, read_len, qmax, cfg.gamma, cfg.lambda, cfg.d);

    FitResult result;
    double prev_obj = 0;
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        // E-step over fixed contiguous chunks; partial stats merged in chunk
        // order so results do not depend on scheduling.
        size_t n = trainable.size();
        size_t nchunks = std::min<size_t>(static_cast<size_t>(cfg.threads), n);
        std::vector<SuffStats> partial;
        partial.reserve(nchunks);
        for (size_t c = 0; c < nchunks; ++c)
            partial.emplace_back(space.size(), k, read_len, qmax);
        {
            size_t chunk = (n + nchunks - 1) / nchunks;
            std::vector<std::thread> pool;
            for (size_t c = 0; c < nchunks; ++c) {
                size_t lo = c * chunk, hi = std::min(n, lo + chunk);
                pool.emplace_back([&, c, lo, hi] {
                    for (size_t j = lo; j < hi; ++j) {
                        size_t i = trainable[j];
                        if (initials[i] == kNoState || !space.is_active(initials[i])) {
                            partial[c].reads_skipped += 1;
                            continue;
                        }
                        e_step_read(params, reads[i], space, nbhd, initials[i], partial[c]);
                    }
                });
            }
            for (auto& t : pool) t.join();
        }
        SuffStats stats = std::move(partial[0]);
        for (size_t c = 1; c < partial.size(); ++c) stats.add(partial[c]);

        double J = penalty(params, space);
        FitTraceRow row;
        row.iteration = iter;
        row.loglik = stats.loglik;
        row.penalty_value = J;
        row.objective = stats.loglik - cfg.lambda * J;
        row.nonzero_transitions = count_nonzero_transitions(params, space);
        row.active_states = space.active_count();
        row.reads_used = stats.reads_used;
        row.reads_skipped = stats.reads_skipped + skipped_input;
        result.trace.push_back(row);

        bool converged =
            iter > 1 && (row.objective - prev_obj) < cfg.tol * std::abs(prev_obj);
        prev_obj = row.objective;

        // M-step. The previous row seeds one ascent candidate, so the
        // penalized objective cannot go downhill. Expected counts below
        // 1e-12 of the row total are treated as exact zeros; that is what
        // lets the penalty actually retire spurious transitions. Rows with no
        // expected occupancy at all (states only ever reached as trellis
        // leaves) are left unchanged — rewriting them would move the penalty
        // term without any likelihood evidence.
        for (StateId id = 0; id < space.size(); ++id) {
            if (!space.is_active(id)) continue;
            const auto& c = stats.exp_trans[id];
            if (c[0] == 0 && c[1] == 0 && c[2] == 0 && c[3] == 0) continue;
            std::array<double, 4> prev = params.trans_row(id);
            params.set_trans_row(id, m_step_transitions_ext(stats.exp_trans[id], cfg.lambda,
                                                            cfg.gamma, &prev, 1e-12));
        }
        m_step_emissions(stats, params);

        if (prune_states(space, params, keep) > 0) nbhd.refresh();

        if (converged) break;
    }

    result.params = std::move(params);
    return result;
}

void write_trace(std::ostream& out, std::span<const FitTraceRow> rows) {
    out << "iteration\tloglik\tpenalty\tobjective\tnonzero_transitions\tactive_states\n";
    for (const FitTraceRow& r : rows) {
        out << r.iteration << '\t' << fmt_double(r.loglik) << '\t' << fmt_double(r.penalty_value)
            << '\t' << fmt_double(r.objective) << '\t' << r.nonzero_transitions << '\t'
            << r.active_states << '\n';
    }
}

}  // namespace hmmec
