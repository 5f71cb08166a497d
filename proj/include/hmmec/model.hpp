#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hmmec/state_space.hpp"

namespace hmmec {

// Model parameters. Transition rows are indexed by StateId of some StateSpace;
// emission tables are indexed by 1-based read position t in [k+1, L]:
//   confusion(t, true_base, called_base)   g_t(called | true)
//   qual_pmf(t, j, q)                      q_tj(q), j = 0 iff called == true
// Linear values are canonical (serialized); log caches are kept in sync by the
// setters so the hot paths never call log().
class HmmParams {
public:
    HmmParams() = default;
    HmmParams(int k, int d, double gamma, double lambda, int read_len, int qmax,
              size_t n_states);

    int k() const { return k_; }
    int d() const { return d_; }
    double gamma() const { return gamma_; }
    double lambda() const { return lambda_; }
    int read_len() const { return read_len_; }
    int qmax() const { return qmax_; }
    size_t n_states() const { return trans_.size(); }

    const std::array<double, 4>& trans_row(StateId id) const { return trans_[id]; }
    double trans(StateId id, Base b) const { return trans_[id][static_cast<size_t>(b)]; }
    double trans_log(StateId id, Base b) const { return trans_log_[id][static_cast<size_t>(b)]; }
    void set_trans_row(StateId id, const std::array<double, 4>& row);

    double confusion(int t, Base true_b, Base called) const {
        return conf_[eidx(t)][static_cast<size_t>(true_b)][static_cast<size_t>(called)];
    }
    void set_confusion(int t, const std::array<std::array<double, 4>, 4>& g);

    // q in [1, qmax]; j in {0, 1}
    double qual_pmf(int t, int j, int q) const { return qual_[eidx(t)][j][q - 1]; }
    void set_qual_pmf(int t, int j, std::span<const double> pmf);

    // ln f_t(called, q | state with last base true_b); -inf where any factor is 0
    double emission_log(int t, Base called, int q, Base true_b) const {
        size_t e = eidx(t);
        int j = (called == true_b) ? 0 : 1;
        return qual_log_[e][j][q - 1] +
               conf_log_[e][static_cast<size_t>(true_b)][static_cast<size_t>(called)];
    }

    // Checks every stored row sums to 1 within 1e-9 and entries are in [0, 1].
    void validate(const StateSpace& space) const;

    size_t eidx(int t) const;  // maps t in [k+1, L] to emission table index

private:
    int k_ = 0, d_ = 0;
    double gamma_ = 0, lambda_ = 0;
    int read_len_ = 0, qmax_ = 0;
    std::vector<std::array<double, 4>> trans_, trans_log_;
    std::vector<std::array<std::array<double, 4>, 4>> conf_, conf_log_;
    std::vector<std::array<std::vector<double>, 2>> qual_, qual_log_;
};

double emission_log_prob(const HmmParams& params, int t, Base called, int qual, Base true_base);

// Expected counts accumulated by the E-step. add() is associative so partial
// sums from read chunks can be merged in a fixed order.
struct SuffStats {
    std::vector<std::array<double, 4>> exp_trans;
    std::vector<std::array<std::array<double, 4>, 4>> exp_confusion;
    std::vector<std::array<std::vector<double>, 2>> exp_qual;
    double loglik = 0;
    uint64_t reads_used = 0;
    uint64_t reads_skipped = 0;

    SuffStats() = default;
    SuffStats(size_t n_states, int k, int read_len, int qmax);
    void add(const SuffStats& other);
};

// Count-ratio transitions (uniform row where a state has no observed
// successors), uniform confusion rows, uniform quality pmfs.
HmmParams init_params(const StateSpace& space, int read_len, int qmax, double gamma,
                      double lambda, int d);

struct EStepOutcome {
    bool ok = false;
    double loglik = 0;           // forward
    double loglik_backward = 0;  // must agree with forward (diagnostic)
    int last_live_stage = 0;     // 1-based position t of the last nonempty stage
};

// Forward-backward over the pruned trellis of one N-free read; accumulates
// expected counts into acc on success. Dead trellises contribute nothing.
EStepOutcome e_step_read(const HmmParams& params, const Read& read, const StateSpace& space,
                         const NeighborhoodCache& nbhd, StateId initial_state, SuffStats& acc);

// One penalty term, in [0, 1]: log(1 + p/gamma) / log(1 + 1/gamma).
double penalty_term(double p, double gamma);

// J(theta): sum of penalty terms over all transition entries of active states.
double penalty(const HmmParams& params, const StateSpace& space);

// Row objective: sum_{counts>0} counts*ln(p) - lambda * sum penalty_term(p).
// -inf if any positively-counted component has p == 0.
double m_step_objective(const std::array<double, 4>& counts, const std::array<double, 4>& p,
                        double lambda, double gamma);

// Maximizes the row objective over the simplex. Components with zero counts
// get exactly 0; with lambda == 0 this reduces to count ratios. All-zero
// counts give the uniform row.
std::array<double, 4> m_step_transitions(const std::array<double, 4>& counts, double lambda,
                                         double gamma);

// fit() variant: counts below zero_tol (relative to the count sum) are treated
// as zero, and prev_row seeds one ascent candidate so EM never goes downhill.
std::array<double, 4> m_step_transitions_ext(const std::array<double, 4>& counts, double lambda,
                                             double gamma, const std::array<double, 4>* prev_row,
                                             double zero_tol);

// Closed-form ratio updates for confusion and quality tables, uniform fallback
// for unobserved rows.
void m_step_emissions(const SuffStats& stats, HmmParams& params);

struct FitConfig {
    double lambda = 250;
    double gamma = 1e-4;
    int d = 4;
    int max_iters = 30;
    double tol = 1e-5;  // relative improvement of the penalized objective
    int threads = 1;
};

struct FitTraceRow {
    int iteration = 0;
    double loglik = 0;
    double penalty_value = 0;
    double objective = 0;  // loglik - lambda * penalty_value
    uint64_t nonzero_transitions = 0;
    uint64_t active_states = 0;
    uint64_t reads_used = 0;
    uint64_t reads_skipped = 0;
};

struct FitResult {
    HmmParams params;
    std::vector<FitTraceRow> trace;
};

// Penalized EM. Prunes states with zero incoming transition mass between
// iterations (initial states of training reads are kept); `space` reflects the
// surviving set afterwards. Reads containing N or shorter than k+1 are skipped.
FitResult fit(std::span<const Read> reads, StateSpace& space, const FitConfig& cfg);

void write_trace(std::ostream& out, std::span<const FitTraceRow> rows);

// Versioned text format; values round-trip bit-exactly.
void save_model(std::ostream& out, const HmmParams& params, const StateSpace& space);

struct LoadedModel {
    HmmParams params;
    StateSpace space;
};

LoadedModel load_model(std::istream& in);

}  // namespace hmmec
