#include "hmmec/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hmmec {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double safe_log(double p) { return p > 0 ? std::log(p) : kNegInf; }

void check_simplex(std::span<const double> row, const char* what) {
    double sum = 0;
    for (double p : row) {
        if (!(p >= 0.0 && p <= 1.0 + 1e-12))
            throw std::invalid_argument(std::string(what) + ": entry outside [0, 1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
}

}  // namespace

HmmParams::HmmParams(int k, int d, double gamma, double lambda, int read_len, int qmax,
                     size_t n_states)
    : k_(k), d_(d), gamma_(gamma), lambda_(lambda), read_len_(read_len), qmax_(qmax) {
    if (k < 1 || k > kMaxK) throw std::invalid_argument("HmmParams: k out of range");
    if (read_len <= k) throw std::invalid_argument("HmmParams: read length must exceed k");
    if (qmax < 1) throw std::invalid_argument("HmmParams: qmax must be >= 1");
    if (gamma <= 0) throw std::invalid_argument("HmmParams: gamma must be positive");
    if (lambda < 0) throw std::invalid_argument("HmmParams: lambda must be >= 0");
    if (d < 0 || d > k) throw std::invalid_argument("HmmParams: d out of range");
    size_t npos = static_cast<size_t>(read_len - k);
    trans_.assign(n_states, {0, 0, 0, 0});
    trans_log_.assign(n_states, {kNegInf, kNegInf, kNegInf, kNegInf});
    conf_.assign(npos, {});
    conf_log_.assign(npos, {});
    qual_.assign(npos, {});
    qual_log_.assign(npos, {});
    for (size_t e = 0; e < npos; ++e) {
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) {
                conf_[e][b][c] = 0;
                conf_log_[e][b][c] = kNegInf;
            }
        for (int j = 0; j < 2; ++j) {
            qual_[e][j].assign(static_cast<size_t>(qmax), 0.0);
            qual_log_[e][j].assign(static_cast<size_t>(qmax), kNegInf);
        }
    }
}

size_t HmmParams::eidx(int t) const {
    if (t < k_ + 1 || t > read_len_)
        throw std::invalid_argument("HmmParams: position t outside [k+1, L]");
    return static_cast<size_t>(t - k_ - 1);
}

void HmmParams::set_trans_row(StateId id, const std::array<double, 4>& row) {
    check_simplex(row, "transition row");
    trans_[id] = row;
    for (int b = 0; b < 4; ++b) trans_log_[id][b] = safe_log(row[b]);
}

void HmmParams::set_confusion(int t, const std::array<std::array<double, 4>, 4>& g) {
    size_t e = eidx(t);
    for (int b = 0; b < 4; ++b) check_simplex(g[b], "confusion row");
    conf_[e] = g;
    for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) conf_log_[e][b][c] = safe_log(g[b][c]);
}

void HmmParams::set_qual_pmf(int t, int j, std::span<const double> pmf) {
    size_t e = eidx(t);
    if (j != 0 && j != 1) throw std::invalid_argument("set_qual_pmf: j must be 0 or 1");
    if (pmf.size() != static_cast<size_t>(qmax_))
        throw std::invalid_argument("set_qual_pmf: pmf must have qmax entries");
    check_simplex(pmf, "quality pmf");
    qual_[e][j].assign(pmf.begin(), pmf.end());
    auto& lg = qual_log_[e][j];
    for (size_t q = 0; q < pmf.size(); ++q) lg[q] = safe_log(pmf[q]);
}

void HmmParams::validate(const StateSpace& space) const {
    if (trans_.size() != space.size())
        throw std::invalid_argument("validate: state count mismatch");
    for (StateId id = 0; id < trans_.size(); ++id) {
        if (!space.is_active(id)) continue;
        check_simplex(trans_[id], "transition row");
    }
    for (int t = k_ + 1; t <= read_len_; ++t) {
        for (int b = 0; b < 4; ++b) check_simplex(conf_[eidx(t)][b], "confusion row");
        for (int j = 0; j < 2; ++j) check_simplex(qual_[eidx(t)][j], "quality pmf");
    }
}

double emission_log_prob(const HmmParams& params, int t, Base called, int qual, Base true_base) {
    if (!is_acgt(called) || !is_acgt(true_base))
        throw std::invalid_argument("emission_log_prob: bases must be A/C/G/T");
    if (qual < 1 || qual > params.qmax())
        throw std::invalid_argument("emission_log_prob: quality out of range");
    return params.emission_log(t, called, qual, true_base);
}

SuffStats::SuffStats(size_t n_states, int k, int read_len, int qmax) {
    size_t npos = static_cast<size_t>(read_len - k);
    exp_trans.assign(n_states, {0, 0, 0, 0});
    exp_confusion.assign(npos, {});
    exp_qual.assign(npos, {});
    for (size_t e = 0; e < npos; ++e) {
        for (int b = 0; b < 4; ++b) exp_confusion[e][b] = {0, 0, 0, 0};
        for (int j = 0; j < 2; ++j) exp_qual[e][j].assign(static_cast<size_t>(qmax), 0.0);
    }
}

void SuffStats::add(const SuffStats& o) {
    if (exp_trans.size() != o.exp_trans.size() || exp_confusion.size() != o.exp_confusion.size())
        throw std::invalid_argument("SuffStats::add: shape mismatch");
    for (size_t i = 0; i < exp_trans.size(); ++i)
        for (int b = 0; b < 4; ++b) exp_trans[i][b] += o.exp_trans[i][b];
    for (size_t e = 0; e < exp_confusion.size(); ++e) {
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) exp_confusion[e][b][c] += o.exp_confusion[e][b][c];
        for (int j = 0; j < 2; ++j)
            for (size_t q = 0; q < exp_qual[e][j].size(); ++q)
                exp_qual[e][j][q] += o.exp_qual[e][j][q];
    }
    loglik += o.loglik;
    reads_used += o.reads_used;
    reads_skipped += o.reads_skipped;
}

HmmParams init_params(const StateSpace& space, int read_len, int qmax, double gamma,
                      double lambda, int d) {
    HmmParams params(space.k(), d, gamma, lambda, read_len, qmax, space.size());

    for (StateId id = 0; id < space.size(); ++id) {
        if (!space.is_active(id)) continue;
        const auto& counts = space.succ_counts(id);
        uint64_t total = counts[0] + counts[1] + counts[2] + counts[3];
        std::array<double, 4> row;
        if (total == 0) {
            row = {0.25, 0.25, 0.25, 0.25};  // seen only at read ends
        } else {
            for (int b = 0; b < 4; ++b)
                row[b] = static_cast<double>(counts[b]) / static_cast<double>(total);
        }
        params.set_trans_row(id, row);
    }

    std::array<std::array<double, 4>, 4> uniform_conf;
    for (int b = 0; b < 4; ++b) uniform_conf[b] = {0.25, 0.25, 0.25, 0.25};
    std::vector<double> uniform_q(static_cast<size_t>(qmax), 1.0 / qmax);
    for (int t = space.k() + 1; t <= read_len; ++t) {
        params.set_confusion(t, uniform_conf);
        params.set_qual_pmf(t, 0, uniform_q);
        params.set_qual_pmf(t, 1, uniform_q);
    }
    return params;
}

double penalty_term(double p, double gamma) {
    if (p < 0 || gamma <= 0) throw std::invalid_argument("penalty_term: bad arguments");
    return std::log1p(p / gamma) / std::log1p(1.0 / gamma);
}

double penalty(const HmmParams& params, const StateSpace& space) {
    if (params.n_states() != space.size())
        throw std::invalid_argument("penalty: state count mismatch");
    double total = 0;
    for (StateId id = 0; id < space.size(); ++id) {
        if (!space.is_active(id)) continue;
        const auto& row = params.trans_row(id);
        for (int b = 0; b < 4; ++b) total += penalty_term(row[b], params.gamma());
    }
    return total;
}

}  // namespace hmmec
