#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hmmec/model.hpp"

// Penalized transition M-step. Per state row, maximize over the simplex
//
//   F(p) = sum_{counts>0} c_b ln p_b  -  lam' * sum_b ln(1 + p_b / gamma),
//
// lam' = lambda / ln(1 + 1/gamma). The penalty is concave, so F is a concave
// term plus a convex term: stationary points of the Lagrangian are roots of
//
//   mu p^2 + (lam' + mu*gamma - c) p - c*gamma = 0
//
// per component. The dual scan bisects on mu using the per-component global
// maximizer of phi(p) = c ln p - lam' ln(1+p/gamma) - mu p over (0, 1]. Because
// F need not be concave, the dual solution can miss the primal optimum, so the
// result is polished by a minorize-maximize loop (penalty replaced by its
// tangent) from several starts, and the best candidate under F wins.

namespace hmmec {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct RowProblem {
    std::array<double, 4> c{};  // effective counts (dust already zeroed)
    double lam_eff = 0;         // lam'
    double gamma = 0;
    std::vector<int> support;   // components with c > 0
};

double row_objective(const RowProblem& rp, const std::array<double, 4>& p) {
    double f = 0;
    for (int b = 0; b < 4; ++b) {
        if (rp.c[b] > 0) {
            if (p[b] <= 0) return kNegInf;
            f += rp.c[b] * std::log(p[b]);
        }
        f -= rp.lam_eff * std::log1p(p[b] / rp.gamma);
    }
    return f;
}

// Real roots of A x^2 + B x + C = 0, computed in the cancellation-free form.
int solve_quadratic(double A, double B, double C, double roots[2]) {
    double disc = B * B - 4 * A * C;
    if (disc < 0) return 0;
    double s = std::sqrt(disc);
    if (B >= 0) {
        roots[0] = (2 * C) / (-B - s);
        roots[1] = (-B - s) / (2 * A);
    } else {
        roots[0] = (-B + s) / (2 * A);
        roots[1] = (2 * C) / (-B + s);
    }
    return 2;
}

// Global maximizer over (0, 1] of phi(p) = c ln p - lam' ln(1+p/gamma) - mu p,
// for one component with c > 0.
double component_argmax(double c, double lam_eff, double gamma, double mu) {
    double best_p = 1.0;
    double best_phi = c * 0.0 - lam_eff * std::log1p(1.0 / gamma) - mu;  // phi(1)
    auto consider = [&](double p) {
        if (!(p > 0) || p > 1) return;
        double phi = c * std::log(p) - lam_eff * std::log1p(p / gamma) - mu * p;
        if (phi > best_phi) {
            best_phi = phi;
            best_p = p;
        }
    };
    if (mu == 0) {
        if (lam_eff > c) consider(c * gamma / (lam_eff - c));
        else return 1.0;  // phi nondecreasing on (0, 1]
    } else {
        double roots[2];
        int n = solve_quadratic(mu, lam_eff + mu * gamma - c, -c * gamma, roots);
        for (int i = 0; i < n; ++i) consider(roots[i]);
    }
    return best_p;
}

std::array<double, 4> normalized(const RowProblem& rp, std::array<double, 4> p) {
    double sum = 0;
    for (int b : rp.support) sum += p[b];
    std::array<double, 4> out{0, 0, 0, 0};
    if (sum <= 0) {  // degenerate start; fall back to ratios
        double ctot = 0;
        for (int b : rp.support) ctot += rp.c[b];
        for (int b : rp.support) out[b] = rp.c[b] / ctot;
        return out;
    }
    for (int b : rp.support) out[b] = p[b] / sum;
    return out;
}

// Dual scan: S(mu) = sum of component maximizers is nonincreasing in mu;
// bisect to S(mu) = 1 and renormalize the final iterate.
std::array<double, 4> dual_candidate(const RowProblem& rp) {
    auto mass = [&](double mu) {
        double s = 0;
        for (int b : rp.support) s += component_argmax(rp.c[b], rp.lam_eff, rp.gamma, mu);
        return s;
    };
    double ctot = 0;
    for (int b : rp.support) ctot += rp.c[b];
    double lo = -(rp.lam_eff / rp.gamma + ctot + 10.0);
    double hi = 4 * ctot + rp.lam_eff + 10.0;
    for (int i = 0; i < 200 && mass(lo) < 1.0; ++i) lo *= 2;
    for (int i = 0; i < 200 && mass(hi) > 1.0; ++i) hi *= 2;
    for (int i = 0; i < 120; ++i) {
        double mid = 0.5 * (lo + hi);
        if (mass(mid) > 1.0) lo = mid; else hi = mid;
    }
    std::array<double, 4> p{0, 0, 0, 0};
    for (int b : rp.support) p[b] = component_argmax(rp.c[b], rp.lam_eff, rp.gamma, hi);
    return normalized(rp, p);
}

// Minorize-maximize: replace each penalty term by its tangent at the current
// iterate, giving  sum c ln p - sum w_b p_b  with w_b = lam'/(p_b + gamma),
// whose simplex maximizer is p_b = c_b / (nu + w_b) for the nu solving
// sum = 1. Every step increases the true objective F.
std::array<double, 4> mm_polish(const RowProblem& rp, std::array<double, 4> p) {
    p = normalized(rp, p);
    double f = row_objective(rp, p);
    for (int iter = 0; iter < 300; ++iter) {
        std::array<double, 4> w{};
        double wmin = std::numeric_limits<double>::max();
        for (int b : rp.support) {
            w[b] = rp.lam_eff / (p[b] + rp.gamma);
            wmin = std::min(wmin, w[b]);
        }
        double ctot = 0;
        for (int b : rp.support) ctot += rp.c[b];
        // sum_b c/(nu+w) = 1 has a unique root on (-wmin, inf)
        double lo = -wmin, hi = std::max(ctot, 1.0);
        while (true) {
            double s = 0;
            for (int b : rp.support) s += rp.c[b] / (hi + w[b]);
            if (s <= 1.0) break;
            hi *= 2;
        }
        for (int i = 0; i < 80; ++i) {
            double mid = 0.5 * (lo + hi);
            double s = 0;
            for (int b : rp.support) s += rp.c[b] / (mid + w[b]);
            if (s > 1.0) lo = mid; else hi = mid;
        }
        std::array<double, 4> pn{0, 0, 0, 0};
        for (int b : rp.support) pn[b] = rp.c[b] / (hi + w[b]);
        pn = normalized(rp, pn);
        double fn = row_objective(rp, pn);
        if (fn <= f + 1e-13 * (1.0 + std::abs(f))) {
            if (fn > f) { p = pn; f = fn; }
            break;
        }
        p = pn;
        f = fn;
    }
    return p;
}

}  // namespace

double m_step_objective(const std::array<double, 4>& counts, const std::array<double, 4>& p,
                        double lambda, double gamma) {
    RowProblem rp;
    rp.c = counts;
    rp.gamma = gamma;
    rp.lam_eff = lambda / std::log1p(1.0 / gamma);
    return row_objective(rp, p);
}

std::array<double, 4> m_step_transitions_ext(const std::array<double, 4>& counts, double lambda,
                                             double gamma, const std::array<double, 4>* prev_row,
                                             double zero_tol) {
    if (gamma <= 0) throw std::invalid_argument("m_step_transitions: gamma must be positive");
    if (lambda < 0) throw std::invalid_argument("m_step_transitions: lambda must be >= 0");
    double ctot = 0;
    for (double c : counts) {
        if (c < 0 || !std::isfinite(c))
            throw std::invalid_argument("m_step_transitions: counts must be finite and >= 0");
        ctot += c;
    }
    if (ctot == 0) return {0.25, 0.25, 0.25, 0.25};  // nothing observed

    RowProblem rp;
    rp.gamma = gamma;
    rp.lam_eff = lambda / std::log1p(1.0 / gamma);
    for (int b = 0; b < 4; ++b) {
        rp.c[b] = (counts[b] > zero_tol * ctot) ? counts[b] : 0.0;
        if (rp.c[b] > 0) rp.support.push_back(b);
    }
    if (rp.support.empty()) {  // every component was dust; keep the largest
        int bmax = static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                                    counts.begin());
        rp.c[bmax] = counts[bmax];
        rp.support.push_back(bmax);
    }
    double cs = 0;
    for (int b : rp.support) cs += rp.c[b];

    std::array<double, 4> ratios{0, 0, 0, 0};
    for (int b : rp.support) ratios[b] = rp.c[b] / cs;
    if (lambda == 0 || rp.support.size() == 1) return ratios;

    std::array<double, 4> best = mm_polish(rp, ratios);
    double best_f = row_objective(rp, best);
    auto consider = [&](std::array<double, 4> start) {
        std::array<double, 4> cand = mm_polish(rp, start);
        double f = row_objective(rp, cand);
        if (f > best_f) {
            best_f = f;
            best = cand;
        }
    };

    consider(dual_candidate(rp));
    for (int b : rp.support) {  // near-corner starts catch sparse local maxima
        std::array<double, 4> corner{0, 0, 0, 0};
        for (int o : rp.support) corner[o] = 1e-3 / static_cast<double>(rp.support.size());
        corner[b] = 1.0;
        consider(corner);
    }
    if (prev_row != nullptr) consider(*prev_row);
    return best;
}

std::array<double, 4> m_step_transitions(const std::array<double, 4>& counts, double lambda,
                                         double gamma) {
    return m_step_transitions_ext(counts, lambda, gamma, nullptr, 0.0);
}

void m_step_emissions(const SuffStats& stats, HmmParams& params) {
    const int k = params.k(), L = params.read_len(), qmax = params.qmax();
    if (stats.exp_confusion.size() != static_cast<size_t>(L - k))
        throw std::invalid_argument("m_step_emissions: stats shape mismatch");
    std::vector<double> uniform_q(static_cast<size_t>(qmax), 1.0 / qmax);
    for (int t = k + 1; t <= L; ++t) {
        size_t e = params.eidx(t);
        std::array<std::array<double, 4>, 4> g;
        for (int b = 0; b < 4; ++b) {
            double denom = 0;
            for (int c = 0; c < 4; ++c) denom += stats.exp_confusion[e][b][c];
            if (denom > 0) {
                for (int c = 0; c < 4; ++c) g[b][c] = stats.exp_confusion[e][b][c] / denom;
            } else {
                g[b] = {0.25, 0.25, 0.25, 0.25};
            }
        }
        params.set_confusion(t, g);
        for (int j = 0; j < 2; ++j) {
            double denom = 0;
            for (int q = 0; q < qmax; ++q) denom += stats.exp_qual[e][j][q];
            if (denom > 0) {
                std::vector<double> pmf(static_cast<size_t>(qmax));
                for (int q = 0; q < qmax; ++q) pmf[q] = stats.exp_qual[e][j][q] / denom;
                params.set_qual_pmf(t, j, pmf);
            } else {
                params.set_qual_pmf(t, j, uniform_q);
            }
        }
    }
}

}  // namespace hmmec
