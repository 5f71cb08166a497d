#include "hmmec/simulate.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace hmmec {

namespace {

// mt19937_64 output mapped to doubles/ranges by explicit arithmetic, so the
// byte stream is identical across standard libraries.
struct Rng {
    std::mt19937_64 gen;
    explicit Rng(uint64_t seed) : gen(seed) {}
    double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
    uint64_t below(uint64_t n) { return gen() % n; }
};

double phred_error(int q) { return std::pow(10.0, -q / 10.0); }

}  // namespace

void QualityModel::validate() const {
    if (qmax < 1 || pmf.empty()) throw std::invalid_argument("QualityModel: empty model");
    for (const auto& row : pmf) {
        if (row.size() != static_cast<size_t>(qmax))
            throw std::invalid_argument("QualityModel: pmf row size != qmax");
        double sum = 0;
        for (double p : row) {
            if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("QualityModel: pmf entry outside [0, 1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-10)
            throw std::invalid_argument("QualityModel: pmf does not sum to 1");
    }
}

double QualityModel::implied_error_rate() const {
    validate();
    double total = 0;
    for (const auto& row : pmf) {
        double r = 0;
        for (int q = 1; q <= qmax; ++q) r += row[static_cast<size_t>(q - 1)] * phred_error(q);
        total += r;
    }
    return total / static_cast<double>(pmf.size());
}

QualityModel constant_quality_model(int read_len, int qmax, int q) {
    if (read_len < 1 || qmax < 1 || q < 1 || q > qmax)
        throw std::invalid_argument("constant_quality_model: bad arguments");
    QualityModel m;
    m.qmax = qmax;
    m.pmf.assign(static_cast<size_t>(read_len), std::vector<double>(static_cast<size_t>(qmax), 0.0));
    for (auto& row : m.pmf) row[static_cast<size_t>(q - 1)] = 1.0;
    return m;
}

QualityModel default_quality_model(int read_len, int qmax, double target_error_rate) {
    if (read_len < 1 || qmax < 1)
        throw std::invalid_argument("default_quality_model: bad dimensions");
    if (!(target_error_rate > 0 && target_error_rate < 0.75))
        throw std::invalid_argument("default_quality_model: target rate outside (0, 0.75)");

    const double e_hi = phred_error(qmax);
    if (target_error_rate <= e_hi)
        throw std::invalid_argument("default_quality_model: target below the qmax error floor");

    // Low-quality weight at position t (0-based) is min(1, c * shape_t); find
    // the q_lo and scale c that land the implied rate on the target.
    auto shape = [&](int t) {
        return read_len == 1 ? 1.0 : 0.2 + 0.8 * static_cast<double>(t) / (read_len - 1);
    };
    for (int q_lo = std::min(10, qmax - 1); q_lo >= 1; --q_lo) {
        const double e_lo = phred_error(q_lo);
        auto implied = [&](double c) {
            double total = 0;
            for (int t = 0; t < read_len; ++t) {
                double w = std::min(1.0, c * shape(t));
                total += w * e_lo + (1.0 - w) * e_hi;
            }
            return total / read_len;
        };
        double c_max = 1.0 / shape(0);  // all weights clamp to 1 at or above this
        if (implied(c_max) < target_error_rate) continue;  // q_lo not noisy enough
        double lo = 0, hi = c_max;
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            if (implied(mid) < target_error_rate) lo = mid; else hi = mid;
        }
        double c = 0.5 * (lo + hi);
        QualityModel m;
        m.qmax = qmax;
        m.pmf.assign(static_cast<size_t>(read_len),
                     std::vector<double>(static_cast<size_t>(qmax), 0.0));
        for (int t = 0; t < read_len; ++t) {
            double w = std::min(1.0, c * shape(t));
            m.pmf[static_cast<size_t>(t)][static_cast<size_t>(q_lo - 1)] = w;
            m.pmf[static_cast<size_t>(t)][static_cast<size_t>(qmax - 1)] += 1.0 - w;
        }
        m.validate();
        return m;
    }
    throw std::invalid_argument("default_quality_model: target rate infeasible for this qmax");
}

SimulatedReads simulate_reads(std::span<const Base> genome, uint64_t n_reads, int read_len,
                              const QualityModel& qmodel, uint64_t seed) {
    if (read_len < 1 || genome.size() < static_cast<size_t>(read_len))
        throw std::invalid_argument("simulate_reads: read length exceeds genome");
    if (qmodel.read_len() != read_len)
        throw std::invalid_argument("simulate_reads: quality model length != read length");
    qmodel.validate();
    for (Base b : genome)
        if (!is_acgt(b)) throw std::invalid_argument("simulate_reads: genome contains N");

    Rng rng(seed);
    SimulatedReads out;
    out.reads.reserve(n_reads);
    out.truth.reserve(n_reads);
    const uint64_t starts = genome.size() - static_cast<uint64_t>(read_len) + 1;

    for (uint64_t i = 0; i < n_reads; ++i) {
        uint64_t pos = rng.below(starts);  // 0-based
        Read r;
        r.id = "r" + std::to_string(i);
        r.bases.resize(static_cast<size_t>(read_len));
        r.quals.resize(static_cast<size_t>(read_len));
        TruthRecord tr;
        tr.read_id = r.id;
        tr.genome_pos = pos + 1;
        tr.true_bases.assign(genome.begin() + static_cast<ptrdiff_t>(pos),
                             genome.begin() + static_cast<ptrdiff_t>(pos) + read_len);
        for (int t = 0; t < read_len; ++t) {
            const auto& pmf = qmodel.pmf[static_cast<size_t>(t)];
            double u = rng.uniform();
            int q = qmodel.qmax;  // fallback for accumulated rounding dust
            double cum = 0;
            for (int qi = 1; qi <= qmodel.qmax; ++qi) {
                cum += pmf[static_cast<size_t>(qi - 1)];
                if (u < cum) {
                    q = qi;
                    break;
                }
            }
            Base true_b = tr.true_bases[static_cast<size_t>(t)];
            Base called = true_b;
            if (rng.uniform() < phred_error(q)) {
                uint64_t off = 1 + rng.below(3);
                called = static_cast<Base>((static_cast<uint64_t>(true_b) + off) & 3u);
                out.substituted_bases += 1;
            }
            r.bases[static_cast<size_t>(t)] = called;
            r.quals[static_cast<size_t>(t)] = static_cast<uint8_t>(q);
        }
        out.reads.push_back(std::move(r));
        out.truth.push_back(std::move(tr));
    }
    return out;
}

std::vector<Base> random_genome(size_t length, uint64_t seed) {
    Rng rng(seed);
    std::vector<Base> g(length);
    for (size_t i = 0; i < length; ++i) g[i] = static_cast<Base>(rng.below(4));
    return g;
}

}  // namespace hmmec
