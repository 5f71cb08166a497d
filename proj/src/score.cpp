#include "hmmec/score.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hmmec/errors.hpp"
#include "textio.hpp"

namespace hmmec {

CorrectionReport score_corrections(std::span<const Read> original, std::span<const Read> corrected,
                                   std::span<const TruthRecord> truth, int k_exclusion) {
    if (original.size() != corrected.size() || original.size() != truth.size())
        throw std::invalid_argument("score_corrections: read/truth counts differ");
    if (k_exclusion < 0) throw std::invalid_argument("score_corrections: negative k_exclusion");

    CorrectionReport rep;
    rep.reads = original.size();
    for (size_t i = 0; i < original.size(); ++i) {
        const Read& o = original[i];
        const Read& c = corrected[i];
        const TruthRecord& t = truth[i];
        if (o.id != c.id || o.id != t.read_id)
            throw std::invalid_argument("score_corrections: read id mismatch at record " +
                                        std::to_string(i + 1));
        if (o.length() != c.length() || o.length() != t.true_bases.size())
            throw std::invalid_argument("score_corrections: length mismatch for read '" + o.id +
                                        "'");
        for (size_t p = static_cast<size_t>(k_exclusion); p < o.length(); ++p) {
            const Base ob = o.bases[p], cb = c.bases[p], tb = t.true_bases[p];
            const bool was_error = (ob != tb);
            if (was_error) rep.e += 1;
            if (cb == ob) continue;                 // untouched
            if (was_error && cb == tb) rep.ce += 1; // restored
            else if (cb != tb) rep.fa += 1;         // corrupted or miscorrected
        }
    }
    if (rep.e > 0) {
        rep.zeta = static_cast<double>(rep.ce) / static_cast<double>(rep.e);
        rep.eta = (static_cast<double>(rep.ce) - static_cast<double>(rep.fa)) /
                  static_cast<double>(rep.e);
    }
    return rep;
}

void write_truth_tsv(std::ostream& out, std::span<const TruthRecord> truth) {
    for (const TruthRecord& t : truth)
        out << t.read_id << '\t' << t.genome_pos << '\t'
            << bases_to_string(t.true_bases) << '\n';
}

std::vector<TruthRecord> ingest_external_truth(std::istream& in) {
    std::vector<TruthRecord> truth;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        TruthRecord t;
        std::string pos, seq;
        if (!(is >> t.read_id >> pos >> seq))
            throw ParseError("truth parse error at line " + std::to_string(lineno) +
                             ": expected read_id, position, true_sequence");
        std::string extra;
        if (is >> extra)
            throw ParseError("truth parse error at line " + std::to_string(lineno) +
                             ": trailing fields");
        try {
            t.genome_pos = parse_u64(pos);
            t.true_bases = bases_from_string(seq);
        } catch (const std::exception& e) {
            throw ParseError("truth parse error at line " + std::to_string(lineno) + ": " +
                             e.what());
        }
        truth.push_back(std::move(t));
    }
    return truth;
}

void write_report_tsv(std::ostream& out, const CorrectionReport& r) {
    out << "e\tce\tfa\tzeta\teta\tdead_trellis\tbudget_exceeded\n";
    out << r.e << '\t' << r.ce << '\t' << r.fa << '\t' << fmt_double(r.zeta) << '\t'
        << fmt_double(r.eta) << '\t' << r.dead_trellis << '\t' << r.budget_exceeded << '\n';
}

void print_report(std::ostream& out, const CorrectionReport& r) {
    out << "reads scored      " << r.reads << '\n';
    out << "errors (e)        " << r.e << '\n';
    out << "corrected (ce)    " << r.ce << '\n';
    out << "false alarms (fa) " << r.fa << '\n';
    out << "zeta (ce/e)       " << fmt_double(r.zeta) << '\n';
    out << "eta ((ce-fa)/e)   " << fmt_double(r.eta) << '\n';
    out << "dead trellis      " << r.dead_trellis << '\n';
    out << "budget exceeded   " << r.budget_exceeded << '\n';
}

}  // namespace hmmec
