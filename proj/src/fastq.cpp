#include "hmmec/fastq.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace hmmec {

namespace {

// getline that tolerates CRLF input; returns false on EOF with nothing read.
bool get_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

[[noreturn]] void fail_record(size_t record, const std::string& what) {
    std::ostringstream os;
    os << "fastq parse error at record " << record << ": " << what;
    throw ParseError(os.str());
}

}  // namespace

std::vector<Read> parse_fastq(std::istream& in, const FastqOptions& opt) {
    if (opt.phred_offset != 33 && opt.phred_offset != 64)
        throw std::invalid_argument("parse_fastq: phred offset must be 33 or 64");
    if (opt.quality_cap < 1) throw std::invalid_argument("parse_fastq: quality cap must be >= 1");

    std::vector<Read> reads;
    std::string line;
    bool in_header = true;
    size_t record = 0;
    while (true) {
        if (!get_line(in, line)) break;
        if (in_header && (line.empty() || line[0] == '#')) continue;
        in_header = false;
        ++record;
        if (line.empty() || line[0] != '@') fail_record(record, "expected '@' header line");
        Read r;
        r.id = line.substr(1);
        if (r.id.empty()) fail_record(record, "empty read id");

        if (!get_line(in, line)) fail_record(record, "missing sequence line");
        try {
            r.bases = bases_from_string(line);
        } catch (const std::invalid_argument& e) {
            fail_record(record, e.what());
        }

        if (!get_line(in, line)) fail_record(record, "missing '+' line");
        if (line.empty() || line[0] != '+') fail_record(record, "expected '+' separator line");

        if (!get_line(in, line)) fail_record(record, "missing quality line");
        if (line.size() != r.bases.size())
            fail_record(record, "quality length does not match sequence length");
        r.quals.reserve(line.size());
        for (char c : line) {
            int q = static_cast<unsigned char>(c) - opt.phred_offset;
            if (q < -5 || q > 93) fail_record(record, "quality character out of range");
            q = std::clamp(q, 1, opt.quality_cap);
            r.quals.push_back(static_cast<uint8_t>(q));
        }
        reads.push_back(std::move(r));
    }
    return reads;
}

void write_fastq(std::ostream& out, std::span<const Read> reads, int phred_offset) {
    if (phred_offset != 33 && phred_offset != 64)
        throw std::invalid_argument("write_fastq: phred offset must be 33 or 64");
    for (const Read& r : reads) {
        if (r.quals.size() != r.bases.size())
            throw std::invalid_argument("write_fastq: read '" + r.id + "' quality length mismatch");
        out << '@' << r.id << '\n';
        out << bases_to_string(r.bases) << '\n';
        out << "+\n";
        for (uint8_t q : r.quals) out << static_cast<char>(q + phred_offset);
        out << '\n';
    }
}

std::vector<FastaRecord> parse_fasta(std::istream& in) {
    std::vector<FastaRecord> records;
    std::string line;
    size_t lineno = 0;
    while (get_line(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (line[0] == '>') {
            records.push_back(FastaRecord{line.substr(1), {}});
            continue;
        }
        if (records.empty())
            throw ParseError("fasta parse error at line " + std::to_string(lineno) +
                             ": sequence before any '>' header");
        try {
            for (char c : line) records.back().bases.push_back(base_from_char(c));
        } catch (const std::invalid_argument& e) {
            throw ParseError("fasta parse error at line " + std::to_string(lineno) + ": " +
                             e.what());
        }
    }
    if (records.empty()) throw ParseError("fasta parse error: no records found");
    return records;
}

void write_fasta(std::ostream& out, std::string_view name, std::span<const Base> seq,
                 size_t wrap) {
    out << '>' << name << '\n';
    if (wrap == 0) wrap = seq.size();
    for (size_t i = 0; i < seq.size(); i += wrap) {
        size_t n = std::min(wrap, seq.size() - i);
        out << bases_to_string(seq.subspan(i, n)) << '\n';
    }
}

}  // namespace hmmec
