#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hmmec/errors.hpp"
#include "hmmec/model.hpp"
#include "textio.hpp"

namespace hmmec {

namespace {

constexpr const char* kMagic = "hmmec-model";
constexpr int kVersion = 1;

[[noreturn]] void fail(size_t line, const std::string& what) {
    throw ParseError("model parse error at line " + std::to_string(line) + ": " + what);
}

}  // namespace

void save_model(std::ostream& out, const HmmParams& params, const StateSpace& space) {
    params.validate(space);
    out << kMagic << ' ' << kVersion << '\n';
    out << "k " << params.k() << '\n';
    out << "d " << params.d() << '\n';
    out << "gamma " << fmt_double(params.gamma()) << '\n';
    out << "lambda " << fmt_double(params.lambda()) << '\n';
    out << "read_len " << params.read_len() << '\n';
    out << "qmax " << params.qmax() << '\n';
    out << "states " << space.active_count() << '\n';
    out << "TRANSITIONS\n";
    for (StateId id = 0; id < space.size(); ++id) {
        if (!space.is_active(id)) continue;
        out << decode_kmer(space.kmer(id));
        for (int b = 0; b < 4; ++b) out << ' ' << fmt_double(params.trans(id, static_cast<Base>(b)));
        out << '\n';
    }
    out << "CONFUSION\n";
    for (int t = params.k() + 1; t <= params.read_len(); ++t) {
        out << t;
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                out << ' ' << fmt_double(params.confusion(t, static_cast<Base>(b), static_cast<Base>(c)));
        out << '\n';
    }
    out << "QUAL\n";
    for (int t = params.k() + 1; t <= params.read_len(); ++t) {
        for (int j = 0; j < 2; ++j) {
            out << t << ' ' << j;
            for (int q = 1; q <= params.qmax(); ++q) out << ' ' << fmt_double(params.qual_pmf(t, j, q));
            out << '\n';
        }
    }
    out << "END\n";
}

LoadedModel load_model(std::istream& in) {
    std::string line;
    size_t lineno = 0;
    auto next_line = [&]() -> std::string& {
        if (!std::getline(in, line)) fail(lineno, "unexpected end of file");
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };
    auto split = [](const std::string& s) {
        std::vector<std::string> fields;
        std::istringstream is(s);
        std::string tok;
        while (is >> tok) fields.push_back(tok);
        return fields;
    };

    auto header = split(next_line());
    if (header.size() != 2 || header[0] != kMagic) fail(lineno, "not a model file");
    if (parse_i64(header[1]) != kVersion) fail(lineno, "unsupported model version");

    int k = 0, d = 0, read_len = 0, qmax = 0;
    double gamma = 0, lambda = 0;
    uint64_t n_states = 0;
    for (;;) {
        auto f = split(next_line());
        if (f.size() == 1 && f[0] == "TRANSITIONS") break;
        if (f.size() != 2) fail(lineno, "expected 'key value' header entry");
        if (f[0] == "k") k = static_cast<int>(parse_i64(f[1]));
        else if (f[0] == "d") d = static_cast<int>(parse_i64(f[1]));
        else if (f[0] == "gamma") gamma = parse_double(f[1]);
        else if (f[0] == "lambda") lambda = parse_double(f[1]);
        else if (f[0] == "read_len") read_len = static_cast<int>(parse_i64(f[1]));
        else if (f[0] == "qmax") qmax = static_cast<int>(parse_i64(f[1]));
        else if (f[0] == "states") n_states = parse_u64(f[1]);
        else fail(lineno, "unknown header key '" + f[0] + "'");
    }
    if (k < 1 || read_len <= k || qmax < 1 || gamma <= 0 || n_states == 0)
        fail(lineno, "incomplete or invalid model header");

    std::vector<uint64_t> bits;
    std::vector<std::array<double, 4>> rows;
    bits.reserve(n_states);
    rows.reserve(n_states);
    for (uint64_t i = 0; i < n_states; ++i) {
        auto f = split(next_line());
        if (f.size() != 5) fail(lineno, "expected 'kmer p p p p'");
        Kmer km;
        try {
            km = encode_kmer(f[0]);
        } catch (const std::invalid_argument& e) {
            fail(lineno, e.what());
        }
        if (km.k != k) fail(lineno, "kmer length does not match k");
        if (!bits.empty() && km.bits <= bits.back())
            fail(lineno, "kmers out of order or duplicated");
        bits.push_back(km.bits);
        rows.push_back({parse_double(f[1]), parse_double(f[2]), parse_double(f[3]),
                        parse_double(f[4])});
    }

    LoadedModel m;
    m.space = StateSpace::from_kmers(k, std::move(bits));
    m.params = HmmParams(k, d, gamma, lambda, read_len, qmax, m.space.size());
    for (StateId id = 0; id < m.space.size(); ++id) {
        try {
            m.params.set_trans_row(id, rows[id]);
        } catch (const std::invalid_argument& e) {
            fail(lineno, std::string("transition row: ") + e.what());
        }
    }

    if (split(next_line()) != std::vector<std::string>{"CONFUSION"}) fail(lineno, "expected CONFUSION");
    for (int t = k + 1; t <= read_len; ++t) {
        auto f = split(next_line());
        if (f.size() != 17) fail(lineno, "expected 't' plus 16 confusion values");
        if (parse_i64(f[0]) != t) fail(lineno, "confusion rows out of order");
        std::array<std::array<double, 4>, 4> g;
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) g[b][c] = parse_double(f[1 + 4 * b + c]);
        try {
            m.params.set_confusion(t, g);
        } catch (const std::invalid_argument& e) {
            fail(lineno, std::string("confusion row: ") + e.what());
        }
    }

    if (split(next_line()) != std::vector<std::string>{"QUAL"}) fail(lineno, "expected QUAL");
    for (int t = k + 1; t <= read_len; ++t) {
        for (int j = 0; j < 2; ++j) {
            auto f = split(next_line());
            if (f.size() != static_cast<size_t>(qmax) + 2) fail(lineno, "bad quality pmf row");
            if (parse_i64(f[0]) != t || parse_i64(f[1]) != j)
                fail(lineno, "quality pmf rows out of order");
            std::vector<double> pmf(static_cast<size_t>(qmax));
            for (int q = 0; q < qmax; ++q) pmf[q] = parse_double(f[2 + q]);
            try {
                m.params.set_qual_pmf(t, j, pmf);
            } catch (const std::invalid_argument& e) {
                fail(lineno, std::string("quality pmf: ") + e.what());
            }
        }
    }

    if (split(next_line()) != std::vector<std::string>{"END"}) fail(lineno, "expected END");
    return m;
}

}  // namespace hmmec
