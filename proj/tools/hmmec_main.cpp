// hmmec: reference-free substitution-error correction for short reads.
//
// Subcommands:
//   simulate   draw reads + ground truth from a genome with a quality-driven
//              substitution error model
//   train      fit the kmer-state HMM by penalized EM and write a model file
//   correct    decode reads against a model (fano | aviterbi)
//   evaluate   score corrected reads against ground truth (zeta, eta)
//
// Every output file starts with '#'-prefixed lines echoing the configuration,
// and all writes go through a temp-file + rename so partial outputs never
// replace good ones. Exit codes: 0 ok, 2 bad input/usage, 3 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "hmmec/decode.hpp"
#include "hmmec/errors.hpp"
#include "hmmec/fastq.hpp"
#include "hmmec/model.hpp"
#include "hmmec/score.hpp"
#include "hmmec/simulate.hpp"
#include "hmmec/trellis.hpp"

namespace {

using namespace hmmec;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

// Writes through a temporary file in the same directory, then renames.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& body) {
    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open output file: " + tmp.string());
        body(out);
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open input file: " + path);
    return in;
}

std::vector<Read> load_fastq(const std::string& path, int phred_offset, int quality_cap = 60) {
    auto in = open_input(path);
    FastqOptions opt;
    opt.phred_offset = phred_offset;
    opt.quality_cap = quality_cap;
    return parse_fastq(in, opt);
}

// One '# key=value ...' block echoed into every output of a command.
std::string config_echo(const std::string& command,
                        const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ostringstream os;
    os << "# hmmec " << command << '\n';
    os << "#";
    for (const auto& [k, v] : kv) os << ' ' << k << '=' << v;
    os << '\n';
    return os.str();
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

struct SimulateArgs {
    std::string genome_path, output, truth_out;
    uint64_t n_reads = 0;
    int read_len = 36;
    int qmax = 60;
    double error_rate = 0.0123;
    int quality_pin = 0;  // nonzero pins every position to this quality
    uint64_t seed = 1;
    int phred_offset = 33;
};

int cmd_simulate(const SimulateArgs& a) {
    auto in = open_input(a.genome_path);
    auto fasta = parse_fasta(in);
    const std::vector<Base>& genome = fasta.front().bases;
    for (Base b : genome)
        if (!is_acgt(b)) throw ParseError("genome contains N; only A/C/G/T supported");

    QualityModel qm = a.quality_pin > 0
                          ? constant_quality_model(a.read_len, a.qmax, a.quality_pin)
                          : default_quality_model(a.read_len, a.qmax, a.error_rate);
    SimulatedReads sim = simulate_reads(genome, a.n_reads, a.read_len, qm, a.seed);

    auto echo = config_echo("simulate", {{"genome", a.genome_path},
                                         {"n_reads", std::to_string(a.n_reads)},
                                         {"read_len", std::to_string(a.read_len)},
                                         {"error_rate", fmt(a.error_rate)},
                                         {"qmax", std::to_string(a.qmax)},
                                         {"quality_pin", std::to_string(a.quality_pin)},
                                         {"seed", std::to_string(a.seed)},
                                         {"phred_offset", std::to_string(a.phred_offset)}});
    atomic_write(a.output, [&](std::ostream& out) {
        out << echo;
        write_fastq(out, sim.reads, a.phred_offset);
    });
    atomic_write(a.truth_out, [&](std::ostream& out) {
        out << echo;
        write_truth_tsv(out, sim.truth);
    });
    std::cerr << "simulated " << sim.reads.size() << " reads, " << sim.substituted_bases
              << " substituted bases (rate "
              << fmt(static_cast<double>(sim.substituted_bases) /
                     (static_cast<double>(a.n_reads) * a.read_len))
              << ")\n";
    return kExitOk;
}

struct TrainArgs {
    std::string reads_path, output, trace_out;
    int k = 13, d = 4;
    double gamma = 1e-4, lambda = 250;
    int max_iters = 30;
    double tol = 1e-5;
    int threads = 1;
    int phred_offset = 33;
};

int cmd_train(const TrainArgs& a) {
    std::vector<Read> reads = load_fastq(a.reads_path, a.phred_offset);
    StateSpace space = StateSpace::from_reads(reads, a.k, a.threads);

    FitConfig cfg;
    cfg.lambda = a.lambda;
    cfg.gamma = a.gamma;
    cfg.d = a.d;
    cfg.max_iters = a.max_iters;
    cfg.tol = a.tol;
    cfg.threads = a.threads;
    FitResult res = fit(reads, space, cfg);

    auto echo = config_echo("train", {{"reads", a.reads_path},
                                      {"k", std::to_string(a.k)},
                                      {"d", std::to_string(a.d)},
                                      {"gamma", fmt(a.gamma)},
                                      {"lambda", fmt(a.lambda)},
                                      {"max_iters", std::to_string(a.max_iters)},
                                      {"tol", fmt(a.tol)},
                                      {"threads", std::to_string(a.threads)},
                                      {"phred_offset", std::to_string(a.phred_offset)}});
    atomic_write(a.output, [&](std::ostream& out) {
        out << echo;
        save_model(out, res.params, space);
    });
    if (!a.trace_out.empty()) {
        atomic_write(a.trace_out, [&](std::ostream& out) {
            out << echo;
            write_trace(out, res.trace);
        });
    }
    const FitTraceRow& last = res.trace.back();
    std::cerr << "trained " << res.trace.size() << " iterations, objective " << fmt(last.objective)
              << ", active states " << last.active_states << ", nonzero transitions "
              << last.nonzero_transitions << '\n';
    return kExitOk;
}

struct CorrectArgs {
    std::string reads_path, model_path, output, diagnostics_out, truth_path;
    std::string decoder = "fano";
    std::string first_kmer = "observed";
    double delta = 0.5, bias = 2.0;
    int d = -1;  // -1: take the model's d
    uint64_t max_visits = 0;
    int threads = 1;
    int phred_offset = 33;
};

struct ReadOutcome {
    DecodeStatus status = DecodeStatus::ok;
    bool passthrough = false;  // no usable initial state / too short
    double score = 0;
    DecodeStats stats;
};

int cmd_correct(const CorrectArgs& a) {
    std::vector<Read> reads = load_fastq(a.reads_path, a.phred_offset);
    auto min = open_input(a.model_path);
    // Skip the '#' config echo our own writers put ahead of the model header.
    while (min.peek() == '#') min.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    LoadedModel model = load_model(min);
    const int k = model.params.k();
    const int d = a.d >= 0 ? a.d : model.params.d();
    if (d < 0 || d > k) throw ParseError("d outside [0, k]");

    std::vector<TruthRecord> truth;
    if (a.first_kmer == "truth") {
        if (a.truth_path.empty()) throw ParseError("--first-kmer truth requires --truth");
        auto tin = open_input(a.truth_path);
        truth = ingest_external_truth(tin);
        if (truth.size() != reads.size())
            throw ParseError("truth row count does not match read count");
    } else if (a.first_kmer != "observed") {
        throw ParseError("--first-kmer must be 'observed' or 'truth'");
    }

    NeighborhoodCache nbhd(model.space, d);
    FanoConfig fano_cfg;
    fano_cfg.delta = a.delta;
    fano_cfg.bias = a.bias;
    fano_cfg.max_visits = a.max_visits;
    const bool use_fano = a.decoder == "fano";
    if (!use_fano && a.decoder != "aviterbi")
        throw ParseError("--decoder must be 'fano' or 'aviterbi'");

    std::vector<Read> corrected(reads.size());
    std::vector<ReadOutcome> outcomes(reads.size());

    auto correct_one = [&](size_t i) {
        const Read& r = reads[i];
        Read out = r;  // passthrough default keeps bases and qualities
        ReadOutcome& oc = outcomes[i];
        if (r.length() < static_cast<size_t>(k) ||
            r.length() > static_cast<size_t>(model.params.read_len())) {
            oc.passthrough = true;
            corrected[i] = std::move(out);
            return;
        }
        StateId init = kNoState;
        if (!truth.empty()) {
            const auto& tb = truth[i].true_bases;
            if (tb.size() >= static_cast<size_t>(k)) {
                Kmer first = encode_kmer(std::span<const Base>(tb.data(), static_cast<size_t>(k)));
                init = model.space.find(first);
            }
        }
        if (init == kNoState) init = choose_initial_state(r, model.params, model.space, nbhd);
        if (init == kNoState) {
            oc.passthrough = true;
            corrected[i] = std::move(out);
            return;
        }
        DecodeResult res;
        if (use_fano) {
            res = fano_decode(r, model.params, model.space, fano_cfg, init);
        } else {
            Read clean = r;  // the Hamming pruning needs N-free windows
            for (Base& b : clean.bases)
                if (!is_acgt(b)) b = Base::A;
            res = aviterbi_decode(clean, model.params, model.space, nbhd, d, init);
        }
        oc.status = res.status;
        oc.stats = res.stats;
        oc.score = res.score;
        if (res.status == DecodeStatus::ok) out.bases = res.corrected;
        corrected[i] = std::move(out);
    };

    size_t n = reads.size();
    size_t nchunks = std::min<size_t>(static_cast<size_t>(std::max(a.threads, 1)), std::max<size_t>(n, 1));
    if (nchunks <= 1) {
        for (size_t i = 0; i < n; ++i) correct_one(i);
    } else {
        size_t chunk = (n + nchunks - 1) / nchunks;
        std::vector<std::thread> pool;
        for (size_t c = 0; c < nchunks; ++c) {
            size_t lo = c * chunk, hi = std::min(n, lo + chunk);
            pool.emplace_back([&, lo, hi] {
                for (size_t i = lo; i < hi; ++i) correct_one(i);
            });
        }
        for (auto& t : pool) t.join();
    }

    auto echo = config_echo("correct", {{"reads", a.reads_path},
                                        {"model", a.model_path},
                                        {"decoder", a.decoder},
                                        {"k", std::to_string(k)},
                                        {"d", std::to_string(d)},
                                        {"delta", fmt(a.delta)},
                                        {"bias", fmt(a.bias)},
                                        {"first_kmer", a.first_kmer},
                                        {"max_visits", std::to_string(a.max_visits)},
                                        {"threads", std::to_string(a.threads)},
                                        {"phred_offset", std::to_string(a.phred_offset)}});
    atomic_write(a.output, [&](std::ostream& out) {
        out << echo;
        write_fastq(out, corrected, a.phred_offset);
    });

    uint64_t n_dead = 0, n_budget = 0, n_pass = 0;
    for (const ReadOutcome& oc : outcomes) {
        if (oc.passthrough) ++n_pass;
        else if (oc.status == DecodeStatus::dead_trellis) ++n_dead;
        else if (oc.status == DecodeStatus::budget_exceeded) ++n_budget;
    }
    if (!a.diagnostics_out.empty()) {
        atomic_write(a.diagnostics_out, [&](std::ostream& out) {
            out << echo;
            out << "read_id\tstatus\tscore\tvisited\tback_moves\tthreshold_drops\n";
            for (size_t i = 0; i < reads.size(); ++i) {
                const ReadOutcome& oc = outcomes[i];
                out << reads[i].id << '\t'
                    << (oc.passthrough ? "passthrough" : decode_status_name(oc.status)) << '\t'
                    << fmt(oc.score) << '\t' << oc.stats.visited << '\t' << oc.stats.back_moves
                    << '\t' << oc.stats.threshold_drops << '\n';
            }
        });
    }
    std::cerr << "corrected " << reads.size() << " reads (dead_trellis " << n_dead
              << ", budget_exceeded " << n_budget << ", passthrough " << n_pass << ")\n";
    return kExitOk;
}

struct EvaluateArgs {
    std::string original_path, corrected_path, truth_path, output, diagnostics_path;
    int k = 13;
    int phred_offset = 33;
};

int cmd_evaluate(const EvaluateArgs& a) {
    std::vector<Read> original = load_fastq(a.original_path, a.phred_offset);
    std::vector<Read> corrected = load_fastq(a.corrected_path, a.phred_offset);
    auto tin = open_input(a.truth_path);
    std::vector<TruthRecord> truth = ingest_external_truth(tin);
    if (truth.size() != original.size())
        throw ParseError("truth row count does not match read count");

    CorrectionReport rep = score_corrections(original, corrected, truth, a.k);

    if (!a.diagnostics_path.empty()) {
        auto din = open_input(a.diagnostics_path);
        std::string line;
        bool header_seen = false;
        size_t lineno = 0;
        while (std::getline(din, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            if (!header_seen) {  // column header
                header_seen = true;
                continue;
            }
            std::istringstream is(line);
            std::string id, status;
            if (!(is >> id >> status))
                throw ParseError("diagnostics parse error at line " + std::to_string(lineno));
            if (status == "dead_trellis") rep.dead_trellis += 1;
            else if (status == "budget_exceeded") rep.budget_exceeded += 1;
        }
    }

    auto echo = config_echo("evaluate", {{"original", a.original_path},
                                         {"corrected", a.corrected_path},
                                         {"truth", a.truth_path},
                                         {"k", std::to_string(a.k)}});
    if (!a.output.empty()) {
        atomic_write(a.output, [&](std::ostream& out) {
            out << echo;
            write_report_tsv(out, rep);
        });
    }
    print_report(std::cout, rep);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kmer-state HMM read error correction"};
    app.require_subcommand(1);

    SimulateArgs sa;
    CLI::App* sim = app.add_subcommand("simulate", "simulate reads with substitution errors");
    sim->add_option("--genome", sa.genome_path, "genome FASTA")->required();
    sim->add_option("--n-reads", sa.n_reads, "number of reads")->required();
    sim->add_option("--read-len", sa.read_len, "read length L");
    sim->add_option("--error-rate", sa.error_rate, "target mean substitution rate");
    sim->add_option("--qmax", sa.qmax, "maximum quality score");
    sim->add_option("--quality-pin", sa.quality_pin, "pin every position to this quality");
    sim->add_option("--seed", sa.seed, "RNG seed");
    sim->add_option("--phred-offset", sa.phred_offset, "FASTQ quality encoding offset");
    sim->add_option("--output", sa.output, "output reads FASTQ")->required();
    sim->add_option("--truth-out", sa.truth_out, "output ground-truth TSV")->required();

    TrainArgs ta;
    CLI::App* train = app.add_subcommand("train", "fit the HMM by penalized EM");
    train->add_option("--reads", ta.reads_path, "training reads FASTQ")->required();
    train->add_option("--k", ta.k, "kmer length");
    train->add_option("--d", ta.d, "Hamming pruning radius");
    train->add_option("--gamma", ta.gamma, "penalty shape");
    train->add_option("--lambda", ta.lambda, "penalty weight");
    train->add_option("--max-iters", ta.max_iters, "EM iteration cap");
    train->add_option("--tol", ta.tol, "relative objective improvement stop");
    train->add_option("--threads", ta.threads, "worker threads");
    train->add_option("--phred-offset", ta.phred_offset, "FASTQ quality encoding offset");
    train->add_option("--output", ta.output, "output model file")->required();
    train->add_option("--trace-out", ta.trace_out, "EM iteration trace TSV");

    CorrectArgs ca;
    CLI::App* corr = app.add_subcommand("correct", "decode reads against a model");
    corr->add_option("--reads", ca.reads_path, "reads FASTQ")->required();
    corr->add_option("--model", ca.model_path, "model file from train")->required();
    corr->add_option("--decoder", ca.decoder, "fano | aviterbi");
    corr->add_option("--delta", ca.delta, "Fano threshold quantum");
    corr->add_option("--bias", ca.bias, "Fano per-branch bias B");
    corr->add_option("--d", ca.d, "Hamming pruning radius (default: model's)");
    corr->add_option("--max-visits", ca.max_visits, "Fano node budget (0: 64 per branch)");
    corr->add_option("--first-kmer", ca.first_kmer, "observed | truth");
    corr->add_option("--truth", ca.truth_path, "truth TSV (for --first-kmer truth)");
    corr->add_option("--threads", ca.threads, "worker threads");
    corr->add_option("--phred-offset", ca.phred_offset, "FASTQ quality encoding offset");
    corr->add_option("--output", ca.output, "corrected FASTQ")->required();
    corr->add_option("--diagnostics-out", ca.diagnostics_out, "per-read decode diagnostics TSV");

    EvaluateArgs ea;
    CLI::App* ev = app.add_subcommand("evaluate", "score corrections against ground truth");
    ev->add_option("--original", ea.original_path, "original reads FASTQ")->required();
    ev->add_option("--corrected", ea.corrected_path, "corrected reads FASTQ")->required();
    ev->add_option("--truth", ea.truth_path, "ground-truth TSV")->required();
    ev->add_option("--k", ea.k, "first-kmer exclusion length (corrector's k)");
    ev->add_option("--diagnostics", ea.diagnostics_path, "diagnostics TSV from correct");
    ev->add_option("--phred-offset", ea.phred_offset, "FASTQ quality encoding offset");
    ev->add_option("--output", ea.output, "report TSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sa);
        if (train->parsed()) return cmd_train(ta);
        if (corr->parsed()) return cmd_correct(ca);
        if (ev->parsed()) return cmd_evaluate(ea);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitInput;
}
