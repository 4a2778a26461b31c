#include "copylab/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "copylab/construction.hpp"

namespace copylab {

double string_accuracy(std::span<const std::vector<int>> outputs,
                       std::span<const std::vector<int>> targets) {
    if (outputs.size() != targets.size()) throw std::runtime_error("string_accuracy: length mismatch");
    if (outputs.empty()) throw std::runtime_error("string_accuracy: empty set");
    std::size_t exact = 0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (outputs[i] == targets[i]) ++exact;
    }
    return static_cast<double>(exact) / static_cast<double>(outputs.size());
}

double char_accuracy(std::span<const std::vector<int>> outputs,
                     std::span<const std::vector<int>> targets) {
    if (outputs.size() != targets.size()) throw std::runtime_error("char_accuracy: length mismatch");
    if (outputs.empty()) throw std::runtime_error("char_accuracy: empty set");
    std::size_t match = 0, total = 0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (outputs[i].size() != targets[i].size()) throw std::runtime_error("char_accuracy: length mismatch");
        for (std::size_t j = 0; j < targets[i].size(); ++j) {
            match += outputs[i][j] == targets[i][j];
        }
        total += targets[i].size();
    }
    if (total == 0) throw std::runtime_error("char_accuracy: no target positions");
    return static_cast<double>(match) / static_cast<double>(total);
}

WilsonInterval wilson(std::uint64_t successes, std::uint64_t trials) {
    if (trials == 0) throw std::runtime_error("wilson: zero trials");
    constexpr double z = 1.959963984540054;  // 97.5th normal quantile
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = (z / denom) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    WilsonInterval w;
    w.p_hat = p;
    w.lo = std::max(0.0, center - half);
    w.hi = std::min(1.0, center + half);
    return w;
}

double p_ngram_exact(int d, int len, int n) {
    if (d < 1 || len < 1 || n < 1) throw std::runtime_error("p_ngram_exact: bad parameters");
    const double total_d = std::pow(static_cast<double>(d), static_cast<double>(len));
    if (total_d > 1e7) throw std::runtime_error("p_ngram_exact: enumeration budget exceeded");
    if (len < n + 2) return 0.0;  // fewer than two windows
    const std::uint64_t total = static_cast<std::uint64_t>(total_d + 0.5);
    const int window = n + 1;
    std::uint64_t hits = 0;
    std::vector<int> x(static_cast<std::size_t>(len), 0);
    for (std::uint64_t it = 0; it < total; ++it) {
        if (find_repeated_window(x, window)) ++hits;
        for (int j = len - 1; j >= 0; --j) {
            if (++x[j] < d) break;
            x[j] = 0;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

McEstimate p_ngram_mc(int d, int len, int n, std::uint64_t samples, Rng& rng) {
    if (samples < 1) throw std::runtime_error("p_ngram_mc: samples must be >= 1");
    const Vocab vocab{d};
    const int window = n + 1;
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const CopyInstance inst = sample_uniform_copy(vocab, len, rng);
        auto src = inst.source();
        if (find_repeated_window(src, window)) ++hits;
    }
    McEstimate est;
    est.samples = samples;
    est.ci = wilson(hits, samples);
    est.p_hat = est.ci.p_hat;
    return est;
}

McEstimate perfect_ngram_accuracy(int d, int len, int n, std::uint64_t samples, Rng& rng) {
    if (samples < 1) throw std::runtime_error("perfect_ngram_accuracy: samples must be >= 1");
    const Vocab vocab{d};
    std::uint64_t exact = 0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const CopyInstance inst = sample_uniform_copy(vocab, len, rng);
        auto src = inst.source();
        const Algorithm1Result res = algorithm1_copy(src, n);
        if (std::equal(res.output.begin(), res.output.end(), src.begin(), src.end())) ++exact;
    }
    McEstimate est;
    est.samples = samples;
    est.ci = wilson(exact, samples);
    est.p_hat = est.ci.p_hat;
    return est;
}

McEstimate dup_with_differing_successor(int d, int len, int n, std::uint64_t samples, Rng& rng) {
    if (samples < 1) throw std::runtime_error("dup_with_differing_successor: samples must be >= 1");
    const Vocab vocab{d};
    const int window = n + 1;
    std::uint64_t hits = 0;
    for (std::uint64_t s = 0; s < samples; ++s) {
        const CopyInstance inst = sample_uniform_copy(vocab, len, rng);
        auto x = inst.source();
        bool found = false;
        // Pairs of equal windows whose successors both exist and differ.
        const int starts = len - window;  // ensures x[i+window] exists
        for (int i = 0; i < starts && !found; ++i) {
            for (int j = i + 1; j < starts; ++j) {
                if (std::equal(x.begin() + i, x.begin() + i + window, x.begin() + j) &&
                    x[i + window] != x[j + window]) {
                    found = true;
                    break;
                }
            }
        }
        if (found) ++hits;
    }
    McEstimate est;
    est.samples = samples;
    est.ci = wilson(hits, samples);
    est.p_hat = est.ci.p_hat;
    return est;
}

// ------------------------------------------------------------------ sweeps

namespace {

struct BatchStats {
    double string_mean = 0.0, string_sd = 0.0;
    double char_mean = 0.0, char_sd = 0.0;
};

BatchStats summarize(const std::vector<double>& string_accs, const std::vector<double>& char_accs) {
    auto mean_sd = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
        return std::make_pair(mean, sd);
    };
    BatchStats s;
    std::tie(s.string_mean, s.string_sd) = mean_sd(string_accs);
    std::tie(s.char_mean, s.char_sd) = mean_sd(char_accs);
    return s;
}

// Cells (one per x-coordinate and batch) run on a small worker pool; the
// report is assembled by sorted key so threading never changes results.
struct Cell {
    int x = 0;
    int batch = 0;
    double string_acc = 0.0;
    double char_acc = 0.0;
};

using CellFn = std::function<Cell(int x, int batch, Rng rng)>;

std::vector<Cell> run_cells(std::span<const int> xs, const EvalProtocol& proto, Rng& rng,
                            const CellFn& fn) {
    struct Job {
        int x, batch;
        std::uint64_t stream;
    };
    std::vector<Job> jobs;
    std::uint64_t stream = 0;
    for (int x : xs) {
        for (int b = 0; b < proto.batches; ++b) jobs.push_back({x, b, stream++});
    }
    std::vector<Cell> cells(jobs.size());
    const int threads = std::max(1, proto.threads);
    if (threads == 1) {
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            cells[j] = fn(jobs[j].x, jobs[j].batch, rng.split(jobs[j].stream));
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t j = next.fetch_add(1); j < jobs.size(); j = next.fetch_add(1)) {
                    cells[j] = fn(jobs[j].x, jobs[j].batch, rng.split(jobs[j].stream));
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return cells;
}

EvalReport assemble(const std::string& task, const std::string& model_name,
                    const std::string& x_label, std::span<const int> xs,
                    const EvalProtocol& proto, std::uint64_t seed, std::vector<Cell> cells) {
    EvalReport rep;
    rep.task = task;
    rep.model = model_name;
    rep.x_label = x_label;
    rep.seed = seed;
    std::vector<int> sorted_xs(xs.begin(), xs.end());
    std::sort(sorted_xs.begin(), sorted_xs.end());
    for (int x : sorted_xs) {
        std::vector<double> sa, ca;
        for (const Cell& c : cells) {
            if (c.x == x) {
                sa.push_back(c.string_acc);
                ca.push_back(c.char_acc);
            }
        }
        const BatchStats st = summarize(sa, ca);
        EvalRow row;
        row.x = x;
        row.string_acc = st.string_mean;
        row.string_sd = st.string_sd;
        row.char_acc = st.char_mean;
        row.char_sd = st.char_sd;
        row.batches = proto.batches;
        row.batch_size = proto.batch_size;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace

EvalReport length_sweep(const GenerateFn& model, const std::string& model_name,
                        const Vocab& vocab, std::span<const int> lengths, Rng& rng,
                        const EvalProtocol& proto) {
    auto fn = [&](int len, int, Rng local) {
        std::vector<std::vector<int>> outs, tgts;
        for (int i = 0; i < proto.batch_size; ++i) {
            const CopyInstance inst = sample_uniform_copy(vocab, len, local);
            outs.push_back(model(inst.prompt(), len));
            tgts.emplace_back(inst.source().begin(), inst.source().end());
        }
        Cell c;
        c.x = len;
        c.string_acc = string_accuracy(outs, tgts);
        c.char_acc = char_accuracy(outs, tgts);
        return c;
    };
    auto cells = run_cells(lengths, proto, rng, [&](int x, int b, Rng r) {
        Cell c = fn(x, b, std::move(r));
        c.batch = b;
        return c;
    });
    return assemble("copy", model_name, "L", lengths, proto, rng.seed(), std::move(cells));
}

EvalReport dup_ngram_sweep(const GenerateFn& model, const std::string& model_name,
                           const Vocab& vocab, int len, std::span<const int> dup_lengths,
                           Rng& rng, const EvalProtocol& proto) {
    auto cells = run_cells(dup_lengths, proto, rng, [&](int dup_len, int b, Rng local) {
        std::vector<std::vector<int>> outs, tgts;
        for (int i = 0; i < proto.batch_size; ++i) {
            const CopyInstance inst = sample_dup_ngram_copy(vocab, len, dup_len, local);
            outs.push_back(model(inst.prompt(), len));
            tgts.emplace_back(inst.source().begin(), inst.source().end());
        }
        Cell c;
        c.x = dup_len;
        c.batch = b;
        c.string_acc = string_accuracy(outs, tgts);
        c.char_acc = char_accuracy(outs, tgts);
        return c;
    });
    return assemble("copy_dup_ngram", model_name, "dup_window_tokens", dup_lengths, proto,
                    rng.seed(), std::move(cells));
}

EvalReport lookup_sweep(const GenerateFn& model, const std::string& model_name,
                        const Vocab& vocab, LookupInstance::Variant variant,
                        std::span<const int> lengths, int n, int k, Rng& rng,
                        const EvalProtocol& proto) {
    auto cells = run_cells(lengths, proto, rng, [&](int len, int b, Rng local) {
        std::vector<std::vector<int>> outs, tgts;
        for (int i = 0; i < proto.batch_size; ++i) {
            const LookupInstance inst = sample_lookup(vocab, len, n, k, variant, local);
            outs.push_back(model(inst.prompt(), k));
            tgts.push_back(inst.answer);
        }
        Cell c;
        c.x = len;
        c.batch = b;
        c.string_acc = string_accuracy(outs, tgts);
        c.char_acc = char_accuracy(outs, tgts);
        return c;
    });
    const std::string task =
        variant == LookupInstance::Variant::suffix_key ? "lookup_suffix_key" : "lookup_prefix_key";
    return assemble(task, model_name, "L", lengths, proto, rng.seed(), std::move(cells));
}

std::string report_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "task,model," << report.x_label << ",metric,mean,sd,n\n";
    os.precision(10);
    for (const EvalRow& r : report.rows) {
        os << report.task << ',' << report.model << ',' << r.x << ",string_acc," << r.string_acc
           << ',' << r.string_sd << ',' << r.batches * r.batch_size << '\n';
        os << report.task << ',' << report.model << ',' << r.x << ",char_acc," << r.char_acc
           << ',' << r.char_sd << ',' << r.batches * r.batch_size << '\n';
    }
    return os.str();
}

}  // namespace copylab
