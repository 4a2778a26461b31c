#include "copylab/gssm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace copylab {

double TableGssm::mem_bits() const { return std::log2(static_cast<double>(num_states)); }

GssmRun run(const TableGssm& spec, std::span<const int> input) {
    GssmRun r;
    r.states.reserve(input.size() + 1);
    r.outputs.reserve(input.size());
    int s = spec.initial_state;
    r.states.push_back(s);
    for (int tok : input) {
        if (tok < 0 || tok >= spec.vocab_size) throw std::runtime_error("gssm run: token outside vocab");
        s = spec.step(s, tok);
        r.states.push_back(s);
        r.outputs.push_back(spec.read(s));
    }
    return r;
}

std::vector<int> generate(const TableGssm& spec, std::span<const int> prompt, int steps) {
    int s = spec.initial_state;
    for (int tok : prompt) {
        if (tok < 0 || tok >= spec.vocab_size) throw std::runtime_error("gssm generate: token outside vocab");
        s = spec.step(s, tok);
    }
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        const int y = spec.read(s);
        out.push_back(y);
        s = spec.step(s, y);
    }
    return out;
}

CopyErrorCount exact_copy_error(const TableGssm& spec, const Vocab& vocab, int len) {
    const double total_d = std::pow(static_cast<double>(vocab.ordinary), static_cast<double>(len));
    if (total_d > 1e7) throw std::runtime_error("exact_copy_error: enumeration budget exceeded");
    const std::uint64_t total = static_cast<std::uint64_t>(total_d + 0.5);

    CopyErrorCount count;
    count.total = total;
    std::vector<int> x(static_cast<std::size_t>(len), 0);
    for (std::uint64_t it = 0; it < total; ++it) {
        // Prompt pass: BOS, x, COPY.
        int s = spec.step(spec.initial_state, vocab.bos());
        for (int tok : x) s = spec.step(s, tok);
        s = spec.step(s, vocab.copy_sep());
        // Generation pass with feedback; bail at the first mismatch.
        bool ok = true;
        for (int j = 0; j < len; ++j) {
            const int y = spec.read(s);
            if (y != x[j]) { ok = false; break; }
            s = spec.step(s, y);
        }
        if (ok) ++count.correct;
        // Odometer.
        for (int j = len - 1; j >= 0; --j) {
            if (++x[j] < vocab.ordinary) break;
            x[j] = 0;
        }
    }
    return count;
}

TableGssm rotating_copier(const Vocab& vocab, int window) {
    if (window < 0) throw std::runtime_error("rotating_copier: window must be >= 0");
    std::uint64_t states = 1;
    for (int i = 0; i < window; ++i) {
        if (states > (1ull << 40) / static_cast<std::uint64_t>(vocab.ordinary)) {
            throw std::runtime_error("rotating_copier: state space too large");
        }
        states *= static_cast<std::uint64_t>(vocab.ordinary);
    }
    TableGssm g;
    g.num_states = static_cast<int>(states);
    g.vocab_size = vocab.size();
    g.initial_state = 0;
    g.update.resize(static_cast<std::size_t>(g.num_states) * g.vocab_size);
    g.readout.resize(static_cast<std::size_t>(g.num_states));
    const int high = g.num_states / vocab.ordinary;  // D^(window-1); 0 when window = 0
    for (int s = 0; s < g.num_states; ++s) {
        for (int t = 0; t < g.vocab_size; ++t) {
            // Ordinary tokens shift into the register; specials leave it alone.
            g.update[static_cast<std::size_t>(s) * g.vocab_size + t] =
                vocab.is_ordinary(t) ? static_cast<int>((static_cast<std::uint64_t>(s) * vocab.ordinary + t) % states)
                                     : s;
        }
        g.readout[static_cast<std::size_t>(s)] = (window == 0) ? 0 : (s / high);
    }
    return g;
}

TableGssm random_gssm(int num_states, const Vocab& vocab, Rng& rng) {
    if (num_states < 1) throw std::runtime_error("random_gssm: need at least one state");
    TableGssm g;
    g.num_states = num_states;
    g.vocab_size = vocab.size();
    g.initial_state = 0;
    g.update.resize(static_cast<std::size_t>(num_states) * g.vocab_size);
    g.readout.resize(static_cast<std::size_t>(num_states));
    for (auto& u : g.update) u = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_states)));
    for (auto& r : g.readout) r = static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab.ordinary)));
    return g;
}

std::vector<FrontierRow> capacity_frontier(const Vocab& vocab, int len,
                                           std::span<const std::uint64_t> budgets, Rng& rng,
                                           int climb_restarts, int climb_iters) {
    if (budgets.empty()) throw std::runtime_error("capacity_frontier: empty budget list");
    const double total = std::pow(static_cast<double>(vocab.ordinary), static_cast<double>(len));

    std::vector<FrontierRow> rows;
    for (std::uint64_t budget : budgets) {
        std::uint64_t capped = budget;
        if (static_cast<double>(capped) > total) capped = static_cast<std::uint64_t>(total);
        FrontierRow row;
        row.states = capped;
        row.mem_bits = std::log2(static_cast<double>(capped));
        row.floor_error = std::max(0.0, 1.0 - static_cast<double>(capped) / total);

        // Store-last-k family: largest k with D^k <= budget.
        int k = 0;
        std::uint64_t pw = 1;
        while (k < len && pw * static_cast<std::uint64_t>(vocab.ordinary) <= capped) {
            pw *= static_cast<std::uint64_t>(vocab.ordinary);
            ++k;
        }
        row.best_found_error = exact_copy_error(rotating_copier(vocab, k), vocab, len).error();

        // Random tables with hill climbing probe whether generic machines
        // approach the floor (they rarely beat the register family).
        const int ns = static_cast<int>(capped);
        for (int r = 0; r < climb_restarts; ++r) {
            Rng local = rng.split(static_cast<std::uint64_t>(r) * 1000 + capped);
            TableGssm cand = random_gssm(ns, vocab, local);
            std::uint64_t best = exact_copy_error(cand, vocab, len).correct;
            for (int it = 0; it < climb_iters; ++it) {
                TableGssm mut = cand;
                if (local.below(2) == 0) {
                    const std::size_t idx = static_cast<std::size_t>(local.below(mut.update.size()));
                    mut.update[idx] = static_cast<int>(local.below(static_cast<std::uint64_t>(ns)));
                } else {
                    const std::size_t idx = static_cast<std::size_t>(local.below(mut.readout.size()));
                    mut.readout[idx] = static_cast<int>(local.below(static_cast<std::uint64_t>(vocab.ordinary)));
                }
                const std::uint64_t c = exact_copy_error(mut, vocab, len).correct;
                if (c >= best) {
                    best = c;
                    cand = std::move(mut);
                }
            }
            const double err = 1.0 - static_cast<double>(best) / total;
            row.best_found_error = std::min(row.best_found_error, err);
        }
        rows.push_back(row);
    }
    return rows;
}

std::string frontier_csv(std::span<const FrontierRow> rows, int d, int len) {
    std::ostringstream os;
    os << "states,mem_bits,floor_error,best_found_error,D,L\n";
    os.precision(12);
    for (const FrontierRow& r : rows) {
        os << r.states << ',' << r.mem_bits << ',' << r.floor_error << ',' << r.best_found_error
           << ',' << d << ',' << len << '\n';
    }
    return os.str();
}

// ---------------------------------------------------- prefix-lookup machine

PrefixLookupMachine::PrefixLookupMachine(const Vocab& vocab, int key_len, int answer_len)
    : vocab_(vocab), key_len_(key_len), answer_len_(answer_len) {
    if (key_len < 1 || answer_len < 1) throw std::runtime_error("PrefixLookupMachine: bad lengths");
}

PrefixLookupMachine::State PrefixLookupMachine::step(State s, int token) const {
    if (token == vocab_.bos()) return s;
    switch (s.phase) {
        case 0:  // reading the key
            if (token == vocab_.copy_sep()) {
                s.phase = 1;
            } else {
                s.key.push_back(token);
            }
            return s;
        case 1:  // scanning the context for the key
            if (token == vocab_.copy_sep()) {
                s.phase = 3;  // end of context: emit whatever was latched
                return s;
            }
            s.window.push_back(token);
            if (static_cast<int>(s.window.size()) > key_len_) s.window.erase(s.window.begin());
            if (s.window == s.key) s.phase = 2;
            return s;
        case 2:  // capturing the answer
            if (token == vocab_.copy_sep()) {
                s.phase = 3;
                return s;
            }
            if (static_cast<int>(s.answer.size()) < answer_len_) s.answer.push_back(token);
            if (static_cast<int>(s.answer.size()) == answer_len_) s.phase = 1;  // resume scanning
            return s;
        default:  // emitting; fed-back tokens advance the pointer
            s.emit_pos += 1;
            return s;
    }
}

int PrefixLookupMachine::read(const State& s) const {
    if (s.phase == 3 && s.emit_pos < static_cast<int>(s.answer.size())) return s.answer[s.emit_pos];
    return 0;
}

std::vector<int> PrefixLookupMachine::generate(std::span<const int> prompt, int steps) const {
    State s;
    for (int tok : prompt) s = step(std::move(s), tok);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        const int y = read(s);
        out.push_back(y);
        s = step(std::move(s), y);
    }
    return out;
}

}  // namespace copylab
