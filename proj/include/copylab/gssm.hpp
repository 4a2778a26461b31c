#pragma once

// Generalized state space models: the discrete abstraction with explicit
// tables, exhaustive copy-error analysis, and handcrafted machines.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "copylab/numerics.hpp"
#include "copylab/tasks.hpp"

namespace copylab {

struct TableGssm {
    int num_states = 1;
    int vocab_size = 1;
    int initial_state = 0;
    std::vector<int> update;   // num_states x vocab_size, row-major
    std::vector<int> readout;  // num_states -> token

    int step(int state, int token) const { return update[static_cast<std::size_t>(state) * vocab_size + token]; }
    int read(int state) const { return readout[static_cast<std::size_t>(state)]; }
    double mem_bits() const;
};

struct GssmRun {
    std::vector<int> states;   // S_0..S_i (states[0] = initial)
    std::vector<int> outputs;  // R_1..R_i
};

// Exact recursion S_i = u(S_{i-1}, x_i), R_i = r(S_i). Throws on a token
// outside the machine's vocabulary.
GssmRun run(const TableGssm& spec, std::span<const int> input);

// Consumes the prompt, then feeds its own outputs back for `steps` tokens.
std::vector<int> generate(const TableGssm& spec, std::span<const int> prompt, int steps);

struct CopyErrorCount {
    std::uint64_t total = 0;
    std::uint64_t correct = 0;
    double error() const { return 1.0 - static_cast<double>(correct) / static_cast<double>(total); }
};

// Enumerates every x in D^len, runs generate on BOS,x,COPY for len steps and
// counts exact matches. Throws when D^len exceeds the desk budget (~10^7).
CopyErrorCount exact_copy_error(const TableGssm& spec, const Vocab& vocab, int len);

// Rotating-register copier over the last `window` tokens: D^window states,
// update (s*D + t) mod D^window on ordinary tokens, readout the high digit.
// window = len gives the full-memory machine with copy error 0.
TableGssm rotating_copier(const Vocab& vocab, int window);

// Uniformly random update/readout tables (readout over ordinary tokens).
TableGssm random_gssm(int num_states, const Vocab& vocab, Rng& rng);

struct FrontierRow {
    std::uint64_t states = 0;
    double mem_bits = 0.0;
    double floor_error = 0.0;       // max(0, 1 - |S|/D^L)
    double best_found_error = 1.0;  // best over the store-last-k family + hill climb
};

// For each budget: the counting-bound floor and the best error achieved by
// constructed machines (rotating registers at k = floor(log_D budget), plus a
// short random-table hill climb to probe tightness). Budgets above D^L cap.
std::vector<FrontierRow> capacity_frontier(const Vocab& vocab, int len,
                                           std::span<const std::uint64_t> budgets, Rng& rng,
                                           int climb_restarts = 2, int climb_iters = 200);

std::string frontier_csv(std::span<const FrontierRow> rows, int d, int len);

// Streaming machine for the prefix-key lookup task (BOS key SEP context SEP):
// stores the key, scans the context with a sliding window, latches the k
// tokens after the unique key match, and emits them when generation begins.
// Finite state, independent of the context length.
class PrefixLookupMachine {
public:
    PrefixLookupMachine(const Vocab& vocab, int key_len, int answer_len);

    // Same interface shape as TableGssm over an integer-encoded state.
    std::vector<int> generate(std::span<const int> prompt, int steps) const;

private:
    struct State {
        int phase = 0;  // 0 read-key, 1 scan, 2 capture, 3 emit
        std::vector<int> key;
        std::vector<int> window;
        std::vector<int> answer;
        int emit_pos = 0;
    };
    State step(State s, int token) const;
    int read(const State& s) const;

    Vocab vocab_;
    int key_len_;
    int answer_len_;
};

}  // namespace copylab
