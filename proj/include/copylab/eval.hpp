#pragma once

// Metrics, sweeps, and the probabilistic oracles tying experiments back to
// the bounds. Default protocol: 10 batches of 128 instances, mean and
// standard deviation over batches, greedy decoding.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "copylab/numerics.hpp"
#include "copylab/tasks.hpp"

namespace copylab {

// Exact-match fraction over instance pairs. Throws on length mismatch or empty.
double string_accuracy(std::span<const std::vector<int>> outputs,
                       std::span<const std::vector<int>> targets);

// Per-position match fraction pooled over all target positions.
double char_accuracy(std::span<const std::vector<int>> outputs,
                     std::span<const std::vector<int>> targets);

struct WilsonInterval {
    double p_hat = 0.0;
    double lo = 0.0;
    double hi = 1.0;
};

// 95% Wilson score interval for successes/trials.
WilsonInterval wilson(std::uint64_t successes, std::uint64_t trials);

// Exact probability that a uniform length-len string over D tokens contains a
// repeated (n+1)-token window, by enumeration of all D^len strings. Throws
// when D^len exceeds ~10^7.
double p_ngram_exact(int d, int len, int n);

struct McEstimate {
    double p_hat = 0.0;
    WilsonInterval ci;
    std::uint64_t samples = 0;
};

// Monte-Carlo duplicate-window frequency with Wilson 95% CI.
McEstimate p_ngram_mc(int d, int len, int n, std::uint64_t samples, Rng& rng);

// String accuracy of the perfect n-gram model (Algorithm 1) on uniform
// samples. Equals 1 minus the frequency of duplicate windows with differing
// successors.
McEstimate perfect_ngram_accuracy(int d, int len, int n, std::uint64_t samples, Rng& rng);

// Fraction of uniform samples containing two equal (n+1)-token windows whose
// successor tokens both exist and differ (the event that defeats Algorithm 1).
McEstimate dup_with_differing_successor(int d, int len, int n, std::uint64_t samples, Rng& rng);

// A sequence model for sweep purposes: consumes a prompt, emits `steps` tokens
// greedily.
using GenerateFn = std::function<std::vector<int>(std::span<const int> prompt, int steps)>;

struct EvalRow {
    int x = 0;  // sweep coordinate: length, or planted duplicate window length
    double string_acc = 0.0, string_sd = 0.0;
    double char_acc = 0.0, char_sd = 0.0;
    int batches = 0, batch_size = 0;
};

struct EvalReport {
    std::string task;
    std::string model;
    std::string x_label = "L";
    std::uint64_t seed = 0;
    std::vector<EvalRow> rows;
};

struct EvalProtocol {
    int batches = 10;
    int batch_size = 128;
    int threads = 1;
};

// Per-length copy accuracy on uniform strings; rows sorted by length.
EvalReport length_sweep(const GenerateFn& model, const std::string& model_name,
                        const Vocab& vocab, std::span<const int> lengths, Rng& rng,
                        const EvalProtocol& proto = {});

// Copy accuracy on strings with a planted duplicate window per dup length.
EvalReport dup_ngram_sweep(const GenerateFn& model, const std::string& model_name,
                           const Vocab& vocab, int len, std::span<const int> dup_lengths,
                           Rng& rng, const EvalProtocol& proto = {});

// Lookup-task accuracy per context length.
EvalReport lookup_sweep(const GenerateFn& model, const std::string& model_name,
                        const Vocab& vocab, LookupInstance::Variant variant,
                        std::span<const int> lengths, int n, int k, Rng& rng,
                        const EvalProtocol& proto = {});

std::string report_csv(const EvalReport& report);

}  // namespace copylab
