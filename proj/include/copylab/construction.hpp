#pragma once

// The depth-2 copy transformer with explicitly constructed weights, and the
// pure hash-based copy oracle it realizes.
//
// The copier built for n-gram parameter n matches windows of n+1 tokens (the
// same window-index convention the samplers use), so a string with no repeated
// (n+1)-token window is copied exactly. Internally that window length is
// match_len; the temperature is tau = d*ln(8*K*d) with K = D^match_len.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "copylab/numerics.hpp"
#include "copylab/tasks.hpp"

namespace copylab {

struct ProofEmbedding {
    int ordinary = 0;   // D
    int dim = 0;        // d = ceil(log2 D) + 2
    int sign_dim = 0;   // d' = d - 2 (>= 1)
    // Rows indexed by token id; ordinary 0..D-1, then BOS, COPY. EOS has no
    // embedding here (the proof vocabulary is D+2 tokens).
    std::vector<std::vector<double>> table;

    std::span<const double> psi(int token) const;
    int tokens() const { return ordinary + 2; }
};

// Sign-vector code on the last d-2 coordinates, scaled to unit norm; BOS and
// COPY sit on the first two axes. When D is not a power of two the code uses
// the first D of 2^(d') codewords in lexicographic order.
ProofEmbedding embed(const Vocab& vocab);

struct BlockFeatures {
    std::vector<double> key;    // (d+1)*match_len
    std::vector<double> query;  // (d+1)*match_len
    std::vector<double> value;  // d
};

struct ConstructedCopier {
    Vocab vocab;
    int n = 1;          // n-gram parameter (window-index convention)
    int match_len = 2;  // n+1 tokens hashed per lookup
    int l_max = 2;
    double tau = 0.0;
    ProofEmbedding emb;
};

// Validates the representability precondition 2n <= l_max <= D^n.
ConstructedCopier build_copier(const Vocab& vocab, int n, int l_max,
                               std::optional<double> tau_override = std::nullopt);

// First transformer block: per-position (key, query, value) feature maps,
// realized with the exact averaging-head and gated-ReLU formulas. Position
// indices are 0-based; tokens[0] must be BOS.
std::vector<BlockFeatures> first_block(const ConstructedCopier& copier,
                                       std::span<const int> tokens);

// Second block: value-weighted softmax retrieval for the query at position
// query_pos over all positions <= query_pos.
std::vector<double> retrieve(const ConstructedCopier& copier,
                             std::span<const BlockFeatures> feats, int query_pos);

// Output map: argmax over the proof vocabulary of <z, psi(x)>, low-id tie-break.
int decode(const ProofEmbedding& emb, std::span<const double> z);

// Autoregressive copy from a prompt BOS, x_1..x_L, COPY; returns exactly L
// tokens, feeding each decoded token back. Uses an algebraically identical
// fast path that evaluates the key.query dot products block-by-block from the
// embedding Gram matrix; generate_copy_naive runs the full feature pipeline.
std::vector<int> generate_copy(const ConstructedCopier& copier, std::span<const int> prompt);
std::vector<int> generate_copy_naive(const ConstructedCopier& copier, std::span<const int> prompt);

// Attention weights of the retrieval head at a given generation step (1-based);
// exposed for the concentration tests.
std::vector<double> retrieval_weights(const ConstructedCopier& copier,
                                      std::span<const int> prompt, int step);

struct Algorithm1Result {
    std::vector<int> output;
    std::vector<int> no_match_steps;  // 0-based output positions with no key match
};

// Pure hash-based copying: the first w = n+1 tokens are emitted verbatim, then
// each step hashes the previous w outputs, finds the earliest input position
// whose preceding w tokens match, and emits that position's token. No match
// emits token 0 and records a flag.
Algorithm1Result algorithm1_copy(std::span<const int> x, int n);

// Plain-text parameter manifest (D, n, d, tau, codewords).
std::string copier_manifest(const ConstructedCopier& copier);

}  // namespace copylab
