#pragma once

// Vocabularies and seeded generators for the synthetic task suite.
//
// The "n-gram" parameter everywhere follows the window-index convention:
// an n-gram is the window x_i..x_{i+n}, i.e. n+1 consecutive tokens, and a
// "repeated n-gram" means two equal (n+1)-token windows at distinct positions.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "copylab/numerics.hpp"

namespace copylab {

struct Vocab {
    int ordinary = 0;  // D alphabet tokens, ids 0..D-1

    int bos() const { return ordinary; }
    int copy_sep() const { return ordinary + 1; }
    int eos() const { return ordinary + 2; }
    int size() const { return ordinary + 3; }
    bool is_ordinary(int t) const { return t >= 0 && t < ordinary; }
};

struct CopyInstance {
    std::vector<int> tokens;      // BOS x_1..x_L COPY x_1..x_L EOS
    int input_len = 0;            // L
    std::vector<std::uint8_t> loss_mask;  // true on x_1..x_L after COPY and on EOS

    std::span<const int> source() const { return std::span(tokens).subspan(1, input_len); }
    std::span<const int> target() const { return std::span(tokens).subspan(input_len + 2, input_len); }
    std::span<const int> prompt() const { return std::span(tokens).first(input_len + 2); }
};

CopyInstance make_copy_instance(const Vocab& vocab, std::span<const int> x);

// x_i i.i.d. uniform over ordinary tokens.
CopyInstance sample_uniform_copy(const Vocab& vocab, int len, Rng& rng);

// Rejection-samples until the string has no two equal (n+1)-token windows.
// Throws if no such string exists (pigeonhole) or after 10^4 retries.
CopyInstance sample_unique_ngram_copy(const Vocab& vocab, int len, int n, Rng& rng);

// Plants two equal dup_len-token windows at distinct positions, successors
// differing when possible; degrades to uniform sampling when len < 2*dup_len+2.
CopyInstance sample_dup_ngram_copy(const Vocab& vocab, int len, int dup_len, Rng& rng);

// First position pair (i, j), i < j, of equal window_len-token windows; 0-based.
std::optional<std::pair<int, int>> find_repeated_window(std::span<const int> x, int window_len);

struct LookupInstance {
    enum class Variant { suffix_key, prefix_key };
    Variant variant = Variant::suffix_key;
    std::vector<int> context;
    std::vector<int> key;      // n+1 tokens
    std::vector<int> answer;   // k tokens following the key occurrence in context
    std::vector<int> tokens;   // assembled prompt ++ answer ++ EOS
    int prompt_len = 0;
    std::vector<std::uint8_t> loss_mask;

    std::span<const int> prompt() const { return std::span(tokens).first(prompt_len); }
};

// Suffix variant: BOS context SEP key            -> answer.
// Prefix variant: BOS key SEP context SEP        -> answer.
// The key occurrence in the context is unique (rejection-sampled); the answer is
// the k tokens immediately after it. The prefix layout carries a trailing SEP so
// a streaming model can tell where the context ends.
LookupInstance sample_lookup(const Vocab& vocab, int context_len, int n, int k,
                             LookupInstance::Variant variant, Rng& rng);

// Toy phone-book: entries of (name tokens, SEP, number tokens, EOS); the prompt
// ends with one of the names followed by SEP and the answer is its number block.
LookupInstance sample_phonebook(const Vocab& vocab, int entries, Rng& rng);

struct PackedSequence {
    std::vector<int> tokens;             // length C, EOS-padded
    std::vector<std::uint8_t> loss_mask; // never set on padding
    int instances_packed = 0;
};

// Greedily concatenates whole instances until the next would overflow C.
// Throws if a single instance cannot fit.
PackedSequence pack_context(std::span<const CopyInstance> instances, int context_len,
                            const Vocab& vocab);

// ------------------------------------------------------------- serialization
//
// One instance per line: "tokens<TAB>mask<TAB>meta", tokens space-separated
// decimal ids, mask a 0/1 string, meta space-separated key=value pairs.
// Round-trips bit-exactly.

struct DatasetRecord {
    std::vector<int> tokens;
    std::vector<std::uint8_t> mask;
    std::string meta;
};

std::string serialize_record(const DatasetRecord& rec);
DatasetRecord parse_record(const std::string& line);

}  // namespace copylab
