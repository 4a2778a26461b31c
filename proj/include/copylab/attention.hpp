#pragma once

// Softmax attention heads with pluggable positional bias schemes, and the
// proof-faithful transformer block (no residual, no 1/sqrt(d) scaling; the
// trainable variant in models.hpp adds both).

#include <span>
#include <variant>
#include <vector>

#include "copylab/numerics.hpp"

namespace copylab {

struct HardAlibi {
    int window = 1;        // m >= 1; ignored when infinite
    bool infinite = false; // m = infinity recovers NoPE
};
struct Alibi {
    double slope = 1.0;  // > 0
};
struct NoPe {};
struct Rope {
    double angle_base = 10000.0;
};

using BiasScheme = std::variant<HardAlibi, Alibi, NoPe, Rope>;

// Additive biases b_{i,1..i} for a query at 1-based position i over a causal
// prefix. HardAlibi: -inf for j <= i-m, else 0. Alibi: -slope*(i-j). NoPE and
// Rope: all zeros (Rope acts in the projections, not the bias).
std::vector<double> bias_row(const BiasScheme& scheme, int query_pos, int len);

// In-place rotary rotation of a d-vector at 1-based position pos.
void rope_rotate(std::span<double> v, int pos, double angle_base);

struct HeadParams {
    Mat w_k, w_q, w_v;  // d x d
    BiasScheme bias = NoPe{};
};

// o_i = V_i . softmax(K_i . q_i + b_i) at the last position of xs.
// No attention scaling. Rope rotates k and q before the dot product.
std::vector<double> head_forward(const HeadParams& params,
                                 std::span<const std::vector<double>> xs);

// Attention weights over positions 1..i for the last position (exposed for
// property tests; head_forward consumes them internally).
std::vector<double> head_attention_weights(const HeadParams& params,
                                           std::span<const std::vector<double>> xs);

// h_t: running average of the last min(t, i) inputs. Equals head_forward with
// zero key/query, identity value and HardAlibi(m=t).
std::vector<double> avg_head(int t, std::span<const std::vector<double>> xs);

struct BlockParams {
    std::vector<HeadParams> heads;  // l heads, shared dimension d
    Mat u2;  // (d*l) -> hidden
    Mat u1;  // hidden -> (d*l)
};

// Per position: concatenate head outputs, then U1 relu(U2 .). No residual.
std::vector<std::vector<double>> block_forward(const BlockParams& params,
                                               std::span<const std::vector<double>> xs);

}  // namespace copylab
