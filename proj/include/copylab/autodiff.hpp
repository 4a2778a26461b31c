#pragma once

// Minimal reverse-mode differentiation over 2D float64 tensors. A Tape records
// primitive ops in creation order (which is topological); backward seeds the
// loss grad and visits ops in exact reverse order once. Replaying the forward
// reproduces every stored value bit-for-bit.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace copylab {

struct Tensor {
    int rows = 0, cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return data.size(); }
};

class Tape {
public:
    int leaf(Tensor value);

    // [r,k] x [k,c] -> [r,c]
    int matmul(int a, int b);
    int add(int a, int b);
    int add_row_bias(int a, int bias);  // bias [1, c] broadcast over rows
    int mul(int a, int b);
    int scale(int a, double s);
    int relu_op(int a);
    int sigmoid_op(int a);
    int tanh_op(int a);
    // Stable row-wise softmax; -inf entries map to exactly 0.
    int softmax_rows(int a);
    int layernorm_rows(int x, int gain, int bias, double eps = 1e-5);
    int gather_rows(int table, std::vector<int> ids);
    // Rotary rotation applied per head block; row r has position (r % seq) + 1.
    int rotary_rows(int x, int seq, int head_dim, double base);
    // Multi-head causal scores [B*H*T, T]: scale * q_i . k_j for j <= i, -inf
    // beyond. Heads with content[h] == false contribute 0 instead of q.k
    // (bias-only heads).
    int attn_scores(int q, int k, int batch, int seq, int heads, double scale,
                    std::vector<std::uint8_t> content = {});
    // Adds a constant [H*T, T] bias matrix, broadcast over the batch.
    int add_bias_const(int scores, Tensor bias, int batch);
    // probs [B*H*T, T] x v [B*T, d] -> [B*T, d]
    int attn_mix(int probs, int v, int batch, int seq, int heads);
    // Fused LSTM over T steps: x [B*T, in], w_ih [in, 4h], w_hh [h, 4h],
    // b [1, 4h] -> h [B*T, h]. Gate order i, f, g, o.
    int lstm_scan(int x, int w_ih, int w_hh, int b, int batch, int seq);
    // Gated diagonal recurrence: h_t = sigmoid(a) * h_{t-1} + sigmoid(x_t W_g + b_g) * (x_t W_x).
    int diag_ssm_scan(int x, int a_logit, int w_x, int w_g, int b_g, int batch, int seq);
    // Mean cross-entropy over masked rows. labels/mask length = rows(logits).
    // Throws if the mask is empty.
    int cross_entropy_masked(int logits, std::vector<int> labels, std::vector<std::uint8_t> mask);

    void backward(int loss_id);

    const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Tensor& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
    std::size_t size() const { return nodes_.size(); }

    // Recomputes every non-leaf node from its parents; true iff all stored
    // values are reproduced bit-for-bit.
    bool replay_matches();

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void()> back;        // accumulate into parents' grads
        std::function<Tensor()> recompute; // forward from parent values
    };
    std::vector<Node> nodes_;

    int push(Tensor value, std::function<void()> back, std::function<Tensor()> recompute);
    Tensor& grad_mut(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
};

}  // namespace copylab
