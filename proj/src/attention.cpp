#include "copylab/attention.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace copylab {

std::vector<double> bias_row(const BiasScheme& scheme, int query_pos, int len) {
    if (query_pos < 1 || query_pos > len) throw std::runtime_error("bias_row: position out of range");
    std::vector<double> b(static_cast<std::size_t>(query_pos), 0.0);
    if (const auto* ha = std::get_if<HardAlibi>(&scheme)) {
        if (!ha->infinite) {
            if (ha->window < 1) throw std::runtime_error("bias_row: HardAlibi window must be >= 1");
            const double neg_inf = -std::numeric_limits<double>::infinity();
            for (int j = 1; j <= query_pos - ha->window; ++j) b[j - 1] = neg_inf;
        }
    } else if (const auto* al = std::get_if<Alibi>(&scheme)) {
        if (al->slope <= 0.0) throw std::runtime_error("bias_row: Alibi slope must be > 0");
        for (int j = 1; j <= query_pos; ++j) b[j - 1] = -al->slope * (query_pos - j);
    }
    return b;
}

void rope_rotate(std::span<double> v, int pos, double angle_base) {
    const std::size_t d = v.size();
    for (std::size_t p = 0; p + 1 < d; p += 2) {
        const double theta = static_cast<double>(pos) *
                             std::pow(angle_base, -static_cast<double>(p) / static_cast<double>(d));
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        const double a = v[p];
        const double b = v[p + 1];
        v[p] = a * c - b * s;
        v[p + 1] = a * s + b * c;
    }
}

namespace {

std::vector<double> apply(const Mat& w, std::span<const double> x) {
    if (w.cols != x.size()) throw std::runtime_error("head_forward: dimension mismatch");
    std::vector<double> y(w.rows, 0.0);
    for (std::size_t r = 0; r < w.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < w.cols; ++c) s += w.at(r, c) * x[c];
        y[r] = s;
    }
    return y;
}

}  // namespace

std::vector<double> head_attention_weights(const HeadParams& params,
                                           std::span<const std::vector<double>> xs) {
    if (xs.empty()) throw std::runtime_error("head_forward: empty sequence");
    const int i = static_cast<int>(xs.size());
    const bool rope = std::holds_alternative<Rope>(params.bias);
    const double base = rope ? std::get<Rope>(params.bias).angle_base : 0.0;

    std::vector<double> q = apply(params.w_q, xs[i - 1]);
    if (rope) rope_rotate(q, i, base);

    std::vector<double> z(xs.size());
    for (int j = 0; j < i; ++j) {
        std::vector<double> k = apply(params.w_k, xs[j]);
        if (rope) rope_rotate(k, j + 1, base);
        z[j] = dot(k, q);
    }
    const std::vector<double> b = bias_row(params.bias, i, i);
    for (int j = 0; j < i; ++j) z[j] += b[j];
    return softmax_stable(z);
}

std::vector<double> head_forward(const HeadParams& params,
                                 std::span<const std::vector<double>> xs) {
    const std::vector<double> s = head_attention_weights(params, xs);
    std::vector<double> out(params.w_v.rows, 0.0);
    for (std::size_t j = 0; j < xs.size(); ++j) {
        if (s[j] == 0.0) continue;
        const std::vector<double> v = apply(params.w_v, xs[j]);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += s[j] * v[c];
    }
    return out;
}

std::vector<double> avg_head(int t, std::span<const std::vector<double>> xs) {
    if (t < 1) throw std::runtime_error("avg_head: window must be >= 1");
    if (xs.empty()) throw std::runtime_error("avg_head: empty sequence");
    const int i = static_cast<int>(xs.size());
    const int width = std::min(t, i);
    std::vector<double> out(xs[0].size(), 0.0);
    for (int j = i - width; j < i; ++j) {
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += xs[j][c];
    }
    for (double& v : out) v /= width;
    return out;
}

std::vector<std::vector<double>> block_forward(const BlockParams& params,
                                               std::span<const std::vector<double>> xs) {
    if (params.heads.empty()) throw std::runtime_error("block_forward: no heads");
    const std::size_t d = params.heads[0].w_v.rows;
    const std::size_t dl = d * params.heads.size();
    if (params.u2.cols != dl || params.u1.rows != dl || params.u1.cols != params.u2.rows) {
        throw std::runtime_error("block_forward: MLP dimension mismatch");
    }
    std::vector<std::vector<double>> out;
    out.reserve(xs.size());
    for (std::size_t i = 1; i <= xs.size(); ++i) {
        std::vector<double> concat;
        concat.reserve(dl);
        for (const HeadParams& head : params.heads) {
            std::vector<double> o = head_forward(head, xs.first(i));
            concat.insert(concat.end(), o.begin(), o.end());
        }
        std::vector<double> hidden(params.u2.rows, 0.0);
        for (std::size_t r = 0; r < params.u2.rows; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < params.u2.cols; ++c) s += params.u2.at(r, c) * concat[c];
            hidden[r] = relu(s);
        }
        std::vector<double> y(dl, 0.0);
        for (std::size_t r = 0; r < params.u1.rows; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < params.u1.cols; ++c) s += params.u1.at(r, c) * hidden[c];
            y[r] = s;
        }
        out.push_back(std::move(y));
    }
    return out;
}

}  // namespace copylab
