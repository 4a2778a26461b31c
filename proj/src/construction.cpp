#include "copylab/construction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace copylab {

std::span<const double> ProofEmbedding::psi(int token) const {
    if (token < 0 || token >= tokens()) throw std::runtime_error("psi: token outside proof vocabulary");
    return table[static_cast<std::size_t>(token)];
}

ProofEmbedding embed(const Vocab& vocab) {
    if (vocab.ordinary < 1) throw std::runtime_error("embed: need at least one ordinary token");
    ProofEmbedding emb;
    emb.ordinary = vocab.ordinary;
    emb.sign_dim = 1;
    while ((1 << emb.sign_dim) < vocab.ordinary) ++emb.sign_dim;
    emb.dim = emb.sign_dim + 2;
    emb.table.assign(static_cast<std::size_t>(emb.ordinary) + 2,
                     std::vector<double>(static_cast<std::size_t>(emb.dim), 0.0));
    const double scale = 1.0 / std::sqrt(static_cast<double>(emb.sign_dim));
    for (int x = 0; x < emb.ordinary; ++x) {
        for (int b = 0; b < emb.sign_dim; ++b) {
            const bool neg = (x >> (emb.sign_dim - 1 - b)) & 1;
            emb.table[x][2 + b] = neg ? -scale : scale;
        }
    }
    emb.table[emb.ordinary][0] = 1.0;      // BOS
    emb.table[emb.ordinary + 1][1] = 1.0;  // COPY
    return emb;
}

ConstructedCopier build_copier(const Vocab& vocab, int n, int l_max,
                               std::optional<double> tau_override) {
    if (n < 1) throw std::runtime_error("build_copier: n must be >= 1");
    // D^n >= l_max, computed with saturation to dodge overflow.
    std::uint64_t cap = 1;
    for (int i = 0; i < n && cap < static_cast<std::uint64_t>(l_max); ++i) {
        cap *= static_cast<std::uint64_t>(vocab.ordinary);
    }
    if (l_max < 2 * n || cap < static_cast<std::uint64_t>(l_max)) {
        throw std::runtime_error("build_copier: requires 2n <= L <= D^n (got n=" + std::to_string(n) +
                                 ", L=" + std::to_string(l_max) + ", D=" + std::to_string(vocab.ordinary) + ")");
    }
    ConstructedCopier c;
    c.vocab = vocab;
    c.n = n;
    c.match_len = n + 1;
    c.l_max = l_max;
    c.emb = embed(vocab);
    // The averaged-head gates need t*(1/t) to round to exactly 1 for every
    // window width in use; that holds for all small t, but assert it so the
    // exact-indicator claims are honest rather than assumed.
    for (int t = 1; t <= c.match_len + 1; ++t) {
        volatile double inv = 1.0 / static_cast<double>(t);
        if (static_cast<double>(t) * inv != 1.0) {
            throw std::runtime_error("build_copier: t*(1/t) != 1 for t=" + std::to_string(t));
        }
    }
    if (tau_override) {
        c.tau = *tau_override;
    } else {
        const double k = std::pow(static_cast<double>(vocab.ordinary), static_cast<double>(c.match_len));
        c.tau = c.emb.dim * std::log(8.0 * k * c.emb.dim);
    }
    return c;
}

// ----------------------------------------------------------- first block

namespace {

// Per-position feature computation shared by the full and incremental paths.
// Positions are 0-based; emb_seq[p] = psi(tokens[p]).
BlockFeatures features_at(const ConstructedCopier& c,
                          const std::vector<std::vector<double>>& emb_seq, int i) {
    const int d = c.emb.dim;
    const int m = c.match_len;
    // h_t for t = 1..m+1: running averages over the last min(t, i+1) positions.
    std::vector<std::vector<double>> h(static_cast<std::size_t>(m) + 2);
    for (int t = 1; t <= m + 1; ++t) {
        const int width = std::min(t, i + 1);
        std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
        for (int j = i - width + 1; j <= i; ++j) {
            for (int cdx = 0; cdx < d; ++cdx) acc[cdx] += emb_seq[j][cdx];
        }
        for (double& v : acc) v /= width;
        h[t] = std::move(acc);
    }
    // g_t = (t+1) h_{t+1} - t h_t, with h_0 = 0 so g_0 = h_1.
    std::vector<std::vector<double>> g(static_cast<std::size_t>(m) + 1);
    for (int t = 0; t <= m; ++t) {
        std::vector<double> v(static_cast<std::size_t>(d));
        if (t == 0) {
            v = h[1];
        } else {
            for (int cdx = 0; cdx < d; ++cdx) v[cdx] = (t + 1) * h[t + 1][cdx] - t * h[t][cdx];
        }
        g[t] = std::move(v);
    }
    const double gate = m * g[m][0];  // m * <psi(BOS), g_m>

    BlockFeatures f;
    f.key.assign(static_cast<std::size_t>((d + 1) * m), 0.0);
    f.query.assign(static_cast<std::size_t>((d + 1) * m), 0.0);
    for (int t = 1; t <= m; ++t) {
        for (int cdx = 0; cdx < d; ++cdx) {
            const double a = g[t][cdx];
            f.key[static_cast<std::size_t>((t - 1) * d + cdx)] = relu(a - gate) - relu(-a - gate);
            const double aq = g[t - 1][cdx];
            f.query[static_cast<std::size_t>((t - 1) * d + cdx)] = relu(aq - gate) - relu(-aq - gate);
        }
        // g~_t = relu(2 <psi(BOS), g_t - h_1> - 1): fires exactly when the
        // window's oldest element is BOS, i.e. at position t.
        f.key[static_cast<std::size_t>(m * d + (t - 1))] = relu(2.0 * (g[t][0] - h[1][0]) - 1.0);
        // g*_t = relu(<psi(COPY), g_{t-1}>): fires t-1 steps after COPY.
        f.query[static_cast<std::size_t>(m * d + (t - 1))] = m * relu(g[t - 1][1]);
    }
    f.value = h[1];
    return f;
}

std::vector<std::vector<double>> embed_sequence(const ConstructedCopier& c,
                                                std::span<const int> tokens) {
    std::vector<std::vector<double>> emb_seq;
    emb_seq.reserve(tokens.size());
    for (int t : tokens) {
        auto p = c.emb.psi(t);
        emb_seq.emplace_back(p.begin(), p.end());
    }
    return emb_seq;
}

void validate_prompt(const ConstructedCopier& c, std::span<const int> prompt) {
    if (prompt.size() < 3) throw std::runtime_error("generate_copy: prompt too short");
    if (prompt.front() != c.vocab.bos()) throw std::runtime_error("generate_copy: prompt must start with BOS");
    if (prompt.back() != c.vocab.copy_sep()) throw std::runtime_error("generate_copy: prompt must end with COPY");
    const int len = static_cast<int>(prompt.size()) - 2;
    if (len > c.l_max) throw std::runtime_error("generate_copy: input longer than L_max");
    for (int i = 1; i <= len; ++i) {
        if (!c.vocab.is_ordinary(prompt[i])) throw std::runtime_error("generate_copy: non-ordinary token in input");
    }
}

}  // namespace

std::vector<BlockFeatures> first_block(const ConstructedCopier& copier,
                                       std::span<const int> tokens) {
    if (tokens.empty() || tokens[0] != copier.vocab.bos()) {
        throw std::runtime_error("first_block: sequence must start with BOS");
    }
    const auto emb_seq = embed_sequence(copier, tokens);
    std::vector<BlockFeatures> feats;
    feats.reserve(tokens.size());
    for (int i = 0; i < static_cast<int>(tokens.size()); ++i) feats.push_back(features_at(copier, emb_seq, i));
    return feats;
}

std::vector<double> retrieve(const ConstructedCopier& copier,
                             std::span<const BlockFeatures> feats, int query_pos) {
    if (query_pos < 0 || query_pos >= static_cast<int>(feats.size())) {
        throw std::runtime_error("retrieve: query position out of range");
    }
    std::vector<double> z(static_cast<std::size_t>(query_pos) + 1);
    for (int p = 0; p <= query_pos; ++p) {
        z[p] = copier.tau * dot(feats[p].key, feats[query_pos].query);
    }
    const std::vector<double> w = softmax_stable(z);
    std::vector<double> out(static_cast<std::size_t>(copier.emb.dim), 0.0);
    for (int p = 0; p <= query_pos; ++p) {
        for (int cdx = 0; cdx < copier.emb.dim; ++cdx) out[cdx] += w[p] * feats[p].value[cdx];
    }
    return out;
}

int decode(const ProofEmbedding& emb, std::span<const double> z) {
    std::vector<double> scores(static_cast<std::size_t>(emb.tokens()));
    for (int x = 0; x < emb.tokens(); ++x) scores[x] = dot(z, emb.psi(x));
    return static_cast<int>(argmax_low_tiebreak(scores));
}

std::vector<int> generate_copy_naive(const ConstructedCopier& copier, std::span<const int> prompt) {
    validate_prompt(copier, prompt);
    const int len = static_cast<int>(prompt.size()) - 2;
    std::vector<int> seq(prompt.begin(), prompt.end());
    auto emb_seq = embed_sequence(copier, seq);
    std::vector<BlockFeatures> feats;
    for (int i = 0; i < static_cast<int>(seq.size()); ++i) feats.push_back(features_at(copier, emb_seq, i));

    std::vector<int> out;
    out.reserve(len);
    for (int step = 0; step < len; ++step) {
        const std::vector<double> y = retrieve(copier, feats, static_cast<int>(seq.size()) - 1);
        const int tok = decode(copier.emb, y);
        out.push_back(tok);
        seq.push_back(tok);
        auto p = copier.emb.psi(tok);
        emb_seq.emplace_back(p.begin(), p.end());
        feats.push_back(features_at(copier, emb_seq, static_cast<int>(seq.size()) - 1));
    }
    return out;
}

// ------------------------------------------------- fast generation path
//
// The key.query dot product decomposes block-by-block: ordinary blocks hold
// shifted embeddings (zero for positions <= match_len), so their contribution
// is a sum of Gram-matrix entries; the indicator blocks contribute
// match_len exactly when key position p <= match_len and the query sits
// p-1 steps after COPY. Same formula, evaluated per block.

namespace {

struct GramTable {
    int tokens = 0;
    std::vector<double> g;  // tokens x tokens
    double at(int a, int b) const { return g[static_cast<std::size_t>(a) * tokens + b]; }
};

GramTable gram_of(const ProofEmbedding& emb) {
    GramTable t;
    t.tokens = emb.tokens();
    t.g.resize(static_cast<std::size_t>(t.tokens) * t.tokens);
    for (int a = 0; a < t.tokens; ++a) {
        for (int b = 0; b < t.tokens; ++b) {
            t.g[static_cast<std::size_t>(a) * t.tokens + b] = dot(emb.psi(a), emb.psi(b));
        }
    }
    return t;
}

}  // namespace

std::vector<double> retrieval_weights(const ConstructedCopier& copier,
                                      std::span<const int> prompt, int step) {
    validate_prompt(copier, prompt);
    const int len = static_cast<int>(prompt.size()) - 2;
    if (step < 1 || step > len) throw std::runtime_error("retrieval_weights: step out of range");
    // Run the fast generator up to the requested step and return that step's
    // softmax weights.
    const GramTable gram = gram_of(copier.emb);
    const int m = copier.match_len;
    std::vector<int> seq(prompt.begin(), prompt.end());
    std::vector<double> w;
    for (int s = 1; s <= step; ++s) {
        const int qi = static_cast<int>(seq.size()) - 1;
        std::vector<double> z(static_cast<std::size_t>(qi) + 1, 0.0);
        for (int p = 0; p <= qi; ++p) {
            double zp = 0.0;
            if (p >= m + 1 && qi >= m + 1) {
                for (int t = 1; t <= m; ++t) zp += gram.at(seq[p - t], seq[qi - t + 1]);
            }
            if (p >= 1 && p <= m && seq[qi - p + 1] == copier.vocab.copy_sep()) zp += m;
            z[p] = copier.tau * zp;
        }
        w = softmax_stable(z);
        std::vector<double> y(static_cast<std::size_t>(copier.emb.dim), 0.0);
        for (int p = 0; p <= qi; ++p) {
            auto v = copier.emb.psi(seq[p]);
            for (int cdx = 0; cdx < copier.emb.dim; ++cdx) y[cdx] += w[p] * v[cdx];
        }
        seq.push_back(decode(copier.emb, y));
    }
    return w;
}

std::vector<int> generate_copy(const ConstructedCopier& copier, std::span<const int> prompt) {
    validate_prompt(copier, prompt);
    const int len = static_cast<int>(prompt.size()) - 2;
    const GramTable gram = gram_of(copier.emb);
    const int m = copier.match_len;
    const int d = copier.emb.dim;
    const int copy_tok = copier.vocab.copy_sep();

    std::vector<int> seq(prompt.begin(), prompt.end());
    seq.reserve(prompt.size() + static_cast<std::size_t>(len));
    std::vector<int> out;
    out.reserve(len);
    std::vector<double> z;
    std::vector<double> y(static_cast<std::size_t>(d));

    for (int step = 0; step < len; ++step) {
        const int qi = static_cast<int>(seq.size()) - 1;
        z.assign(static_cast<std::size_t>(qi) + 1, 0.0);
        if (qi >= m + 1) {
            for (int p = m + 1; p <= qi; ++p) {
                double zp = 0.0;
                for (int t = 1; t <= m; ++t) zp += gram.at(seq[p - t], seq[qi - t + 1]);
                z[p] = zp;
            }
        }
        for (int p = 1; p <= std::min(m, qi); ++p) {
            if (seq[qi - p + 1] == copy_tok) z[p] += m;
        }
        for (double& v : z) v *= copier.tau;
        const std::vector<double> w = softmax_stable(z);
        std::fill(y.begin(), y.end(), 0.0);
        for (int p = 0; p <= qi; ++p) {
            if (w[p] == 0.0) continue;
            auto v = copier.emb.psi(seq[p]);
            for (int cdx = 0; cdx < d; ++cdx) y[cdx] += w[p] * v[cdx];
        }
        const int tok = decode(copier.emb, y);
        out.push_back(tok);
        seq.push_back(tok);
    }
    return out;
}

// ------------------------------------------------------------ Algorithm 1

Algorithm1Result algorithm1_copy(std::span<const int> x, int n) {
    if (x.empty()) throw std::runtime_error("algorithm1_copy: empty input");
    const int len = static_cast<int>(x.size());
    const int w = n + 1;
    Algorithm1Result res;
    res.output.reserve(len);

    // Earliest position whose preceding w tokens form each key.
    int maxtok = 0;
    for (int t : x) maxtok = std::max(maxtok, t);
    const std::uint64_t base = static_cast<std::uint64_t>(maxtok) + 2;
    std::uint64_t pw = 1;
    bool fits = true;
    for (int i = 0; i < w; ++i) {
        if (pw > std::numeric_limits<std::uint64_t>::max() / base) { fits = false; break; }
        pw *= base;
    }
    if (!fits) throw std::runtime_error("algorithm1_copy: window code exceeds 64 bits");

    auto code_of = [&](std::span<const int> v, int start) {
        std::uint64_t code = 0;
        for (int t = 0; t < w; ++t) code = code * base + static_cast<std::uint64_t>(v[start + t] + 1);
        return code;
    };
    std::unordered_map<std::uint64_t, int> earliest;
    for (int i = w; i < len; ++i) {
        earliest.emplace(code_of(x, i - w), i);  // first insert wins
    }

    for (int j = 0; j < len; ++j) {
        if (j < w) {
            res.output.push_back(x[j]);
            continue;
        }
        const std::uint64_t q = code_of(res.output, j - w);
        auto it = earliest.find(q);
        if (it == earliest.end()) {
            res.output.push_back(0);
            res.no_match_steps.push_back(j);
        } else {
            res.output.push_back(x[it->second]);
        }
    }
    return res;
}

std::string copier_manifest(const ConstructedCopier& copier) {
    std::ostringstream os;
    os.precision(17);
    os << "copylab constructed copier\n";
    os << "D = " << copier.vocab.ordinary << "\n";
    os << "n = " << copier.n << "\n";
    os << "match_len = " << copier.match_len << "\n";
    os << "d = " << copier.emb.dim << "\n";
    os << "l_max = " << copier.l_max << "\n";
    os << "tau = " << copier.tau << "\n";
    os << "codewords:\n";
    for (int t = 0; t < copier.emb.tokens(); ++t) {
        if (t < copier.emb.ordinary) {
            os << "  tok " << t;
        } else {
            os << (t == copier.emb.ordinary ? "  BOS  " : "  COPY ");
        }
        for (double v : copier.emb.psi(t)) os << ' ' << v;
        os << "\n";
    }
    return os.str();
}

}  // namespace copylab
