#include "copylab/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace copylab {

namespace {

constexpr int kMaxRejectionRetries = 10000;

std::vector<int> sample_uniform_string(const Vocab& vocab, int len, Rng& rng) {
    std::vector<int> x(len);
    for (int i = 0; i < len; ++i) x[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab.ordinary)));
    return x;
}

}  // namespace

CopyInstance make_copy_instance(const Vocab& vocab, std::span<const int> x) {
    const int len = static_cast<int>(x.size());
    CopyInstance inst;
    inst.input_len = len;
    inst.tokens.reserve(2 * len + 3);
    inst.tokens.push_back(vocab.bos());
    inst.tokens.insert(inst.tokens.end(), x.begin(), x.end());
    inst.tokens.push_back(vocab.copy_sep());
    inst.tokens.insert(inst.tokens.end(), x.begin(), x.end());
    inst.tokens.push_back(vocab.eos());
    inst.loss_mask.assign(inst.tokens.size(), 0);
    for (int i = 0; i <= len; ++i) inst.loss_mask[len + 2 + i] = 1;  // targets + EOS
    return inst;
}

CopyInstance sample_uniform_copy(const Vocab& vocab, int len, Rng& rng) {
    if (len < 1) throw std::runtime_error("sample_uniform_copy: len must be >= 1");
    return make_copy_instance(vocab, sample_uniform_string(vocab, len, rng));
}

std::optional<std::pair<int, int>> find_repeated_window(std::span<const int> x, int window_len) {
    const int len = static_cast<int>(x.size());
    if (window_len < 1 || len < window_len + 1) return std::nullopt;
    const int windows = len - window_len + 1;

    // Encode windows as integers when the alphabet allows, fall back to strings.
    int maxtok = 0;
    for (int t : x) maxtok = std::max(maxtok, t);
    const std::uint64_t base = static_cast<std::uint64_t>(maxtok) + 2;
    bool fits = true;
    std::uint64_t pw = 1;
    for (int i = 0; i < window_len; ++i) {
        if (pw > std::numeric_limits<std::uint64_t>::max() / base) { fits = false; break; }
        pw *= base;
    }

    if (fits) {
        std::unordered_map<std::uint64_t, int> seen;
        seen.reserve(static_cast<std::size_t>(windows) * 2);
        std::uint64_t code = 0;
        std::uint64_t top = 1;
        for (int i = 0; i < window_len - 1; ++i) top *= base;
        for (int i = 0; i < len; ++i) {
            if (i < window_len) {
                code = code * base + static_cast<std::uint64_t>(x[i] + 1);
                if (i < window_len - 1) continue;
            } else {
                code = (code - static_cast<std::uint64_t>(x[i - window_len] + 1) * top) * base +
                       static_cast<std::uint64_t>(x[i] + 1);
            }
            const int start = i - window_len + 1;
            auto [it, inserted] = seen.emplace(code, start);
            if (!inserted) return std::make_pair(it->second, start);
        }
        return std::nullopt;
    }

    for (int i = 0; i < windows; ++i) {
        for (int j = i + 1; j < windows; ++j) {
            if (std::equal(x.begin() + i, x.begin() + i + window_len, x.begin() + j)) {
                return std::make_pair(i, j);
            }
        }
    }
    return std::nullopt;
}

CopyInstance sample_unique_ngram_copy(const Vocab& vocab, int len, int n, Rng& rng) {
    if (len < 1) throw std::runtime_error("sample_unique_ngram_copy: len must be >= 1");
    if (n < 1) throw std::runtime_error("sample_unique_ngram_copy: n must be >= 1");
    const int window = n + 1;
    // Pigeonhole: a string of length len has len-n windows of n+1 tokens and only
    // D^(n+1) distinct ones exist.
    double distinct = std::pow(static_cast<double>(vocab.ordinary), window);
    if (static_cast<double>(len - n) > distinct) {
        throw std::runtime_error("sample_unique_ngram_copy: no string of length " + std::to_string(len) +
                                 " avoids repeated " + std::to_string(window) + "-token windows over D=" +
                                 std::to_string(vocab.ordinary));
    }
    for (int attempt = 0; attempt < kMaxRejectionRetries; ++attempt) {
        std::vector<int> x = sample_uniform_string(vocab, len, rng);
        if (!find_repeated_window(x, window)) return make_copy_instance(vocab, x);
    }
    const double est = std::min(1.0, static_cast<double>(len) * len * std::pow(static_cast<double>(vocab.ordinary), -n));
    throw std::runtime_error("sample_unique_ngram_copy: retry budget exhausted; estimated collision probability " +
                             std::to_string(est));
}

CopyInstance sample_dup_ngram_copy(const Vocab& vocab, int len, int dup_len, Rng& rng) {
    if (len < 1) throw std::runtime_error("sample_dup_ngram_copy: len must be >= 1");
    if (dup_len < 1 || len < 2 * dup_len + 2 || vocab.ordinary < 2) {
        return sample_uniform_copy(vocab, len, rng);
    }
    std::vector<int> x = sample_uniform_string(vocab, len, rng);
    // Two disjoint dup_len-windows with a free successor after each: source at a,
    // destination at b with b >= a + dup_len + 1 and b + dup_len < len.
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(len - 2 * dup_len - 1)));
    const int bmin = a + dup_len + 1;
    const int bmax = len - dup_len - 1;  // successor x[b+dup_len] must exist
    const int b = bmin + static_cast<int>(rng.below(static_cast<std::uint64_t>(bmax - bmin + 1)));
    std::copy(x.begin() + a, x.begin() + a + dup_len, x.begin() + b);
    if (x[a + dup_len] == x[b + dup_len]) {
        const int shift = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab.ordinary - 1)));
        x[b + dup_len] = (x[b + dup_len] + shift) % vocab.ordinary;
    }
    return make_copy_instance(vocab, x);
}

LookupInstance sample_lookup(const Vocab& vocab, int context_len, int n, int k,
                             LookupInstance::Variant variant, Rng& rng) {
    const int key_len = n + 1;
    if (context_len < key_len + k) throw std::runtime_error("sample_lookup: context too short for key+answer");
    for (int attempt = 0; attempt < kMaxRejectionRetries; ++attempt) {
        std::vector<int> ctx = sample_uniform_string(vocab, context_len, rng);
        // Key start so that k answer tokens follow inside the context.
        const int pos = static_cast<int>(rng.below(static_cast<std::uint64_t>(context_len - key_len - k + 1)));
        std::vector<int> key(ctx.begin() + pos, ctx.begin() + pos + key_len);
        // Occurrence must be unique for the instance to be well-posed.
        int occurrences = 0;
        for (int i = 0; i + key_len <= context_len; ++i) {
            if (std::equal(key.begin(), key.end(), ctx.begin() + i)) ++occurrences;
        }
        if (occurrences != 1) continue;

        LookupInstance inst;
        inst.variant = variant;
        inst.context = std::move(ctx);
        inst.key = std::move(key);
        inst.answer.assign(inst.context.begin() + pos + key_len, inst.context.begin() + pos + key_len + k);

        inst.tokens.push_back(vocab.bos());
        if (variant == LookupInstance::Variant::suffix_key) {
            inst.tokens.insert(inst.tokens.end(), inst.context.begin(), inst.context.end());
            inst.tokens.push_back(vocab.copy_sep());
            inst.tokens.insert(inst.tokens.end(), inst.key.begin(), inst.key.end());
        } else {
            inst.tokens.insert(inst.tokens.end(), inst.key.begin(), inst.key.end());
            inst.tokens.push_back(vocab.copy_sep());
            inst.tokens.insert(inst.tokens.end(), inst.context.begin(), inst.context.end());
            inst.tokens.push_back(vocab.copy_sep());
        }
        inst.prompt_len = static_cast<int>(inst.tokens.size());
        inst.tokens.insert(inst.tokens.end(), inst.answer.begin(), inst.answer.end());
        inst.tokens.push_back(vocab.eos());
        inst.loss_mask.assign(inst.tokens.size(), 0);
        for (std::size_t i = inst.prompt_len; i < inst.tokens.size(); ++i) inst.loss_mask[i] = 1;
        return inst;
    }
    throw std::runtime_error("sample_lookup: retry budget exhausted (key uniqueness)");
}

LookupInstance sample_phonebook(const Vocab& vocab, int entries, Rng& rng) {
    if (entries < 1) throw std::runtime_error("sample_phonebook: entries must be >= 1");
    if (vocab.ordinary < 2) throw std::runtime_error("sample_phonebook: need at least 2 ordinary tokens");
    constexpr int kNameLen = 3;
    constexpr int kNumberLen = 4;

    // Distinct names, so the queried entry is unambiguous.
    std::vector<std::vector<int>> names;
    std::vector<std::vector<int>> numbers;
    for (int e = 0; e < entries; ++e) {
        for (int attempt = 0;; ++attempt) {
            if (attempt >= kMaxRejectionRetries) throw std::runtime_error("sample_phonebook: name collision budget exhausted");
            std::vector<int> name = sample_uniform_string(vocab, kNameLen, rng);
            if (std::find(names.begin(), names.end(), name) == names.end()) {
                names.push_back(std::move(name));
                break;
            }
        }
        numbers.push_back(sample_uniform_string(vocab, kNumberLen, rng));
    }
    const int q = static_cast<int>(rng.below(static_cast<std::uint64_t>(entries)));

    LookupInstance inst;
    inst.variant = LookupInstance::Variant::suffix_key;
    inst.key = names[q];
    inst.answer = numbers[q];
    inst.tokens.push_back(vocab.bos());
    for (int e = 0; e < entries; ++e) {
        inst.tokens.insert(inst.tokens.end(), names[e].begin(), names[e].end());
        inst.tokens.push_back(vocab.copy_sep());
        inst.tokens.insert(inst.tokens.end(), numbers[e].begin(), numbers[e].end());
        inst.tokens.push_back(vocab.eos());
        inst.context.insert(inst.context.end(), names[e].begin(), names[e].end());
        inst.context.push_back(vocab.copy_sep());
        inst.context.insert(inst.context.end(), numbers[e].begin(), numbers[e].end());
        inst.context.push_back(vocab.eos());
    }
    inst.tokens.insert(inst.tokens.end(), inst.key.begin(), inst.key.end());
    inst.tokens.push_back(vocab.copy_sep());
    inst.prompt_len = static_cast<int>(inst.tokens.size());
    inst.tokens.insert(inst.tokens.end(), inst.answer.begin(), inst.answer.end());
    inst.tokens.push_back(vocab.eos());
    inst.loss_mask.assign(inst.tokens.size(), 0);
    for (std::size_t i = inst.prompt_len; i < inst.tokens.size(); ++i) inst.loss_mask[i] = 1;
    return inst;
}

PackedSequence pack_context(std::span<const CopyInstance> instances, int context_len,
                            const Vocab& vocab) {
    PackedSequence packed;
    packed.tokens.reserve(context_len);
    packed.loss_mask.reserve(context_len);
    for (const CopyInstance& inst : instances) {
        if (static_cast<int>(inst.tokens.size()) > context_len) {
            throw std::runtime_error("pack_context: instance longer than context");
        }
        if (static_cast<int>(packed.tokens.size() + inst.tokens.size()) > context_len) break;
        packed.tokens.insert(packed.tokens.end(), inst.tokens.begin(), inst.tokens.end());
        packed.loss_mask.insert(packed.loss_mask.end(), inst.loss_mask.begin(), inst.loss_mask.end());
        ++packed.instances_packed;
    }
    while (static_cast<int>(packed.tokens.size()) < context_len) {
        packed.tokens.push_back(vocab.eos());
        packed.loss_mask.push_back(0);
    }
    return packed;
}

std::string serialize_record(const DatasetRecord& rec) {
    std::ostringstream os;
    for (std::size_t i = 0; i < rec.tokens.size(); ++i) {
        if (i) os << ' ';
        os << rec.tokens[i];
    }
    os << '\t';
    for (std::uint8_t m : rec.mask) os << (m ? '1' : '0');
    os << '\t' << rec.meta;
    return os.str();
}

DatasetRecord parse_record(const std::string& line) {
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
        throw std::runtime_error("parse_record: malformed line");
    }
    DatasetRecord rec;
    std::istringstream ts(line.substr(0, t1));
    int tok;
    while (ts >> tok) rec.tokens.push_back(tok);
    for (std::size_t i = t1 + 1; i < t2; ++i) {
        const char c = line[i];
        if (c != '0' && c != '1') throw std::runtime_error("parse_record: bad mask char");
        rec.mask.push_back(c == '1');
    }
    rec.meta = line.substr(t2 + 1);
    if (rec.mask.size() != rec.tokens.size()) throw std::runtime_error("parse_record: mask/token length mismatch");
    return rec;
}

}  // namespace copylab
