#pragma once

// Dense row-major matrices, stable nonlinearities and a deterministic RNG.
// Everything here is 64-bit floats; the only permitted non-finite value is
// the -inf bias sentinel consumed by softmax_stable.

#include <cstdint>
#include <span>
#include <vector>

namespace copylab {

struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, data.size() == rows*cols

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    static Mat zeros(std::size_t r, std::size_t c) { return Mat(r, c); }
    static Mat identity(std::size_t n);
};

// Standard product with a fixed i,k,j accumulation order. Throws on shape mismatch.
Mat matmul(const Mat& a, const Mat& b);

// Max-subtracted softmax. Entries at -inf map to exactly 0. Throws "empty support"
// if every entry is -inf.
std::vector<double> softmax_stable(std::span<const double> z);

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// Index of the maximum entry; ties break toward the smallest index.
std::size_t argmax_low_tiebreak(std::span<const double> z);

double dot(std::span<const double> a, std::span<const double> b);

// xoshiro256** seeded through SplitMix64. Identical seeds give bit-identical
// streams on every platform; all derived draws (ints, doubles, normals) are
// hand-rolled so no std::distribution enters the picture.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // 53-bit mantissa uniform in [0, 1).
    double next_double();

    // Unbiased integer in [0, n) via rejection. n must be > 0.
    std::uint64_t below(std::uint64_t n);

    // Box-Muller (no cached spare, two uniforms per draw).
    double normal();

    // Child generator for (seed, stream-id); streams are independent for
    // distinct ids and reproducible from the parent seed alone.
    Rng split(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t s_[4] = {0, 0, 0, 0};
};

}  // namespace copylab
