#pragma once
#include <cmath>
#include <cstdint>

namespace trackid {

// SplitMix64 counter generator. The state is a plain 64-bit counter advanced
// by a fixed odd constant, so the i-th draw is a pure function of (seed, i)
// and identical on every platform. split(stream) derives an independent child
// generator by hashing the stream id into the seed, which lets per-tracklet
// or per-sample streams be drawn in any order.
class Prng {
  public:
    explicit Prng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // Unbiased-enough for our ranges (n << 2^64).
    uint64_t next_below(uint64_t n) { return n ? next_u64() % n : 0; }

    int next_int(int lo, int hi) {  // inclusive range
        return lo + static_cast<int>(next_below(static_cast<uint64_t>(hi - lo + 1)));
    }

    // Uniform in [0,1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0); }
    float next_float() { return static_cast<float>(next_double()); }

    float uniform(float lo, float hi) { return lo + (hi - lo) * next_float(); }

    bool bernoulli(double p) { return next_double() < p; }

    // Box-Muller; consumes two draws per pair, caching the second.
    float normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 1e-300) u1 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586 * u2;
        spare_ = static_cast<float>(r * std::sin(a));
        have_spare_ = true;
        return static_cast<float>(r * std::cos(a));
    }

    Prng split(uint64_t stream) const { return Prng(mix(state_ ^ mix(stream + 0x632BE59BD9B4E019ull))); }

    uint64_t state() const { return state_; }

  private:
    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    uint64_t state_ = 0;
    bool have_spare_ = false;
    float spare_ = 0.0f;
};

}  // namespace trackid
