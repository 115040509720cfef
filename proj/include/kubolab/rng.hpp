#pragma once

#include <cstdint>

namespace kubolab {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}
} // namespace detail

/// Counter-based random stream keyed by (master seed, stream index).
///
/// Output i is a pure function of (key, i), so draws are independent of
/// evaluation order and identical across platforms and worker counts. The
/// generator is the SplitMix64 output function applied to a keyed counter
/// walk; statistical quality is ample for disorder sampling.
class CounterRng {
public:
    CounterRng(std::uint64_t master_seed, std::uint64_t stream)
        : key_(derive_key(master_seed, stream)) {}

    static std::uint64_t derive_key(std::uint64_t master_seed, std::uint64_t stream) {
        return detail::mix64(master_seed ^ detail::mix64(stream + 0x632be59bd9b4e019ull));
    }

    std::uint64_t next_u64() { return at(counter_++); }

    /// Random access: value of draw i without advancing state.
    std::uint64_t at(std::uint64_t i) const {
        return detail::mix64(key_ + i * 0x9e3779b97f4a7c15ull);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace kubolab
