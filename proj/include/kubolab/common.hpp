#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kubolab {

inline constexpr const char* kVersion = "0.1.0";

/// Invalid user input or configuration. CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg, std::string field = {})
        : std::runtime_error(field.empty() ? msg : field + ": " + msg),
          field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Numerical failure (solver breakdown, under-resolved quadrature, ...). CLI exit code 2.
class NumericalError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A verification suite found a violated identity. CLI exit code 3.
class CheckFailure : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// FNV-1a, used for stable config hashes embedded in output metadata.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Provenance carried by every derived quantity.
struct RealizationMeta {
    std::uint64_t master_seed = 0;
    int realization_index = -1;
    std::uint64_t seed = 0;      // derived stream seed
    std::uint64_t spec_hash = 0; // hash of the generating configuration
};

/// Uniform binning of an interval [lo, hi) into `count` half-open cells.
///
/// When the grid is symmetric about zero, pair deposits go through
/// `mirror()` so that a mass placed at +nu and its partner at -nu land in
/// mirrored cells with bitwise-equal values. The negative half therefore
/// uses the mirrored edge convention rather than floor(); this is what makes
/// binned evenness exact instead of accurate-to-rounding.
struct BinGrid {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;

    BinGrid() = default;
    BinGrid(double lo_, double hi_, int count_) : lo(lo_), hi(hi_), count(count_) {
        if (!(hi > lo) || count < 1) throw ConfigError("invalid bin grid", "binning");
    }

    static BinGrid symmetric(double half_range, int count_) {
        return BinGrid(-half_range, half_range, count_);
    }

    double width() const { return (hi - lo) / count; }
    bool is_symmetric() const { return lo == -hi; }

    /// Cell index of x, clamped to [0, count-1]; -1 if x lies outside.
    int index(double x) const {
        if (x < lo || x >= hi) return -1;
        int i = static_cast<int>((x - lo) / width());
        return i < 0 ? 0 : (i >= count ? count - 1 : i);
    }
    int mirror(int i) const { return count - 1 - i; }

    double left_edge(int i) const { return lo + i * width(); }
    double right_edge(int i) const { return lo + (i + 1) * width(); }
    double center(int i) const { return lo + (i + 0.5) * width(); }

    std::vector<double> edges() const {
        std::vector<double> e(count + 1);
        for (int i = 0; i <= count; ++i) e[i] = lo + i * width();
        return e;
    }
};

} // namespace kubolab
