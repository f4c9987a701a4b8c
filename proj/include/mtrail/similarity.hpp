#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

namespace mtrail {

/// Similarity in [0, 1].
class SimilarityScore {
public:
    constexpr SimilarityScore() = default;
    constexpr explicit SimilarityScore(double value) : value_(std::clamp(value, 0.0, 1.0)) {}

    [[nodiscard]] constexpr double value() const noexcept { return value_; }

    friend constexpr auto operator<=>(SimilarityScore, SimilarityScore) = default;

private:
    double value_ = 0.0;
};

/// Jaro similarity over bytes, case-sensitive. Match window is
/// floor(max(|a|,|b|)/2) - 1, clamped at zero.
inline SimilarityScore jaro(std::string_view a, std::string_view b) {
    if (a == b) {
        return SimilarityScore(1.0);
    }
    if (a.empty() || b.empty()) {
        return SimilarityScore(0.0);
    }
    const std::ptrdiff_t la = static_cast<std::ptrdiff_t>(a.size());
    const std::ptrdiff_t lb = static_cast<std::ptrdiff_t>(b.size());
    const std::ptrdiff_t window = std::max<std::ptrdiff_t>(0, std::max(la, lb) / 2 - 1);

    // Positions of each byte value in b. For a fixed byte value the chosen
    // positions only move forward as i grows, so one cursor per value suffices.
    std::array<std::vector<std::ptrdiff_t>, 256> positions;
    for (std::ptrdiff_t j = 0; j < lb; ++j) {
        positions[static_cast<unsigned char>(b[j])].push_back(j);
    }
    std::array<std::size_t, 256> cursor{};
    std::vector<char> b_matched(static_cast<std::size_t>(lb), 0);
    std::vector<char> a_matched(static_cast<std::size_t>(la), 0);
    std::ptrdiff_t matches = 0;
    for (std::ptrdiff_t i = 0; i < la; ++i) {
        const auto c = static_cast<unsigned char>(a[i]);
        const auto lo = std::max<std::ptrdiff_t>(0, i - window);
        const auto hi = std::min(lb - 1, i + window);
        auto& pos = positions[c];
        auto& k = cursor[c];
        while (k < pos.size() && (pos[k] < lo || b_matched[static_cast<std::size_t>(pos[k])])) {
            ++k;
        }
        if (k < pos.size() && pos[k] <= hi) {
            b_matched[static_cast<std::size_t>(pos[k])] = 1;
            a_matched[static_cast<std::size_t>(i)] = 1;
            ++matches;
            ++k;
        }
    }
    if (matches == 0) {
        return SimilarityScore(0.0);
    }
    std::ptrdiff_t half_transpositions = 0;
    std::ptrdiff_t j = 0;
    for (std::ptrdiff_t i = 0; i < la; ++i) {
        if (!a_matched[static_cast<std::size_t>(i)]) {
            continue;
        }
        while (!b_matched[static_cast<std::size_t>(j)]) {
            ++j;
        }
        if (a[i] != b[j]) {
            ++half_transpositions;
        }
        ++j;
    }
    const double m = static_cast<double>(matches);
    const double t = static_cast<double>(half_transpositions) / 2.0;
    return SimilarityScore((m / static_cast<double>(la) + m / static_cast<double>(lb) + (m - t) / m) / 3.0);
}

inline constexpr double kWinklerScaling = 0.1;
inline constexpr std::size_t kWinklerPrefixCap = 4;

/// Jaro-Winkler: jaro + l * 0.1 * (1 - jaro), l = common prefix capped at 4.
inline SimilarityScore jaro_winkler(std::string_view a, std::string_view b) {
    const double base = jaro(a, b).value();
    std::size_t prefix = 0;
    const auto cap = std::min({a.size(), b.size(), kWinklerPrefixCap});
    while (prefix < cap && a[prefix] == b[prefix]) {
        ++prefix;
    }
    return SimilarityScore(base + static_cast<double>(prefix) * kWinklerScaling * (1.0 - base));
}

}  // namespace mtrail
