#pragma once

#include <algorithm>
#include <string>
#include <vector>

// Textbook definition, written without reference to the library: for every
// character of a, take the first unused equal character of b inside the
// window; count order disagreements among the matched characters.
inline double reference_jaro(const std::string& a, const std::string& b) {
    if (a == b) {
        return 1.0;
    }
    if (a.empty() || b.empty()) {
        return 0.0;
    }
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    int window = std::max(la, lb) / 2 - 1;
    if (window < 0) {
        window = 0;
    }
    std::vector<bool> used_a(la, false);
    std::vector<bool> used_b(lb, false);
    int m = 0;
    for (int i = 0; i < la; ++i) {
        for (int j = std::max(0, i - window); j <= std::min(lb - 1, i + window); ++j) {
            if (!used_b[j] && a[i] == b[j]) {
                used_a[i] = true;
                used_b[j] = true;
                ++m;
                break;
            }
        }
    }
    if (m == 0) {
        return 0.0;
    }
    std::string sa;
    std::string sb;
    for (int i = 0; i < la; ++i) {
        if (used_a[i]) sa += a[i];
    }
    for (int j = 0; j < lb; ++j) {
        if (used_b[j]) sb += b[j];
    }
    int half = 0;
    for (std::size_t k = 0; k < sa.size(); ++k) {
        if (sa[k] != sb[k]) ++half;
    }
    const double md = m;
    return (md / la + md / lb + (md - half / 2.0) / md) / 3.0;
}

inline double reference_jaro_winkler(const std::string& a, const std::string& b) {
    const double j = reference_jaro(a, b);
    std::size_t l = 0;
    while (l < 4 && l < a.size() && l < b.size() && a[l] == b[l]) {
        ++l;
    }
    return j + l * 0.1 * (1.0 - j);
}
