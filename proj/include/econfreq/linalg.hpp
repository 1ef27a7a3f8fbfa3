#pragma once

#include <cassert>
#include <span>
#include <vector>

namespace econfreq {

/**
 * Solves (diag(d) + sigma * 1 1^T) x = r by Sherman-Morrison.
 *
 * Requires d_i > 0 and sigma >= 0, which makes the matrix SPD and the
 * denominator 1 + sigma * sum(1/d_i) at least 1.
 */
template <typename T>
std::vector<T> solve_diagonal_plus_ones(std::span<const T> d, T sigma, std::span<const T> r) {
    assert(d.size() == r.size());
    std::vector<T> x(d.size());
    T sum_inv = 0;
    T sum_y = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        x[i] = r[i] / d[i];
        sum_y += x[i];
        sum_inv += T(1) / d[i];
    }
    const T shift = sigma * sum_y / (T(1) + sigma * sum_inv);
    for (std::size_t i = 0; i < d.size(); ++i) x[i] -= shift / d[i];
    return x;
}

template <typename T>
std::vector<T> solve_diagonal_plus_ones(const std::vector<T>& d, T sigma, const std::vector<T>& r) {
    return solve_diagonal_plus_ones(std::span<const T>(d), sigma, std::span<const T>(r));
}

}  // namespace econfreq
