#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <vector>

#include "exo/error.hpp"

namespace exo::orf {

/// Anything with a value and an analytic assistance slope.
template <typename S>
concept SlicedSurface = requires(const S& s, double a, double p) {
    { s.value(a, p) } -> std::convertible_to<double>;
    { s.d_assistance(a, p) } -> std::convertible_to<double>;
};

struct OptimalPoint {
    double payload_kg = 0.0;
    double assistance = 0.0;
    double value = 0.0;
    /// No interior stationary maximum; assistance is the better boundary.
    bool boundary = false;
};

struct OptimumOptions {
    int brackets = 64;
    double assistance_lo = 0.0;
    double assistance_hi = 1.0;
    double tolerance = 1e-12;
};

namespace detail {

template <SlicedSurface S>
double bisect_root(const S& s, double p, double lo, double hi, double tol)
{
    // Invariant: slope(lo) > 0 > slope(hi).
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double d = s.d_assistance(mid, p);
        if (d == 0.0) return mid;
        (d > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// Optimal assistance at one payload: the stationary maximum of the slice
/// with the highest value (lowest assistance on ties), or the better
/// boundary when the slice has no interior maximum.
template <SlicedSurface S>
OptimalPoint optimal_assistance(const S& s, double payload_kg, const OptimumOptions& opt = {})
{
    require(opt.brackets >= 2 && opt.assistance_hi > opt.assistance_lo, ErrorKind::InvalidParameter,
            "invalid optimum search range");
    const int m = opt.brackets;
    auto node = [&](int i) {
        return opt.assistance_lo + (opt.assistance_hi - opt.assistance_lo) * static_cast<double>(i) / m;
    };
    std::vector<double> slope(static_cast<std::size_t>(m) + 1);
    for (int i = 0; i <= m; ++i) slope[static_cast<std::size_t>(i)] = s.d_assistance(node(i), payload_kg);

    std::vector<double> roots;
    for (int i = 0; i < m; ++i) {
        const double d0 = slope[static_cast<std::size_t>(i)];
        const double d1 = slope[static_cast<std::size_t>(i) + 1];
        if (d0 > 0.0 && d1 < 0.0) {
            roots.push_back(detail::bisect_root(s, payload_kg, node(i), node(i + 1), opt.tolerance));
        } else if (d0 > 0.0 && d1 == 0.0 && i + 1 < m && slope[static_cast<std::size_t>(i) + 2] < 0.0) {
            roots.push_back(node(i + 1));
        }
    }

    OptimalPoint best{payload_kg, 0.0, 0.0, false};
    bool have = false;
    for (double r : roots) {
        const double v = s.value(r, payload_kg);
        if (!have || v > best.value || (v == best.value && r < best.assistance)) {
            best.assistance = r;
            best.value = v;
            have = true;
        }
    }
    if (have) return best;

    const double v_lo = s.value(opt.assistance_lo, payload_kg);
    const double v_hi = s.value(opt.assistance_hi, payload_kg);
    const bool take_hi = v_hi > v_lo;
    return {payload_kg, take_hi ? opt.assistance_hi : opt.assistance_lo, take_hi ? v_hi : v_lo, true};
}

/// One optimum per payload slice, sorted by payload.
template <SlicedSurface S>
std::vector<OptimalPoint> optimal_assistance(const S& s, std::vector<double> payload_slices_kg,
                                             const OptimumOptions& opt = {})
{
    std::sort(payload_slices_kg.begin(), payload_slices_kg.end());
    std::vector<OptimalPoint> out;
    out.reserve(payload_slices_kg.size());
    for (double p : payload_slices_kg) out.push_back(optimal_assistance(s, p, opt));
    return out;
}

} // namespace exo::orf
