#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "exo/error.hpp"
#include "exo/orf/surface.hpp"

namespace exo::orf {

/// Rectangular evaluation grid over (assistance, payload).
struct Grid {
    std::vector<double> assistance;
    std::vector<double> payload_kg;

    static Grid uniform(std::size_t n_assistance = 101, std::size_t n_payload = 101, const InputDomain& d = {})
    {
        require(n_assistance >= 2 && n_payload >= 2, ErrorKind::InvalidParameter, "grid needs >= 2 points per axis");
        Grid g;
        for (std::size_t i = 0; i < n_assistance; ++i)
            g.assistance.push_back(d.assistance_lo + (d.assistance_hi - d.assistance_lo) * static_cast<double>(i) /
                                                         static_cast<double>(n_assistance - 1));
        for (std::size_t j = 0; j < n_payload; ++j)
            g.payload_kg.push_back(d.payload_lo_kg + (d.payload_hi_kg - d.payload_lo_kg) * static_cast<double>(j) /
                                                         static_cast<double>(n_payload - 1));
        return g;
    }

    std::size_t size() const { return assistance.size() * payload_kg.size(); }
    bool operator==(const Grid&) const = default;
};

/// Values on a grid, payload-major: values[j * n_assistance + i].
struct GridFunction {
    Grid grid;
    std::vector<double> values;

    double at(std::size_t i_assistance, std::size_t j_payload) const
    {
        return values[j_payload * grid.assistance.size() + i_assistance];
    }
};

template <typename Surface>
GridFunction evaluate_on_grid(const Surface& s, const Grid& g)
{
    GridFunction f{g, {}};
    f.values.reserve(g.size());
    for (double p : g.payload_kg)
        for (double a : g.assistance) f.values.push_back(s.value(a, p));
    return f;
}

struct NormalizedGrid {
    GridFunction function;
    double lo = 0.0;
    double hi = 0.0;
    /// True when the input was constant; every value is then 0.5.
    bool degenerate = false;
};

inline bool is_degenerate_range(double lo, double hi)
{
    return !(hi - lo > 1e-12 * std::max(1.0, std::max(std::fabs(lo), std::fabs(hi))));
}

/// Min-max normalization of grid values to [0, 1].
inline NormalizedGrid normalize(const GridFunction& f)
{
    require(!f.values.empty(), ErrorKind::InsufficientData, "empty grid function");
    const auto [lo_it, hi_it] = std::minmax_element(f.values.begin(), f.values.end());
    NormalizedGrid out{f, *lo_it, *hi_it, is_degenerate_range(*lo_it, *hi_it)};
    for (double& v : out.function.values) v = out.degenerate ? 0.5 : (v - out.lo) / (out.hi - out.lo);
    return out;
}

inline void check_covers_domain(const Grid& g, const InputDomain& d)
{
    require(!g.assistance.empty() && !g.payload_kg.empty(), ErrorKind::Shape, "empty grid");
    const auto [amin, amax] = std::minmax_element(g.assistance.begin(), g.assistance.end());
    const auto [pmin, pmax] = std::minmax_element(g.payload_kg.begin(), g.payload_kg.end());
    require(*amin <= d.assistance_lo && *amax >= d.assistance_hi && *pmin <= d.payload_lo_kg &&
                *pmax >= d.payload_hi_kg,
            ErrorKind::Shape, "grid does not cover the optimization domain");
}

inline NormalizedGrid normalize_surface(const RepresentationSurface& s, const Grid& g)
{
    check_covers_domain(g, s.domain());
    return normalize(evaluate_on_grid(s, g));
}

/// Weights of the total function: emg - discomfort + preference.
struct TotalWeights {
    double emg = 0.6;
    double discomfort = 0.2;
    double preference = 0.2;
};

inline double combine_point(double emg, double dsc, double prf, const TotalWeights& w = {})
{
    return w.emg * emg - w.discomfort * dsc + w.preference * prf;
}

/// Pointwise total function of three aligned (normalized) grids.
inline GridFunction combine_total(const GridFunction& emg, const GridFunction& dsc, const GridFunction& prf,
                                  const TotalWeights& w = {})
{
    require(emg.grid == dsc.grid && emg.grid == prf.grid && emg.values.size() == emg.grid.size() &&
                dsc.values.size() == emg.values.size() && prf.values.size() == emg.values.size(),
            ErrorKind::Shape, "total function inputs are not on the same grid");
    GridFunction out{emg.grid, std::vector<double>(emg.values.size())};
    for (std::size_t k = 0; k < out.values.size(); ++k)
        out.values[k] = combine_point(emg.values[k], dsc.values[k], prf.values[k], w);
    return out;
}

/// A surface affinely rescaled by the min/max found on a grid.
class NormalizedSurface {
public:
    NormalizedSurface(const RepresentationSurface& s, const NormalizedGrid& n)
        : surface_(&s), lo_(n.lo), hi_(n.hi), degenerate_(n.degenerate) {}

    double value(double a, double p) const { return degenerate_ ? 0.5 : (surface_->value(a, p) - lo_) / (hi_ - lo_); }
    double d_assistance(double a, double p) const
    {
        return degenerate_ ? 0.0 : surface_->d_assistance(a, p) / (hi_ - lo_);
    }
    bool degenerate() const { return degenerate_; }

private:
    const RepresentationSurface* surface_;
    double lo_, hi_;
    bool degenerate_;
};

/// Continuous total function built from the three normalized surfaces;
/// offers the analytic assistance slope needed by the optimum search.
class TotalSurface {
public:
    TotalSurface(NormalizedSurface emg, NormalizedSurface dsc, NormalizedSurface prf, TotalWeights w = {})
        : emg_(emg), dsc_(dsc), prf_(prf), w_(w) {}

    double value(double a, double p) const
    {
        return combine_point(emg_.value(a, p), dsc_.value(a, p), prf_.value(a, p), w_);
    }
    double d_assistance(double a, double p) const
    {
        return combine_point(emg_.d_assistance(a, p), dsc_.d_assistance(a, p), prf_.d_assistance(a, p), w_);
    }

private:
    NormalizedSurface emg_, dsc_, prf_;
    TotalWeights w_;
};

} // namespace exo::orf
