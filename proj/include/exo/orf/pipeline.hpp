#pragma once

// Full optimization-space pipeline: per-metric surfaces, normalized grids,
// total function, optimal-assistance curve and its exponential fit.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exo/orf/discomfort.hpp"
#include "exo/orf/exp_fit.hpp"
#include "exo/orf/grid.hpp"
#include "exo/orf/optimum.hpp"
#include "exo/orf/samples.hpp"
#include "exo/orf/surface.hpp"

namespace exo::orf {

struct PipelineOptions {
    FitOptions fit{};
    TotalWeights weights{};
    std::size_t grid_assistance = 101;
    std::size_t grid_payload = 101;
    OptimumOptions optimum{};
};

struct PipelineResult {
    std::map<MetricKind, RepresentationSurface> surfaces;
    std::map<MetricKind, NormalizedGrid> normalized;
    GridFunction total;
    std::vector<OptimalPoint> curve;
    /// Exponential fit over the interior optima, payload in normalized units.
    std::optional<ExpFit> fit;
    std::string fit_note;
};

inline std::vector<PerfSample> discomfort_samples(const std::vector<QuestionnaireResponse>& responses)
{
    std::vector<PerfSample> out;
    out.reserve(responses.size());
    for (const auto& r : responses) out.push_back({r.assistance, r.payload_kg, score_discomfort(r)});
    return out;
}

/// Needs samples for emg, discomfort and preference.
inline PipelineResult run_pipeline(const std::map<MetricKind, std::vector<PerfSample>>& samples,
                                   const PipelineOptions& opt = {})
{
    PipelineResult r;
    const Grid grid = Grid::uniform(opt.grid_assistance, opt.grid_payload, opt.fit.domain);
    for (MetricKind k : {MetricKind::Emg, MetricKind::Discomfort, MetricKind::Preference}) {
        const auto it = samples.find(k);
        require(it != samples.end() && !it->second.empty(), ErrorKind::InsufficientData,
                "no samples for metric " + std::string(to_string(k)));
        const auto& s = r.surfaces.emplace(k, fit_surface(k, it->second, opt.fit)).first->second;
        r.normalized.emplace(k, normalize_surface(s, grid));
    }
    r.total = combine_total(r.normalized.at(MetricKind::Emg).function,
                            r.normalized.at(MetricKind::Discomfort).function,
                            r.normalized.at(MetricKind::Preference).function, opt.weights);

    auto ns = [&](MetricKind k) { return NormalizedSurface(r.surfaces.at(k), r.normalized.at(k)); };
    const TotalSurface total(ns(MetricKind::Emg), ns(MetricKind::Discomfort), ns(MetricKind::Preference),
                             opt.weights);
    OptimumOptions oo = opt.optimum;
    oo.assistance_lo = opt.fit.domain.assistance_lo;
    oo.assistance_hi = opt.fit.domain.assistance_hi;
    r.curve = optimal_assistance(total, grid.payload_kg, oo);

    std::vector<CurvePoint> pts;
    for (const auto& p : r.curve)
        if (!p.boundary) pts.push_back({opt.fit.domain.norm_payload(p.payload_kg), p.assistance});
    if (pts.size() < 3) {
        r.fit_note = "fewer than 3 interior optima; exponential fit skipped";
        return r;
    }
    try {
        r.fit = fit_exponential(pts);
    } catch (const ConvergenceError& e) {
        r.fit = e.best_so_far();
        r.fit_note = e.what();
    }
    return r;
}

} // namespace exo::orf
