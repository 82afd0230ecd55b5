#pragma once

// Least-squares fit of payload = a * exp(b * assistance) + c to optimal
// (payload, assistance) points, by damped Gauss-Newton (Levenberg-Marquardt).

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "exo/error.hpp"

namespace exo::orf {

struct CurvePoint {
    double payload = 0.0;
    double assistance = 0.0;
};

struct ExpParams {
    double a = 1.0;
    double b = 1.0;
    double c = 0.0;

    double payload_at(double assistance) const { return a * std::exp(b * assistance) + c; }

    /// Inverse map; NaN where the payload is outside the curve's range.
    double assistance_at(double payload) const { return std::log((payload - c) / a) / b; }
};

struct ExpFit {
    ExpParams params;
    double residual_rms = 0.0;
    int iterations = 0;
    /// Normal matrix is close to singular at the solution (e.g. b -> 0).
    bool near_singular = false;
};

struct ExpFitOptions {
    ExpParams initial{1.0, 1.0, 0.0};
    int max_iterations = 500;
    double step_tolerance = 1e-10;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, ExpFit best) : Error(ErrorKind::Convergence, what), best_(best) {}
    const ExpFit& best_so_far() const noexcept { return best_; }

private:
    ExpFit best_;
};

namespace detail {

inline double sse(std::span<const CurvePoint> pts, const ExpParams& p)
{
    double s = 0.0;
    for (const auto& q : pts) {
        const double r = q.payload - p.payload_at(q.assistance);
        s += r * r;
    }
    return s;
}

inline bool normal_matrix_near_singular(std::span<const CurvePoint> pts, const ExpParams& p)
{
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    for (const auto& q : pts) {
        const double e = std::exp(p.b * q.assistance);
        const Eigen::Vector3d j(e, p.a * q.assistance * e, 1.0);
        jtj += j * j.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(jtj);
    const auto ev = es.eigenvalues();
    return !(ev(0) > 1e-12 * ev(2)) || std::fabs(p.b) < 1e-6;
}

} // namespace detail

inline ExpFit fit_exponential(std::span<const CurvePoint> pts, const ExpFitOptions& opt = {})
{
    require(pts.size() >= 3, ErrorKind::InsufficientData, "exponential fit needs at least 3 points");
    for (const auto& q : pts)
        require(std::isfinite(q.payload) && std::isfinite(q.assistance), ErrorKind::Validation,
                "non-finite curve point");

    ExpParams p = opt.initial;
    double cost = detail::sse(pts, p);
    double lambda = 1e-3;
    auto result = [&](int iters) {
        return ExpFit{p, std::sqrt(cost / static_cast<double>(pts.size())), iters,
                      detail::normal_matrix_near_singular(pts, p)};
    };

    for (int it = 1; it <= opt.max_iterations; ++it) {
        Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
        Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
        for (const auto& q : pts) {
            const double e = std::exp(p.b * q.assistance);
            const Eigen::Vector3d j(e, p.a * q.assistance * e, 1.0);
            const double r = q.payload - (p.a * e + p.c);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        if (cost == 0.0 || jtr.cwiseAbs().maxCoeff() == 0.0) return result(it);

        // Raise damping until the step lowers the cost.
        while (true) {
            Eigen::Matrix3d a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::Vector3d step = a.fullPivLu().solve(jtr);
            const ExpParams cand{p.a + step(0), p.b + step(1), p.c + step(2)};
            const double cand_cost = detail::sse(pts, cand);
            if (std::isfinite(cand_cost) && cand_cost <= cost) {
                p = cand;
                cost = cand_cost;
                lambda = std::max(lambda / 10.0, 1e-15);
                if (step.cwiseAbs().maxCoeff() < opt.step_tolerance) return result(it);
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e16) {
                // No descent direction left: a stationary point.
                return result(it);
            }
        }
    }
    throw ConvergenceError("exponential fit did not converge in " + std::to_string(opt.max_iterations) +
                               " iterations",
                           result(opt.max_iterations));
}

inline ExpFit fit_exponential(const std::vector<CurvePoint>& pts, const ExpFitOptions& opt = {})
{
    return fit_exponential(std::span<const CurvePoint>(pts), opt);
}

} // namespace exo::orf
