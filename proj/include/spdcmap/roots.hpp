#pragma once

// Bracketed scalar root finding: bisection to shrink the bracket, then
// safeguarded secant steps that fall back to bisection whenever the secant
// iterate leaves the current bracket.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spdcmap/error.hpp"

namespace spdcmap {

struct RootOptions {
    double x_tolerance = 1e-12;
    int max_iterations = 200;
    // bisect until the bracket is this fraction of its initial width
    double bisection_fraction = 1e-3;
};

struct RootResult {
    double x = 0.0;
    double f = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int iterations = 0;
};

template <class F>
RootResult bisect_secant(F&& f, double lo, double hi, const RootOptions& opt = {}) {
    if (lo > hi) std::swap(lo, hi);
    double flo = f(lo), fhi = f(hi);
    RootResult res;
    res.lo = lo;
    res.hi = hi;
    if (flo == 0.0) {
        res.x = lo;
        res.f = 0.0;
        return res;
    }
    if (fhi == 0.0) {
        res.x = hi;
        res.f = 0.0;
        return res;
    }
    if (!std::isfinite(flo) || !std::isfinite(fhi) || (flo > 0.0) == (fhi > 0.0))
        throw NoSolutionError("no sign change in bracket [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");

    const double switch_width = (hi - lo) * opt.bisection_fraction;
    int it = 0;
    auto shrink = [&](double x, double fx) {
        if ((fx > 0.0) == (flo > 0.0)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
    };

    while (hi - lo > switch_width && it < opt.max_iterations) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        ++it;
        if (fm == 0.0) return {mid, 0.0, lo, hi, it};
        shrink(mid, fm);
    }

    double x0 = lo, f0 = flo, x1 = hi, f1 = fhi;
    while (it < opt.max_iterations) {
        double x = (f1 != f0) ? x1 - f1 * (x1 - x0) / (f1 - f0) : 0.5 * (lo + hi);
        if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        const double fx = f(x);
        ++it;
        shrink(x, fx);
        x0 = x1;
        f0 = f1;
        x1 = x;
        f1 = fx;
        if (fx == 0.0 || std::abs(x1 - x0) <= opt.x_tolerance || hi - lo <= opt.x_tolerance) break;
    }
    res.lo = lo;
    res.hi = hi;
    res.iterations = it;
    // report whichever of the final iterate and bracket ends has the smallest residual
    res.x = x1;
    res.f = f1;
    if (std::abs(flo) < std::abs(res.f)) {
        res.x = lo;
        res.f = flo;
    }
    if (std::abs(fhi) < std::abs(res.f)) {
        res.x = hi;
        res.f = fhi;
    }
    return res;
}

}  // namespace spdcmap
