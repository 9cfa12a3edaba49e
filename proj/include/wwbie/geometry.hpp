#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wwbie/quadrature.hpp"

namespace wwbie {

using Vec2 = Eigen::Vector2d;

enum class PartTag { free_surface, bottom, obstacle };

/// A smooth parametric boundary piece. The fluid-side normal is
/// normal_sign * (t2, -t1)/|t| where t is the tangent; every builder below
/// fixes normal_sign so the normal points into the fluid.
struct ParametricCurve {
    std::function<Vec2(double)> position;
    std::function<Vec2(double)> derivative;
    std::function<Vec2(double)> second_derivative;
    double s0 = 0.0, s1 = 1.0;
    PartTag tag = PartTag::obstacle;
    double normal_sign = 1.0;
    bool closed = false;
    std::vector<double> corners;  // interior params where the curve is only Lipschitz
};

using CurvePtr = std::shared_ptr<const ParametricCurve>;

inline CurvePtr make_segment(Vec2 p, Vec2 q, PartTag tag, double normal_sign) {
    auto c = std::make_shared<ParametricCurve>();
    c->position = [p, q](double s) -> Vec2 { return p + s * (q - p); };
    c->derivative = [p, q](double) -> Vec2 { return q - p; };
    c->second_derivative = [](double) -> Vec2 { return Vec2::Zero(); };
    c->s0 = 0.0;
    c->s1 = 1.0;
    c->tag = tag;
    c->normal_sign = normal_sign;
    return c;
}

/// Bottom height profile x1 -> x2. Profiles whose deviation from the flat
/// level falls below 1e-14 are clamped to exactly flat beyond flat_beyond.
struct BottomProfile {
    std::function<double(double)> height = [](double) { return -1.0; };
    std::function<double(double)> dheight = [](double) { return 0.0; };
    std::function<double(double)> d2height = [](double) { return 0.0; };
    double flat_beyond = 0.0;  // |s| past which the profile is exactly flat
    std::string name = "flat";
};

/// Wave-packet bump: height(s) = -1 + exp(-s^2/4) sin(2 pi s / lambda).
inline BottomProfile build_bump_topography(double lambda) {
    if (!(lambda > 0)) throw std::domain_error("bump topography: lambda must be positive");
    BottomProfile prof;
    const double w = 2.0 * M_PI / lambda;
    const double s_flat = std::sqrt(4.0 * std::log(1e14));
    prof.flat_beyond = s_flat;
    prof.name = "bump";
    prof.height = [w, s_flat](double s) {
        if (std::abs(s) > s_flat) return -1.0;
        return -1.0 + std::exp(-s * s / 4.0) * std::sin(w * s);
    };
    prof.dheight = [w, s_flat](double s) {
        if (std::abs(s) > s_flat) return 0.0;
        double e = std::exp(-s * s / 4.0);
        return e * (-0.5 * s * std::sin(w * s) + w * std::cos(w * s));
    };
    prof.d2height = [w, s_flat](double s) {
        if (std::abs(s) > s_flat) return 0.0;
        double e = std::exp(-s * s / 4.0);
        return e * ((0.25 * s * s - 0.5 - w * w) * std::sin(w * s) - s * w * std::cos(w * s));
    };
    return prof;
}

/// Smooth depth step: height(s) = -1 + (dd/2)(1 + tanh(5 s)); depth 1 on the
/// left, 1 - dd on the right.
inline BottomProfile build_step_topography(double delta_d) {
    if (!(delta_d > 0.0 && delta_d < 1.0))
        throw std::domain_error("step topography: need 0 < delta_d < 1");
    BottomProfile prof;
    const double s_flat = 3.7;  // |tanh(5s)| is within 2e-16 of 1 beyond
    prof.flat_beyond = s_flat;
    prof.name = "step";
    prof.height = [delta_d, s_flat](double s) {
        if (s > s_flat) return -1.0 + delta_d;
        if (s < -s_flat) return -1.0;
        return -1.0 + 0.5 * delta_d * (1.0 + std::tanh(5.0 * s));
    };
    prof.dheight = [delta_d, s_flat](double s) {
        if (std::abs(s) > s_flat) return 0.0;
        double t = std::tanh(5.0 * s);
        return 2.5 * delta_d * (1.0 - t * t);
    };
    prof.d2height = [delta_d, s_flat](double s) {
        if (std::abs(s) > s_flat) return 0.0;
        double t = std::tanh(5.0 * s);
        return -25.0 * delta_d * t * (1.0 - t * t);
    };
    return prof;
}

inline CurvePtr make_bottom_curve(const BottomProfile& prof, double x_left, double x_right) {
    auto c = std::make_shared<ParametricCurve>();
    c->position = [prof](double s) -> Vec2 { return Vec2(s, prof.height(s)); };
    c->derivative = [prof](double s) -> Vec2 { return Vec2(1.0, prof.dheight(s)); };
    c->second_derivative = [prof](double s) -> Vec2 { return Vec2(0.0, prof.d2height(s)); };
    c->s0 = x_left;
    c->s1 = x_right;
    c->tag = PartTag::bottom;
    c->normal_sign = -1.0;  // upward into the fluid
    return c;
}

/// Closed jellyfish curve r(s)(cos s, sin s) with r = 1 + 0.3 cos(4s + 2 sin s),
/// scaled, rotated and translated.
inline CurvePtr build_jellyfish(Vec2 center, double scale, double rotation) {
    if (!(scale > 0)) throw std::domain_error("jellyfish: scale must be positive");
    auto c = std::make_shared<ParametricCurve>();
    const double cr = std::cos(rotation), sr = std::sin(rotation);
    auto rot = [cr, sr](Vec2 v) -> Vec2 {
        return Vec2(cr * v.x() - sr * v.y(), sr * v.x() + cr * v.y());
    };
    auto radius = [](double s) { return 1.0 + 0.3 * std::cos(4.0 * s + 2.0 * std::sin(s)); };
    auto dradius = [](double s) {
        return -0.3 * std::sin(4.0 * s + 2.0 * std::sin(s)) * (4.0 + 2.0 * std::cos(s));
    };
    auto d2radius = [](double s) {
        double ph = 4.0 * s + 2.0 * std::sin(s);
        double dph = 4.0 + 2.0 * std::cos(s);
        return -0.3 * (std::cos(ph) * dph * dph - std::sin(ph) * 2.0 * std::sin(s));
    };
    c->position = [=](double s) -> Vec2 {
        double r = radius(s);
        return center + scale * rot(Vec2(r * std::cos(s), r * std::sin(s)));
    };
    c->derivative = [=](double s) -> Vec2 {
        double r = radius(s), dr = dradius(s);
        Vec2 v(dr * std::cos(s) - r * std::sin(s), dr * std::sin(s) + r * std::cos(s));
        return scale * rot(v);
    };
    c->second_derivative = [=](double s) -> Vec2 {
        double r = radius(s), dr = dradius(s), d2r = d2radius(s);
        Vec2 v((d2r - r) * std::cos(s) - 2.0 * dr * std::sin(s),
               (d2r - r) * std::sin(s) + 2.0 * dr * std::cos(s));
        return scale * rot(v);
    };
    c->s0 = 0.0;
    c->s1 = 2.0 * M_PI;
    c->tag = PartTag::obstacle;
    c->normal_sign = 1.0;  // counterclockwise, fluid outside
    c->closed = true;
    return c;
}

/// Lower semicircle of a surface-piercing body, theta from pi to 2 pi.
inline CurvePtr make_piercing_arc(double xc, double radius) {
    auto c = std::make_shared<ParametricCurve>();
    c->position = [xc, radius](double t) -> Vec2 {
        return Vec2(xc + radius * std::cos(t), radius * std::sin(t));
    };
    c->derivative = [radius](double t) -> Vec2 {
        return Vec2(-radius * std::sin(t), radius * std::cos(t));
    };
    c->second_derivative = [xc, radius](double t) -> Vec2 {
        return Vec2(-radius * std::cos(t), -radius * std::sin(t));
    };
    c->s0 = M_PI;
    c->s1 = 2.0 * M_PI;
    c->tag = PartTag::obstacle;
    c->normal_sign = 1.0;  // radially outward, fluid outside the body
    return c;
}

/// Two piercing semicircles of radius 1/4 centered at +-3/4. The free surface
/// junctions at +-1/2 and +-1 follow from the circle-line intersections.
struct PiercingPair {
    double radius = 0.25;
    double center_offset = 0.75;
    std::array<CurvePtr, 2> arcs;
    std::array<double, 4> junctions{};  // ascending surface abscissae
};

inline PiercingPair build_piercing_pair() {
    PiercingPair pp;
    pp.arcs = {make_piercing_arc(-pp.center_offset, pp.radius),
               make_piercing_arc(pp.center_offset, pp.radius)};
    pp.junctions = {-pp.center_offset - pp.radius, -pp.center_offset + pp.radius,
                    pp.center_offset - pp.radius, pp.center_offset + pp.radius};
    return pp;
}

/// Columnar polyline file: one "s x1 x2" triple per line, '#' comments.
/// Loaded as an obstacle; vertices become corner parameters.
inline CurvePtr load_polyline(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("polyline: cannot open " + file);
    auto svals = std::make_shared<std::vector<double>>();
    auto pts = std::make_shared<std::vector<Vec2>>();
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double s, x, y;
        if (ls >> s >> x >> y) {
            if (!svals->empty() && s <= svals->back())
                throw std::runtime_error("polyline: parameter column must be increasing");
            svals->push_back(s);
            pts->push_back(Vec2(x, y));
        }
    }
    if (svals->size() < 2) throw std::runtime_error("polyline: need at least two points");
    auto locate = [svals](double s) {
        auto it = std::upper_bound(svals->begin(), svals->end(), s);
        std::size_t i = (it == svals->begin()) ? 1 : std::size_t(it - svals->begin());
        return std::min(i, svals->size() - 1);
    };
    auto c = std::make_shared<ParametricCurve>();
    c->position = [svals, pts, locate](double s) -> Vec2 {
        std::size_t i = locate(s);
        double t = (s - (*svals)[i - 1]) / ((*svals)[i] - (*svals)[i - 1]);
        return (*pts)[i - 1] + t * ((*pts)[i] - (*pts)[i - 1]);
    };
    c->derivative = [svals, pts, locate](double s) -> Vec2 {
        std::size_t i = locate(s);
        return ((*pts)[i] - (*pts)[i - 1]) / ((*svals)[i] - (*svals)[i - 1]);
    };
    c->second_derivative = [](double) -> Vec2 { return Vec2::Zero(); };
    c->s0 = svals->front();
    c->s1 = svals->back();
    c->tag = PartTag::obstacle;
    c->normal_sign = 1.0;
    c->closed = (pts->front() - pts->back()).norm() < 1e-12;
    c->corners.assign(svals->begin() + 1, svals->end() - 1);
    return c;
}

/// One boundary element: the restriction of a parent curve to [p0,p1],
/// reparametrized to the reference segment [0,1].
struct Panel {
    CurvePtr curve;
    double p0 = 0.0, p1 = 1.0;
    PartTag tag = PartTag::obstacle;
    double length = 0.0;
    Vec2 start, end;

    double param(double u) const { return p0 + (p1 - p0) * u; }
    Vec2 chi(double u) const { return curve->position(param(u)); }
    Vec2 dchi(double u) const { return (p1 - p0) * curve->derivative(param(u)); }
    Vec2 d2chi(double u) const {
        return (p1 - p0) * (p1 - p0) * curve->second_derivative(param(u));
    }
    Vec2 normal(double u) const {
        Vec2 t = curve->derivative(param(u));
        double n = t.norm();
        return curve->normal_sign * Vec2(t.y(), -t.x()) / n;
    }
};

inline double curve_arclength(const ParametricCurve& c, double sa, double sb,
                              double tol = 1e-12) {
    auto speed = [&c](double s) { return c.derivative(s).norm(); };
    return adaptive_integrate(speed, sa, sb, tol * std::max(1.0, std::abs(sb - sa)));
}

struct BoundaryMesh {
    std::vector<Panel> panels;
    double truncation = 0.0;
    std::vector<Vec2> corners;          // junctions and Lipschitz points of the curve
    std::vector<std::string> warnings;  // geometry diagnostics collected at build time
};

/// Splits a curve into panels of arclength close to h. Panel boundaries are
/// placed exactly at the supplied parameter breakpoints (plus the curve's own
/// corners), so no panel straddles a corner or a PML breakpoint.
inline std::vector<Panel> panelize_curve(const CurvePtr& curve, double h,
                                         std::vector<double> param_breaks = {}) {
    if (!(h > 0)) throw std::domain_error("panelize: h must be positive");
    for (double b : param_breaks)
        if (b < curve->s0 - 1e-12 || b > curve->s1 + 1e-12)
            throw std::domain_error("panelize: breakpoint outside curve range");
    param_breaks.insert(param_breaks.end(), curve->corners.begin(), curve->corners.end());
    param_breaks.push_back(curve->s0);
    param_breaks.push_back(curve->s1);
    std::sort(param_breaks.begin(), param_breaks.end());
    param_breaks.erase(std::unique(param_breaks.begin(), param_breaks.end(),
                                   [](double a, double b) { return std::abs(a - b) < 1e-13; }),
                       param_breaks.end());

    std::vector<Panel> panels;
    for (std::size_t i = 0; i + 1 < param_breaks.size(); ++i) {
        double sa = std::max(param_breaks[i], curve->s0);
        double sb = std::min(param_breaks[i + 1], curve->s1);
        if (sb - sa < 1e-13) continue;
        double piece_len = curve_arclength(*curve, sa, sb);
        if (piece_len < 1e-13) continue;
        int n = std::max(1, int(std::lround(piece_len / h)));
        double prev = sa;
        for (int j = 1; j <= n; ++j) {
            double s_hi = sb;
            if (j < n) {
                // bisect for the parameter advancing one panel of arclength
                double target = piece_len / n;
                double lo = prev, hi = sb;
                for (int it = 0; it < 60; ++it) {
                    double mid = 0.5 * (lo + hi);
                    (curve_arclength(*curve, prev, mid, 1e-10) < target ? lo : hi) = mid;
                }
                s_hi = 0.5 * (lo + hi);
            }
            Panel p;
            p.curve = curve;
            p.p0 = prev;
            p.p1 = s_hi;
            p.tag = curve->tag;
            p.length = curve_arclength(*curve, prev, s_hi);
            p.start = curve->position(prev);
            p.end = curve->position(s_hi);
            panels.push_back(std::move(p));
            prev = s_hi;
        }
    }
    return panels;
}

/// Specification of a truncated strip geometry: free surface and bottom over
/// |x1| < M (or [0,M] with a lateral wall), canonical obstacles, and the PML
/// breakpoints that panel boundaries must honor.
struct StripSpec {
    double M = 0.0;
    double depth = 1.0;
    double h = 0.1;
    bool wall_at_zero = false;
    BottomProfile bottom;
    std::vector<CurvePtr> obstacles;
    bool piercing = false;
    std::vector<double> breakpoints;  // positive abscissae, e.g. {a} or {a,b}
};

inline BoundaryMesh build_strip_mesh(const StripSpec& spec) {
    if (!(spec.M > 0)) throw std::domain_error("strip mesh: M must be positive");
    BoundaryMesh mesh;
    mesh.truncation = spec.M;
    const double x_left = spec.wall_at_zero ? 0.0 : -spec.M;

    auto breaks_in = [&](double lo, double hi) {
        std::vector<double> r;
        for (double b : spec.breakpoints)
            for (double s : {b, -b})
                if (s > lo + 1e-13 && s < hi - 1e-13) r.push_back(s);
        std::sort(r.begin(), r.end());
        return r;
    };

    // free surface, possibly interrupted by piercing bodies
    std::vector<std::pair<double, double>> surface{{x_left, spec.M}};
    PiercingPair pp;
    if (spec.piercing) {
        pp = build_piercing_pair();
        if (spec.wall_at_zero)
            throw std::domain_error("strip mesh: piercing pair needs a two-sided strip");
        surface = {{x_left, pp.junctions[0]},
                   {pp.junctions[1], pp.junctions[2]},
                   {pp.junctions[3], spec.M}};
        for (double j : pp.junctions) mesh.corners.push_back(Vec2(j, 0.0));
    }
    for (auto [lo, hi] : surface) {
        auto seg = make_segment(Vec2(lo, 0.0), Vec2(hi, 0.0), PartTag::free_surface, 1.0);
        std::vector<double> br;
        for (double b : breaks_in(lo, hi)) br.push_back((b - lo) / (hi - lo));
        auto panels = panelize_curve(seg, spec.h, br);
        mesh.panels.insert(mesh.panels.end(), panels.begin(), panels.end());
    }

    // bottom profile across the full truncated range
    {
        auto bc = make_bottom_curve(spec.bottom, x_left, spec.M);
        auto panels = panelize_curve(bc, spec.h, breaks_in(x_left, spec.M));
        mesh.panels.insert(mesh.panels.end(), panels.begin(), panels.end());
    }

    // lateral wall for the wavemaker
    if (spec.wall_at_zero) {
        auto wall = make_segment(Vec2(0.0, spec.bottom.height(0.0)), Vec2(0.0, 0.0),
                                 PartTag::obstacle, 1.0);
        auto panels = panelize_curve(wall, spec.h);
        mesh.panels.insert(mesh.panels.end(), panels.begin(), panels.end());
        mesh.corners.push_back(Vec2(0.0, 0.0));
        mesh.corners.push_back(Vec2(0.0, spec.bottom.height(0.0)));
    }

    if (spec.piercing)
        for (const auto& arc : pp.arcs) {
            auto panels = panelize_curve(arc, spec.h);
            mesh.panels.insert(mesh.panels.end(), panels.begin(), panels.end());
        }

    for (const auto& obs : spec.obstacles) {
        auto panels = panelize_curve(obs, spec.h);
        mesh.panels.insert(mesh.panels.end(), panels.begin(), panels.end());
        for (double cp : obs->corners) mesh.corners.push_back(obs->position(cp));
    }

    // diagnostics: the conormal identity A n = tau' n assumes panels inside
    // the PML are horizontal
    if (!spec.breakpoints.empty()) {
        double a = *std::min_element(spec.breakpoints.begin(), spec.breakpoints.end());
        int nonflat = 0;
        double worst = 0.0;
        for (const auto& p : mesh.panels) {
            if (std::min(std::abs(p.start.x()), std::abs(p.end.x())) < a - 1e-12) continue;
            Vec2 t = p.dchi(0.5);
            double slope = std::abs(t.y()) / t.norm();
            if (slope > 1e-12) {
                ++nonflat;
                worst = std::max(worst, slope);
            }
        }
        if (nonflat > 0)
            mesh.warnings.push_back("non-flat boundary inside the PML region: " +
                                    std::to_string(nonflat) + " panels, max slope " +
                                    std::to_string(worst));
        for (const auto& obs : spec.obstacles) {
            double reach = 0.0;
            for (int i = 0; i <= 16; ++i) {
                double s = obs->s0 + (obs->s1 - obs->s0) * i / 16.0;
                reach = std::max(reach, std::abs(obs->position(s).x()));
            }
            if (reach >= a)
                mesh.warnings.push_back("obstacle extends past the PML start |x1| = " +
                                        std::to_string(a));
        }
    }
    return mesh;
}

/// Plain flat strip of unit depth (optionally with the wavemaker wall).
inline BoundaryMesh build_flat_strip(double M, double h,
                                     std::vector<double> breakpoints = {},
                                     bool wall_at_zero = false, double depth = 1.0) {
    StripSpec spec;
    spec.M = M;
    spec.h = h;
    spec.depth = depth;
    spec.wall_at_zero = wall_at_zero;
    spec.breakpoints = std::move(breakpoints);
    if (depth != 1.0) {
        BottomProfile prof;
        prof.name = "flat";
        prof.height = [depth](double) { return -depth; };
        spec.bottom = prof;
    }
    return build_strip_mesh(spec);
}

}  // namespace wwbie
