#pragma once

// Interval type-2 fuzzy trust evaluation: behavior evidence -> trust value in [0,1].
// Pipeline: fuzzify each misbehavior rate against Low/Medium/High IT2 sets,
// fire all 27 rules with the minimum t-norm, Karnik-Mendel type reduction,
// midpoint defuzzification.

#include <algorithm>
#include <array>
#include <numeric>
#include <span>
#include <stdexcept>

#include "gantrust/core.hpp"

namespace gantrust {

enum class BehaviorKind { TimelyForward, Drop, Delay, Tamper };

struct BehaviorOutcome {
    BehaviorKind kind = BehaviorKind::TimelyForward;
    int round = 0;
};

struct TrustAttributes {
    double drop_rate = 0.0;
    double delay_rate = 0.0;
    double tamper_rate = 0.0;
};

// Rates over one shared evidence window, most recent `window_len` behaviors.
inline TrustAttributes compute_trust_attributes(std::span<const BehaviorOutcome> window,
                                                std::size_t window_len) {
    if (window.empty()) throw std::invalid_argument("compute_trust_attributes: no evidence");
    if (window.size() > window_len)
        throw std::invalid_argument("compute_trust_attributes: window exceeds configured length");
    double n = static_cast<double>(window.size());
    TrustAttributes t;
    for (const auto& o : window) {
        switch (o.kind) {
            case BehaviorKind::Drop: t.drop_rate += 1.0; break;
            case BehaviorKind::Delay: t.delay_rate += 1.0; break;
            case BehaviorKind::Tamper: t.tamper_rate += 1.0; break;
            case BehaviorKind::TimelyForward: break;
        }
    }
    t.drop_rate /= n;
    t.delay_rate /= n;
    t.tamper_rate /= n;
    return t;
}

enum class AttrGrade { Low, Medium, High };

// Piecewise-linear trapezoid over [0,1], breakpoints (a,b,c,d) non-decreasing.
struct Trapezoid {
    double a = 0, b = 0, c = 0, d = 0;

    double operator()(double x) const {
        if (x < a || x > d) return 0.0;
        if (x < b) return (x - a) / (b - a);  // a < b here since a <= x < b
        if (x <= c) return 1.0;
        if (c == d) return 1.0;  // right shoulder at the boundary
        return (d - x) / (d - c);
    }

    bool monotone() const { return a <= b && b <= c && c <= d; }
};

struct IT2FuzzySet {
    AttrGrade label = AttrGrade::Low;
    Trapezoid upper;
    Trapezoid lower;
};

struct MembershipInterval {
    double lower = 0.0;
    double upper = 0.0;
};

inline MembershipInterval fuzzify(double x, const IT2FuzzySet& set) {
    if (x < 0.0 || x > 1.0) throw std::domain_error("fuzzify: attribute outside [0,1]");
    return {set.lower(x), set.upper(x)};
}

struct FuzzyRule {
    AttrGrade drop = AttrGrade::Low;
    AttrGrade delay = AttrGrade::Low;
    AttrGrade tamper = AttrGrade::Low;
    double consequent = 1.0;
};

struct FiredRule {
    MembershipInterval firing;
    double consequent = 0.0;
};

// Minimum t-norm over the three antecedent membership intervals.
inline FiredRule fire_rule(const FuzzyRule& rule, const std::array<MembershipInterval, 3>& memb) {
    FiredRule f;
    f.firing.lower = std::min({memb[0].lower, memb[1].lower, memb[2].lower});
    f.firing.upper = std::min({memb[0].upper, memb[1].upper, memb[2].upper});
    f.consequent = rule.consequent;
    return f;
}

struct NoRuleFired : std::runtime_error {
    NoRuleFired() : std::runtime_error("no rule fired") {}
};

namespace detail {

struct KmPoint {
    double y;
    double lo;
    double hi;
};

inline double weighted_avg(const std::vector<KmPoint>& p, std::size_t split, bool upper_first) {
    // upper_first: use hi weights for indices <= split, lo above (left endpoint);
    // otherwise lo below, hi above (right endpoint).
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double w = (i <= split) == upper_first ? p[i].hi : p[i].lo;
        num += w * p[i].y;
        den += w;
    }
    return num / den;
}

inline double km_endpoint(const std::vector<KmPoint>& pts, bool left, double tol) {
    const std::size_t n = pts.size();
    if (n == 1) return pts[0].y;
    // Start from the midpoint weighting, then iterate the switch index.
    double num = 0.0, den = 0.0;
    for (const auto& p : pts) {
        double w = 0.5 * (p.lo + p.hi);
        num += w * p.y;
        den += w;
    }
    double y = num / den;
    for (std::size_t iter = 0; iter < n + 2; ++iter) {
        std::size_t k = 0;
        while (k + 2 < n && pts[k + 1].y <= y) ++k;
        double next = weighted_avg(pts, k, left);
        if (std::abs(next - y) <= tol) return next;
        y = next;
    }
    return y;
}

}  // namespace detail

// Karnik-Mendel center-of-sets bounds of sum(f_i*y_i)/sum(f_i) with f_i in
// [lower_i, upper_i]. Rules with zero upper firing cannot influence the
// bounds and are dropped up front.
inline std::pair<double, double> type_reduce_km(std::span<const MembershipInterval> firings,
                                                std::span<const double> consequents,
                                                double tol = 1e-12) {
    if (firings.size() != consequents.size() || firings.empty())
        throw std::invalid_argument("type_reduce_km: mismatched or empty inputs");
    std::vector<detail::KmPoint> pts;
    pts.reserve(firings.size());
    for (std::size_t i = 0; i < firings.size(); ++i) {
        if (firings[i].upper > 0.0)
            pts.push_back({consequents[i], firings[i].lower, firings[i].upper});
    }
    if (pts.empty()) throw NoRuleFired{};
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.y < b.y; });
    double yl = detail::km_endpoint(pts, true, tol);
    double yr = detail::km_endpoint(pts, false, tol);
    return {yl, yr};
}

struct TrustValue {
    double value = 0.5;
    int round = 0;
    bool degenerate = false;  // set when no rule fired and the neutral value was substituted
};

inline TrustValue defuzzify(double y_left, double y_right, int round = 0) {
    if (y_left > y_right) throw std::invalid_argument("defuzzify: inverted interval");
    return {0.5 * (y_left + y_right), round, false};
}

struct FuzzyModel {
    IT2FuzzySet low, medium, high;
    double weight_drop = 0.35;
    double weight_delay = 0.25;
    double weight_tamper = 0.40;
    std::vector<FuzzyRule> rules;  // all 27 antecedent combinations

    static double grade_value(AttrGrade g) {
        switch (g) {
            case AttrGrade::Low: return 0.0;
            case AttrGrade::Medium: return 0.5;
            case AttrGrade::High: return 1.0;
        }
        return 0.0;
    }

    void rebuild_rules() {
        rules.clear();
        rules.reserve(27);
        constexpr std::array<AttrGrade, 3> grades{AttrGrade::Low, AttrGrade::Medium,
                                                  AttrGrade::High};
        for (AttrGrade gd : grades)
            for (AttrGrade gy : grades)
                for (AttrGrade gt : grades) {
                    FuzzyRule r;
                    r.drop = gd;
                    r.delay = gy;
                    r.tamper = gt;
                    r.consequent = 1.0 - (weight_drop * grade_value(gd) +
                                          weight_delay * grade_value(gy) +
                                          weight_tamper * grade_value(gt));
                    rules.push_back(r);
                }
    }

    static FuzzyModel defaults() {
        FuzzyModel m;
        m.low = {AttrGrade::Low, {0.0, 0.0, 0.20, 0.45}, {0.0, 0.0, 0.15, 0.35}};
        m.medium = {AttrGrade::Medium, {0.20, 0.45, 0.55, 0.80}, {0.30, 0.48, 0.52, 0.70}};
        m.high = {AttrGrade::High, {0.55, 0.80, 1.0, 1.0}, {0.65, 0.85, 1.0, 1.0}};
        m.rebuild_rules();
        return m;
    }

    const IT2FuzzySet& set_for(AttrGrade g) const {
        switch (g) {
            case AttrGrade::Low: return low;
            case AttrGrade::Medium: return medium;
            case AttrGrade::High: return high;
        }
        return low;
    }
};

// Rejects models whose membership functions are malformed or whose lower MF
// escapes the upper one (checked on a 1e-3 grid).
inline void validate_fuzzy_model(const FuzzyModel& m) {
    for (const IT2FuzzySet* s : {&m.low, &m.medium, &m.high}) {
        if (!s->upper.monotone() || !s->lower.monotone())
            throw ConfigError("fuzzy set breakpoints must be non-decreasing");
        for (int i = 0; i <= 1000; ++i) {
            double x = static_cast<double>(i) / 1000.0;
            if (s->lower(x) > s->upper(x) + 1e-12)
                throw ConfigError("fuzzy set lower membership exceeds upper");
        }
    }
    if (m.weight_drop < 0 || m.weight_delay < 0 || m.weight_tamper < 0 ||
        m.weight_drop + m.weight_delay + m.weight_tamper > 1.0 + 1e-12)
        throw ConfigError("fuzzy rule weights must be non-negative and sum to at most 1");
    if (m.rules.size() != 27) throw ConfigError("fuzzy rule base must hold all 27 rules");
}

inline TrustValue evaluate_trust(const TrustAttributes& attrs, const FuzzyModel& model,
                                 int round = 0) {
    const std::array<double, 3> x{attrs.drop_rate, attrs.delay_rate, attrs.tamper_rate};
    // memberships[attr][grade]
    std::array<std::array<MembershipInterval, 3>, 3> memb;
    for (int i = 0; i < 3; ++i) {
        memb[i][0] = fuzzify(x[i], model.low);
        memb[i][1] = fuzzify(x[i], model.medium);
        memb[i][2] = fuzzify(x[i], model.high);
    }
    std::vector<MembershipInterval> firings;
    std::vector<double> consequents;
    firings.reserve(model.rules.size());
    consequents.reserve(model.rules.size());
    for (const auto& rule : model.rules) {
        FiredRule f = fire_rule(rule, {memb[0][static_cast<int>(rule.drop)],
                                       memb[1][static_cast<int>(rule.delay)],
                                       memb[2][static_cast<int>(rule.tamper)]});
        firings.push_back(f.firing);
        consequents.push_back(f.consequent);
    }
    try {
        auto [yl, yr] = type_reduce_km(firings, consequents);
        TrustValue t = defuzzify(yl, yr, round);
        t.value = clamp01(t.value);
        return t;
    } catch (const NoRuleFired&) {
        return {0.5, round, true};
    }
}

}  // namespace gantrust
