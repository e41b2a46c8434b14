#pragma once

#include <tuple>

#include "specmult/calculus.hpp"

namespace specmult {

namespace detail {

inline Eigen::MatrixXcd restricted_symmetrized(const WeightedOperator& op, const PointSet& rows,
                                               const PointSet& cols) {
    Eigen::MatrixXcd sub(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double sx = std::sqrt(op.space().weight(rows[i]));
        for (std::size_t j = 0; j < cols.size(); ++j)
            sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                sx * op.matrix()(rows[i], cols[j]) / std::sqrt(op.space().weight(cols[j]));
    }
    return sub;
}

}  // namespace detail

/// || chi_E1 T chi_E2 ||_{L^2(mu) -> L^2(mu)}: largest singular value of the
/// weighted restriction. Empty sets give 0.
inline double restricted_norm_22(const WeightedOperator& op, const PointSet& E1, const PointSet& E2) {
    if (E1.empty() || E2.empty()) return 0.0;
    return detail::restricted_symmetrized(op, E1, E2).jacobiSvd().singularValues()(0);
}

inline PointSet all_points(const MetricMeasureSpace& space) {
    PointSet s(static_cast<std::size_t>(space.size()));
    for (int i = 0; i < space.size(); ++i) s[static_cast<std::size_t>(i)] = i;
    return s;
}

/// Certified two-sided estimate of || chi_E1 T chi_E2 ||_{L^p -> L^q}.
/// Exact where a formula exists; otherwise the upper side interpolates
/// between exact endpoints and the lower side comes from dual-norm ascent.
struct NormBracket {
    double lower = 0.0;
    double upper = 0.0;
    bool exact = false;
    std::string method_lower;
    std::string method_upper;

    json to_json() const {
        json j;
        j["lower"] = lower;
        j["upper"] = upper;
        j["exact"] = exact;
        j["method_lower"] = method_lower;
        j["method_upper"] = method_upper;
        return j;
    }
};

namespace detail {

// mu-kernel K(x,y) = M[x][y] / mu(y)
inline double norm_1_to_inf(const WeightedOperator& op, const PointSet& E1, const PointSet& E2) {
    double m = 0.0;
    for (PointId x : E1)
        for (PointId y : E2) m = std::max(m, std::abs(op.matrix()(x, y)) / op.space().weight(y));
    return m;
}

inline double norm_1_to_1(const WeightedOperator& op, const PointSet& E1, const PointSet& E2) {
    double m = 0.0;
    for (PointId y : E2) {
        double col = 0.0;
        for (PointId x : E1) col += std::abs(op.matrix()(x, y)) * op.space().weight(x);
        m = std::max(m, col / op.space().weight(y));
    }
    return m;
}

inline double norm_inf_to_inf(const WeightedOperator& op, const PointSet& E1, const PointSet& E2) {
    double m = 0.0;
    for (PointId x : E1) {
        double row = 0.0;
        for (PointId y : E2) row += std::abs(op.matrix()(x, y));
        m = std::max(m, row);
    }
    return m;
}

struct Anchor {
    double ip;  // 1/p
    double iq;  // 1/q
    double bound;
};

inline double interp_upper(const std::vector<Anchor>& anchors, double ip, double iq) {
    double best = std::numeric_limits<double>::infinity();
    const double eps = 1e-12;
    for (std::size_t i = 0; i < anchors.size(); ++i)
        for (std::size_t j = 0; j < anchors.size(); ++j) {
            if (i == j) continue;
            const Anchor &a = anchors[i], &b = anchors[j];
            double theta;
            if (std::abs(b.ip - a.ip) > eps)
                theta = (ip - a.ip) / (b.ip - a.ip);
            else if (std::abs(b.iq - a.iq) > eps)
                theta = (iq - a.iq) / (b.iq - a.iq);
            else
                continue;
            if (theta < -eps || theta > 1.0 + eps) continue;
            // the segment must pass through (ip, iq)
            if (std::abs(a.ip + theta * (b.ip - a.ip) - ip) > 1e-9) continue;
            if (std::abs(a.iq + theta * (b.iq - a.iq) - iq) > 1e-9) continue;
            theta = std::clamp(theta, 0.0, 1.0);
            best = std::min(best, std::pow(a.bound, 1.0 - theta) * std::pow(b.bound, theta));
        }
    return best;
}

inline double dual_exponent(double p) { return std::isinf(p) ? 1.0 : (p == 1.0 ? std::numeric_limits<double>::infinity() : p / (p - 1.0)); }

// weighted L^p norm on a restricted index set
inline double lp_restricted(const MetricMeasureSpace& sp, const GridFunction& f, double p, const PointSet& on) {
    return lp_norm(sp, f, p, on);
}

// duality map J_q: y -> |y|^{q-1} sgn(y), with the q = inf case a point mass
inline GridFunction dual_vector(const MetricMeasureSpace& sp, const GridFunction& y, double q,
                                const PointSet& on) {
    GridFunction g = GridFunction::Zero(y.size());
    if (std::isinf(q)) {
        double best = -1.0;
        PointId arg = -1;
        for (PointId x : on)
            if (std::abs(y(x)) > best) {
                best = std::abs(y(x));
                arg = x;
            }
        if (arg >= 0 && best > 0.0) g(arg) = y(arg) / std::abs(y(arg)) / sp.weight(arg);
        return g;
    }
    for (PointId x : on) {
        const double a = std::abs(y(x));
        if (a > 0.0) g(x) = std::pow(a, q - 1.0) * (y(x) / a);
    }
    return g;
}

}  // namespace detail

/// Lower bound for || chi_E1 T chi_E2 ||_{p->q} by alternating dual-norm
/// ascent (50 iterations, 8 seeded restarts, best value kept).
inline double ascent_lower_bound(const WeightedOperator& op, const PointSet& E1, const PointSet& E2,
                                 double p, double q, std::uint64_t seed = 0, int restarts = 8,
                                 int iterations = 50) {
    if (E1.empty() || E2.empty()) return 0.0;
    const MetricMeasureSpace& sp = op.space();
    const int n = op.size();
    const double pdual = detail::dual_exponent(p);
    // adjoint in the weighted product: T*[x][y] = conj(M[y][x]) mu(y)/mu(x)
    Eigen::MatrixXcd adj(n, n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            adj(x, y) = std::conj(op.matrix()(y, x)) * sp.weight(y) / sp.weight(x);
    double best = 0.0;
    Rng rng(seed);
    for (int rs = 0; rs < restarts; ++rs) {
        GridFunction f = GridFunction::Zero(n);
        for (PointId x : E2) f(x) = rng.normal_complex();
        double fn = detail::lp_restricted(sp, f, p, E2);
        if (fn == 0.0) continue;
        f /= fn;
        for (int it = 0; it < iterations; ++it) {
            GridFunction y = GridFunction::Zero(n);
            {
                GridFunction tf = op.matrix() * f;
                for (PointId x : E1) y(x) = tf(x);
            }
            const double val = detail::lp_restricted(sp, y, q, E1);
            best = std::max(best, val);
            if (val == 0.0) break;
            GridFunction z = adj * detail::dual_vector(sp, y, q, E1);
            GridFunction znew = GridFunction::Zero(n);
            for (PointId x : E2) znew(x) = z(x);
            // dual-normalize back into the unit L^p sphere
            GridFunction fnew = detail::dual_vector(sp, znew, pdual, E2);
            const double fnn = detail::lp_restricted(sp, fnew, p, E2);
            if (fnn == 0.0) break;
            f = fnew / fnn;
        }
    }
    return best;
}

inline NormBracket restricted_norm_pq(const WeightedOperator& op, const PointSet& E1, const PointSet& E2,
                                      double p, double q, std::uint64_t seed = 0) {
    if (p < 1.0 || q < 1.0) throw std::invalid_argument("restricted_norm_pq: exponents must be >= 1");
    NormBracket br;
    if (E1.empty() || E2.empty()) {
        br.exact = true;
        br.method_lower = br.method_upper = "empty";
        return br;
    }
    auto is = [](double a, double b) { return a == b; };
    if (is(p, 1.0) && std::isinf(q)) {
        br.lower = br.upper = detail::norm_1_to_inf(op, E1, E2);
        br.exact = true;
        br.method_lower = br.method_upper = "kernel-sup";
        return br;
    }
    if (is(p, 1.0) && is(q, 1.0)) {
        br.lower = br.upper = detail::norm_1_to_1(op, E1, E2);
        br.exact = true;
        br.method_lower = br.method_upper = "column-sums";
        return br;
    }
    if (std::isinf(p) && std::isinf(q)) {
        br.lower = br.upper = detail::norm_inf_to_inf(op, E1, E2);
        br.exact = true;
        br.method_lower = br.method_upper = "row-sums";
        return br;
    }
    if (is(p, 2.0) && is(q, 2.0)) {
        br.lower = br.upper = restricted_norm_22(op, E1, E2);
        br.exact = true;
        br.method_lower = br.method_upper = "weighted-svd";
        return br;
    }

    br.lower = ascent_lower_bound(op, E1, E2, p, q, seed);
    br.method_lower = "dual-ascent";
    if (p > q) {
        br.upper = std::numeric_limits<double>::infinity();
        br.method_upper = "none(p>q)";
        return br;
    }
    // Riesz-Thorin closure over the exact endpoints plus one derived layer
    const double n11 = detail::norm_1_to_1(op, E1, E2);
    const double ninf = detail::norm_inf_to_inf(op, E1, E2);
    const double n1inf = detail::norm_1_to_inf(op, E1, E2);
    const double n22 = restricted_norm_22(op, E1, E2);
    std::vector<detail::Anchor> anchors = {
        {1.0, 1.0, n11}, {0.5, 0.5, n22}, {0.0, 0.0, ninf}, {1.0, 0.0, n1inf}};
    const double ip = std::isinf(p) ? 0.0 : 1.0 / p;
    const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
    std::vector<detail::Anchor> derived;
    for (const auto& target : {std::pair<double, double>{ip, ip}, {iq, iq}, {1.0, iq}, {ip, 0.0}}) {
        const double b = detail::interp_upper(anchors, target.first, target.second);
        if (std::isfinite(b)) derived.push_back({target.first, target.second, b});
    }
    anchors.insert(anchors.end(), derived.begin(), derived.end());
    br.upper = detail::interp_upper(anchors, ip, iq);
    br.method_upper = "riesz-thorin";
    if (br.upper < br.lower) br.upper = br.lower;  // guard against ascent exceeding loose interpolation
    return br;
}

/// Families whose two-ball decay gets fitted.
struct SemigroupFamily {
    enum class Kind { Heat, PowerHeat } kind = Kind::Heat;
    int K = 1;

    cplx symbol(double t, double lam) const {
        const double u = t * lam;
        if (kind == Kind::Heat) return std::exp(-u);
        return std::pow(u, K) * std::exp(-u);
    }

    // sup over the positive spectrum of the symbol; used to detect the
    // saturation regime where finite spectra flatten the decay
    double positive_sup(const SpectralDecomposition& dec, double t, double kernel_tol) const {
        double m = 0.0;
        for (int i = 0; i < dec.size(); ++i)
            if (dec.eigenvalues(i) > kernel_tol) m = std::max(m, std::abs(symbol(t, dec.eigenvalues(i))));
        return m;
    }
};

struct PairSample {
    std::vector<std::pair<PointId, PointId>> pairs;
};

/// All pairs for n <= 128, otherwise 512 seeded pairs stratified by distance
/// decade.
inline PairSample default_pair_sample(const MetricMeasureSpace& space, std::uint64_t seed = 0,
                                      int budget = 512) {
    PairSample ps;
    const int n = space.size();
    if (n <= 128) {
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) ps.pairs.emplace_back(x, y);
        return ps;
    }
    Rng rng(seed);
    const double dmax = std::max(space.diameter(), 1.0);
    const int decades = std::max(1, static_cast<int>(std::ceil(std::log10(dmax))) + 1);
    const int per_decade = budget / decades;
    for (int dec10 = 0; dec10 < decades; ++dec10) {
        const double lo = dec10 == 0 ? 0.0 : std::pow(10.0, dec10 - 1);
        const double hi = std::pow(10.0, dec10);
        int found = 0, tries = 0;
        while (found < per_decade && tries < 50 * per_decade) {
            ++tries;
            const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            const double d = space.dist(x, y);
            if (d >= lo && d < hi) {
                ps.pairs.emplace_back(x, y);
                ++found;
            }
        }
    }
    std::sort(ps.pairs.begin(), ps.pairs.end());
    ps.pairs.erase(std::unique(ps.pairs.begin(), ps.pairs.end()), ps.pairs.end());
    return ps;
}

struct DecaySample {
    double t = 0.0;
    PointId x = 0, y = 0;
    double scaled_dist = 0.0;  // (d(x,y)/t^{1/m})^{m/(m-1)}
    double norm = 0.0;
    double volume_factor = 1.0;
};

struct DecayFit {
    FitReport report;                  // exponent = b, constant = certified C
    std::vector<DecaySample> samples;  // retained samples, sorted
    std::vector<DecaySample> saturated;
    double worst_ratio = 0.0;          // max norm/(C_fit e^{-b u}) before inflation

    json to_json() const {
        json j = report.to_json();
        j["worst_ratio"] = worst_ratio;
        j["retained"] = samples.size();
        j["saturated"] = saturated.size();
        return j;
    }
};

namespace detail {

inline DecayFit fit_two_ball_decay(const SpectralDecomposition& dec, int m, const std::vector<double>& t_grid,
                                   const PairSample& ps, const SemigroupFamily& fam, double ip, double iq) {
    if (t_grid.empty()) throw std::invalid_argument("decay fit: empty t grid");
    DecayFit out;
    const MetricMeasureSpace& sp = *dec.space;
    const double kernel_tol = 1e-8 * std::max(dec.lambda_max(), 1e-300);
    const double expo = static_cast<double>(m) / (m - 1.0);
    for (double t : t_grid) {
        if (!(t > 0.0)) throw std::invalid_argument("decay fit: t must be positive");
        const WeightedOperator op =
            dec.apply_function([&fam, t](double lam) { return fam.symbol(t, lam); });
        const double r = std::pow(t, 1.0 / m);
        const bool saturated = fam.positive_sup(dec, t, kernel_tol) < 1e-10;
        for (const auto& [x, y] : ps.pairs) {
            DecaySample s;
            s.t = t;
            s.x = x;
            s.y = y;
            s.scaled_dist = std::pow(sp.dist(x, y) / r, expo);
            const PointSet bx = sp.ball(x, r), by = sp.ball(y, r);
            if (ip == 0.5 && iq == 0.5) {
                s.norm = restricted_norm_22(op, bx, by);
            } else {
                s.norm = restricted_norm_pq(op, bx, by, 1.0 / ip,
                                            iq == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / iq)
                             .upper;
            }
            s.volume_factor = std::pow(sp.volume(bx), -(ip - iq));
            (saturated ? out.saturated : out.samples).push_back(s);
        }
    }
    auto cmp = [](const DecaySample& a, const DecaySample& b) {
        return std::tie(a.t, a.x, a.y) < std::tie(b.t, b.x, b.y);
    };
    std::sort(out.samples.begin(), out.samples.end(), cmp);
    std::sort(out.saturated.begin(), out.saturated.end(), cmp);

    std::vector<double> xs, ys;
    for (const DecaySample& s : out.samples) {
        const double normalized = s.norm / s.volume_factor;
        if (normalized < 1e-14) continue;
        xs.push_back(s.scaled_dist);
        ys.push_back(std::log(normalized));
    }
    out.report.sample_count = static_cast<int>(xs.size());
    if (xs.size() < 2) {
        out.report.degenerate = true;
        out.report.warnings.push_back(xs.empty() ? "all norms underflow" : "fewer than 2 usable samples");
        return out;
    }
    const LineFit lf = fit_line(xs, ys);
    out.report.exponent = -lf.slope;  // model: log norm = log C - b u
    out.report.residual = lf.r2;
    double logc = lf.intercept;
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        worst = std::max(worst, std::exp(ys[i] - (lf.intercept + lf.slope * xs[i])));
        logc = std::max(logc, ys[i] + out.report.exponent * xs[i]);
    }
    out.report.constant = std::exp(logc);  // certified: every sample obeys C e^{-b u}
    out.worst_ratio = worst;
    if (!out.saturated.empty())
        out.report.warnings.push_back("saturated samples excluded: " + std::to_string(out.saturated.size()));
    return out;
}

}  // namespace detail

/// Fit of the two-ball L^2 decay || chi_{B(x,t^{1/m})} S_t chi_{B(y,t^{1/m})} ||
/// <= C exp(-b (d/t^{1/m})^{m/(m-1)}). The returned constant certifies the
/// bound on every retained sample; saturated large-t samples are excluded.
inline DecayFit fit_davies_gaffney(const SpectralDecomposition& dec, int m, const std::vector<double>& t_grid,
                                   const PairSample& ps, const SemigroupFamily& fam = {}) {
    return detail::fit_two_ball_decay(dec, m, t_grid, ps, fam, 0.5, 0.5);
}

/// Same fit from L^p to L^q with the ball-volume normalization divided out.
/// Uses bracket upper bounds, so the certificate is conservative.
inline DecayFit fit_gge(const SpectralDecomposition& dec, int m, double p, double q,
                        const std::vector<double>& t_grid, const PairSample& ps,
                        const SemigroupFamily& fam = {}) {
    if (!(p <= 2.0 && 2.0 <= q)) throw std::invalid_argument("fit_gge: need p <= 2 <= q");
    const double ip = 1.0 / p;
    const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
    return detail::fit_two_ball_decay(dec, m, t_grid, ps, fam, ip, iq);
}

struct AnnularSample {
    int k = 0;
    double norm = 0.0;
    double derived_bound = 0.0;
    int cover_size = 0;
};

struct AnnularReport {
    std::vector<AnnularSample> samples;
    double worst_ratio = 0.0;  // norm / derived bound
    int multiplicity = 1;      // covering overlap actually observed

    json to_json() const {
        json j;
        j["worst_ratio"] = worst_ratio;
        j["multiplicity"] = multiplicity;
        json arr = json::array();
        for (const auto& s : samples) {
            json e;
            e["k"] = s.k;
            e["norm"] = s.norm;
            e["derived_bound"] = s.derived_bound;
            e["cover_size"] = s.cover_size;
            arr.push_back(e);
        }
        j["samples"] = arr;
        return j;
    }
};

/// Annular norms || chi_{B(x,r)} e^{-tL} chi_{A(x,r,k)} || checked against the
/// bound derived from the fitted two-ball constants by covering the annulus
/// with r-balls: C sqrt(K_k) exp(-b k^{m/(m-1)}).
inline AnnularReport check_annular_equivalence(const SpectralDecomposition& dec, int m, double t, PointId x,
                                               int k_max, const DecayFit& two_ball) {
    if (!(t > 0.0)) throw std::invalid_argument("check_annular_equivalence: t must be positive");
    AnnularReport rep;
    const MetricMeasureSpace& sp = *dec.space;
    const double r = std::pow(t, 1.0 / m);
    const double expo = static_cast<double>(m) / (m - 1.0);
    const WeightedOperator op = heat(dec, t);
    const PointSet b0 = sp.ball(x, r);
    const double b = two_ball.report.exponent, C = two_ball.report.constant;
    for (int k = 0; k <= k_max; ++k) {
        AnnularSample s;
        s.k = k;
        const PointSet ann = sp.annulus(x, r, k);
        s.norm = restricted_norm_22(op, b0, ann);
        if (!ann.empty()) {
            // net of r-balls covering the annulus (subset of B(x,(k+1)r))
            const PointSet net = covering_net(sp, x, (k + 1) * r, r);
            int in_annulus = 0;
            for (PointId c : net) {
                const double d = sp.dist(x, c);
                if (d >= std::max(0.0, (k - 1.0)) * r && d < (k + 2.0) * r) ++in_annulus;
            }
            s.cover_size = std::max(1, in_annulus);
            rep.multiplicity = std::max(rep.multiplicity, covering_multiplicity(sp, x, (k + 1) * r, r, net));
        }
        // covering centers can sit one ball inside the annulus edge, so the
        // two-ball distance only guarantees k-1 separations
        s.derived_bound = C * std::sqrt(static_cast<double>(std::max(1, s.cover_size))) *
                          std::exp(-b * std::pow(std::max(0.0, static_cast<double>(k) - 1.0), expo));
        if (s.norm > 0.0 && s.derived_bound > 0.0)
            rep.worst_ratio = std::max(rep.worst_ratio, s.norm / s.derived_bound);
        rep.samples.push_back(s);
    }
    return rep;
}

struct ComplexTimeSample {
    cplx z;
    double r = 0.0;
    PointId x = 0, y = 0;
    double norm = 0.0;
    double bound = 0.0;
};

struct ComplexTimeReport {
    std::vector<ComplexTimeSample> samples;
    double worst_ratio = 0.0;

    json to_json() const {
        json j;
        j["worst_ratio"] = worst_ratio;
        j["samples"] = samples.size();
        return j;
    }
};

/// Two-ball bounds for e^{-zL} with radius-r balls, compared against
/// C' (1+r/r_z)^{D(1/p-1/q)} (|z|/Re z)^{D(1/p-1/q)} exp(-b'(d/r_z)^{m/(m-1)})
/// with r_z = (Re z)^{1/m-1}|z| and constants imported from the real-time fit.
inline ComplexTimeReport check_complex_time(const SpectralDecomposition& dec, int m,
                                            const std::vector<cplx>& z_grid, const std::vector<double>& r_grid,
                                            const PairSample& ps, const DecayFit& two_ball, double D,
                                            double p = 2.0, double q = 2.0) {
    ComplexTimeReport rep;
    const MetricMeasureSpace& sp = *dec.space;
    const double expo = static_cast<double>(m) / (m - 1.0);
    const double ip = 1.0 / p;
    const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
    const double b = two_ball.report.exponent, C = two_ball.report.constant;
    for (const cplx& z : z_grid) {
        if (!(z.real() > 0.0)) throw std::invalid_argument("check_complex_time: Re z must be positive");
        const WeightedOperator op = complex_heat(dec, z);
        const double rz = std::pow(z.real(), 1.0 / m - 1.0) * std::abs(z);
        for (double r : r_grid)
            for (const auto& [x, y] : ps.pairs) {
                ComplexTimeSample s;
                s.z = z;
                s.r = r;
                s.x = x;
                s.y = y;
                const PointSet bx = sp.ball(x, r), by = sp.ball(y, r);
                if (p == 2.0 && q == 2.0)
                    s.norm = restricted_norm_22(op, bx, by);
                else
                    s.norm = restricted_norm_pq(op, bx, by, p, q).upper;
                const double volf = std::pow(sp.volume(bx), -(ip - iq));
                s.bound = C * volf * std::pow(1.0 + r / rz, D * (ip - iq)) *
                          std::pow(std::abs(z) / z.real(), D * (ip - iq)) *
                          std::exp(-b * std::pow(sp.dist(x, y) / rz, expo));
                if (s.norm > 1e-14 && s.bound > 0.0)
                    rep.worst_ratio = std::max(rep.worst_ratio, s.norm / s.bound);
                rep.samples.push_back(s);
            }
    }
    return rep;
}

/// || T chi_{B(y,1/R)} || from L^2(mu) into L^2((1+R d(.,y))^s dmu).
inline double weighted_restricted_norm(const WeightedOperator& op, PointId y, double R, double s) {
    if (!(R > 0.0)) throw std::invalid_argument("weighted_restricted_norm: R must be positive");
    if (s < 0.0) throw std::invalid_argument("weighted_restricted_norm: s must be >= 0");
    const MetricMeasureSpace& sp = op.space();
    const PointSet cols = sp.ball(y, 1.0 / R);
    if (cols.empty()) return 0.0;
    const PointSet rows = all_points(sp);
    Eigen::MatrixXcd sub = detail::restricted_symmetrized(op, rows, cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double w = std::pow(1.0 + R * sp.dist(rows[i], y), s / 2.0);
        sub.row(static_cast<Eigen::Index>(i)) *= w;
    }
    return sub.jacobiSvd().singularValues()(0);
}

struct HeatWeightedReport {
    double sup_ratio = 0.0;
    double tau_at_sup = 0.0;
    PointId y_at_sup = 0;
    std::vector<std::tuple<double, PointId, double>> samples;  // (tau, y, ratio)

    json to_json() const {
        json j;
        j["sup_ratio"] = sup_ratio;
        j["tau_at_sup"] = tau_at_sup;
        j["y_at_sup"] = y_at_sup;
        j["samples"] = samples.size();
        return j;
    }
};

/// Ratio of the weighted norm of e^{-(1+i tau) R^{-m} L} chi_{B(y,1/R)} to
/// (1+tau^2)^{s/4}, swept over tau and centers.
inline HeatWeightedReport check_heat_weighted(const SpectralDecomposition& dec, int m, double R,
                                              const std::vector<double>& tau_grid, double s,
                                              const std::vector<PointId>& y_sample) {
    if (!(R > 0.0)) throw std::invalid_argument("check_heat_weighted: R must be positive");
    HeatWeightedReport rep;
    const double Rm = std::pow(R, -static_cast<double>(m));
    for (double tau : tau_grid) {
        const WeightedOperator op = complex_heat(dec, cplx{1.0, tau} * Rm);
        const double denom = std::pow(1.0 + tau * tau, s / 4.0);
        for (PointId y : y_sample) {
            const double num = weighted_restricted_norm(op, y, R, s);
            const double ratio = num / denom;
            rep.samples.emplace_back(tau, y, ratio);
            if (ratio > rep.sup_ratio) {
                rep.sup_ratio = ratio;
                rep.tau_at_sup = tau;
                rep.y_at_sup = y;
            }
        }
    }
    return rep;
}

/// Ratio of the weighted norm of F(L^{1/m}) chi_{B(y,1/R)} to the Bessel
/// norm ||F(R.)||_{H^{(s+1)/2+eps}_2}, with F windowed to supp in [R/4, R].
/// Returns a negative value when the window kills F entirely.
inline double check_lemma_43a(const SpectralDecomposition& dec, int m, const MultiplierProfile& F, double s,
                              double eps, double R, PointId y) {
    if (!(R > 0.0)) throw std::invalid_argument("check_lemma_43a: R must be positive");
    const PartitionFunction om;
    auto windowed = [&F, &om, R](double lam) { return om.eval(lam / R) * F.eval(lam); };
    const SampledProfile rescaled = sample_profile(
        [&windowed, R](double u) { return windowed(R * u); }, om.support_lo(), om.support_hi(), 1 << 12);
    double sup = 0.0;
    for (const cplx& v : rescaled.values) sup = std::max(sup, std::abs(v));
    if (sup < 1e-300) return -1.0;  // window removed everything; ratio undefined
    const double denom = bessel_norm(rescaled, (s + 1.0) / 2.0 + eps, 2.0);
    const WeightedOperator op = dec.apply_function(
        [&windowed, m](double lam) { return windowed(std::pow(lam, 1.0 / static_cast<double>(m))); });
    const double num = weighted_restricted_norm(op, y, R, s);
    return num / denom;
}

}  // namespace specmult
