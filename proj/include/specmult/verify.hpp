#pragma once

#include "specmult/hardy.hpp"

namespace specmult {

/// Shared carrier for experiment outcomes. Every reported sup keeps the
/// sample that attained it, and reports serialize deterministically.
struct ExperimentReport {
    std::string id;
    json params = json::object();
    json samples = json::array();
    json fitted = json::object();
    double sup_ratio = 0.0;
    json witness = json::object();
    double spread = 0.0;
    std::string status = "pass";  // pass|fail|warn|skipped
    std::vector<std::string> warnings;
    std::uint64_t seed = 0;

    bool passed() const { return status == "pass" || status == "warn"; }

    json to_json() const {
        json j;
        j["id"] = id;
        j["status"] = status;
        j["params"] = params;
        j["fitted"] = fitted;
        j["sup_ratio"] = sup_ratio;
        j["spread"] = spread;
        j["witness"] = witness;
        j["warnings"] = warnings;
        j["seed"] = seed;
        j["samples"] = samples;
        return j;
    }
};

namespace detail {

inline WeightedOperator multiplier_with_heat_difference(const SpectralDecomposition& dec,
                                                        const MultiplierProfile& F, int m, int M, double r) {
    const double rm = std::pow(r, m);
    return dec.apply_function([&F, rm, M](double lam) {
        return F.eval(lam) * std::pow(-std::expm1(-rm * lam), M);
    });
}

}  // namespace detail

struct Dy31Fit {
    FitReport report;  // exponent = delta, constant = certified C_F
    bool delta_above_half_dim = false;
    std::vector<std::tuple<int, double, double>> samples;  // (j, radius, norm)

    json to_json() const {
        json j = report.to_json();
        j["delta_above_half_dim"] = delta_above_half_dim;
        json arr = json::array();
        for (const auto& [jj, r, nrm] : samples) arr.push_back({{"j", jj}, {"r", r}, {"norm", nrm}});
        j["samples"] = arr;
        return j;
    }
};

/// Decay of || chi_{U_j(B)} F(L)(I - e^{-r^m L})^M chi_B || in j, fitted as
/// C_F 2^{-j delta} over the ball family with j = 1 always excluded.
inline Dy31Fit check_dy31(const SpectralDecomposition& dec, const MultiplierProfile& F, int m, int M,
                          const std::vector<Ball>& ball_family, const std::vector<int>& j_range,
                          double fitted_D) {
    Dy31Fit out;
    if (M <= fitted_D / m)
        out.report.warnings.push_back("M <= D/m for the fitted dimension; hypothesis not satisfied");
    const MetricMeasureSpace& sp = *dec.space;
    std::vector<double> xs, ys;
    for (const Ball& B : ball_family) {
        const WeightedOperator op = detail::multiplier_with_heat_difference(dec, F, m, M, B.radius);
        const PointSet base = sp.ball(B.center, B.radius);
        for (int j : j_range) {
            if (j == 1) continue;
            const PointSet uj = sp.dyadic_annulus(B, j);
            if (uj.empty()) continue;
            const double nrm = restricted_norm_22(op, uj, base);
            out.samples.emplace_back(j, B.radius, nrm);
            if (nrm < 1e-14) continue;
            xs.push_back(static_cast<double>(j));
            ys.push_back(std::log2(nrm));
        }
    }
    out.report.sample_count = static_cast<int>(xs.size());
    if (xs.size() < 2) {
        out.report.degenerate = true;
        out.report.warnings.push_back("all norms underflow or too few samples");
        return out;
    }
    const LineFit lf = fit_line(xs, ys);
    out.report.exponent = -lf.slope;  // log2 norm = log2 C_F - j delta
    out.report.residual = lf.r2;
    double logc = lf.intercept;
    for (std::size_t i = 0; i < xs.size(); ++i) logc = std::max(logc, ys[i] + out.report.exponent * xs[i]);
    out.report.constant = std::pow(2.0, logc);
    out.delta_above_half_dim = out.report.exponent > fitted_D / 2.0;
    return out;
}

struct AnnularVariantReport {
    double certified_C = 0.0;  // smallest C with norm <= C C_F 2^{iD} 2^{-|j-i| delta}
    std::vector<std::tuple<int, int, double, double>> samples;  // (i, j, norm, bound/C)

    json to_json() const {
        json j;
        j["certified_C"] = certified_C;
        json arr = json::array();
        for (const auto& [i, jj, nrm, base] : samples)
            arr.push_back({{"i", i}, {"j", jj}, {"norm", nrm}, {"model", base}});
        j["samples"] = arr;
        return j;
    }
};

/// Annular-to-annular version of the same decay, with (C_F, delta) imported
/// from check_dy31 and the fitted dimension in the 2^{iD} growth factor.
inline AnnularVariantReport check_dy31_annular(const SpectralDecomposition& dec, const MultiplierProfile& F,
                                               int m, int M, const Ball& B,
                                               const std::vector<std::pair<int, int>>& ij_range, double C_F,
                                               double delta, double fitted_D) {
    AnnularVariantReport out;
    const MetricMeasureSpace& sp = *dec.space;
    const WeightedOperator op = detail::multiplier_with_heat_difference(dec, F, m, M, B.radius);
    for (const auto& [i, j] : ij_range) {
        if (i == 1 || j == 1) continue;
        const PointSet ui = sp.dyadic_annulus(B, i);
        const PointSet uj = sp.dyadic_annulus(B, j);
        if (ui.empty() || uj.empty()) continue;
        const double nrm = restricted_norm_22(op, uj, ui);
        const double model =
            C_F * std::pow(2.0, i * fitted_D) * std::pow(2.0, -std::abs(j - i) * delta);
        out.samples.emplace_back(i, j, nrm, model);
        if (model > 0.0) out.certified_C = std::max(out.certified_C, nrm / model);
    }
    return out;
}

struct RegularizerDecayReport {
    FitReport report;                     // exponent = b, constant = certified C
    double diag_norm = 0.0;               // |j-i| = 0 norm
    double diag_bound = 0.0;              // 2^M / m
    std::vector<std::tuple<int, int, double>> samples;  // (i, j, norm)

    json to_json() const {
        json j = report.to_json();
        j["diag_norm"] = diag_norm;
        j["diag_bound"] = diag_bound;
        json arr = json::array();
        for (const auto& [i, jj, nrm] : samples) arr.push_back({{"i", i}, {"j", jj}, {"norm", nrm}});
        j["samples"] = arr;
        return j;
    }
};

/// Annular norms of the K-th power of the averaged regularizer fitted
/// against C exp(-b 2^{|j-i|}).
inline RegularizerDecayReport check_regularizer_decay(const SpectralDecomposition& dec, int m, int M, int K,
                                                      double r, const Ball& B,
                                                      const std::vector<std::pair<int, int>>& ij_range) {
    if (K < 1) throw std::invalid_argument("check_regularizer_decay: K must be >= 1");
    RegularizerDecayReport out;
    out.diag_bound = std::pow(2.0, M) / m;
    const MetricMeasureSpace& sp = *dec.space;
    const WeightedOperator op = dec.apply_function([m, M, K, r](double lam) {
        return cplx{std::pow(regularizer_symbol(lam, m, M, r), K), 0.0};
    });
    std::vector<double> xs, ys;
    for (const auto& [i, j] : ij_range) {
        const PointSet ui = sp.dyadic_annulus(B, i);
        const PointSet uj = sp.dyadic_annulus(B, j);
        if (ui.empty() || uj.empty()) continue;
        const double nrm = restricted_norm_22(op, uj, ui);
        out.samples.emplace_back(i, j, nrm);
        if (i == j) out.diag_norm = std::max(out.diag_norm, nrm);
        if (nrm < 1e-14) continue;
        xs.push_back(std::pow(2.0, std::abs(j - i)));
        ys.push_back(std::log(nrm));
    }
    out.report.sample_count = static_cast<int>(xs.size());
    if (xs.size() < 2) {
        out.report.degenerate = true;
        out.report.warnings.push_back("too few usable annular samples");
        return out;
    }
    const LineFit lf = fit_line(xs, ys);
    out.report.exponent = -lf.slope;
    out.report.residual = lf.r2;
    double logc = lf.intercept;
    for (std::size_t i2 = 0; i2 < xs.size(); ++i2)
        logc = std::max(logc, ys[i2] + out.report.exponent * xs[i2]);
    out.report.constant = std::exp(logc);
    return out;
}

namespace detail {

// L^q norm of |F(R.)| over [0,1] on a dense grid; q = inf takes the sup and
// additionally checks the spectrum pullbacks so the ceiling stays exact.
inline double profile_lq_norm(const MultiplierProfile& F, double R, double q,
                              const SpectralDecomposition* dec, int m, int grid_points = 4096) {
    if (std::isinf(q)) {
        double sup = std::abs(F.value_at_zero());
        for (int g = 0; g <= grid_points; ++g) {
            const double u = static_cast<double>(g) / grid_points;
            sup = std::max(sup, std::abs(F.eval(R * u)));
        }
        if (dec != nullptr)
            for (int i = 0; i < dec->size(); ++i) {
                const double lam = std::pow(dec->eigenvalues(i), 1.0 / m);
                if (lam <= R) sup = std::max(sup, std::abs(F.eval(lam)));
            }
        return sup;
    }
    double acc = 0.0;
    for (int g = 0; g < grid_points; ++g) {
        const double u = (static_cast<double>(g) + 0.5) / grid_points;
        acc += std::pow(std::abs(F.eval(R * u)), q);
    }
    return std::pow(acc / grid_points, 1.0 / q);
}

}  // namespace detail

/// Plancherel condition sweep: sup over (F, R, y) of
/// || F(L^{1/m}) chi_{B(y,1/R)} ||_{2->2} / ||F(R.)||_{L^q}, with F hard-
/// truncated to [0,R]. For q = inf the ratio additionally asserts the
/// spectral-theorem ceiling 1 + 1e-10.
inline ExperimentReport check_plancherel(const SpectralDecomposition& dec, int m, double q,
                                         const std::vector<MultiplierProfile>& F_family,
                                         const std::vector<double>& R_grid,
                                         const std::vector<PointId>& y_sample) {
    ExperimentReport rep;
    rep.id = "plancherel";
    rep.params = {{"m", m}, {"q", std::isinf(q) ? -1.0 : q}};
    const MetricMeasureSpace& sp = *dec.space;
    const PointSet everything = all_points(sp);
    std::size_t fi = 0;
    for (const MultiplierProfile& F : F_family) {
        for (double R : R_grid) {
            const WeightedOperator op = dec.apply_function([&F, R, m](double lam) {
                const double pull = std::pow(lam, 1.0 / m);
                return pull <= R ? F.eval(pull) : cplx{0.0, 0.0};
            });
            const double denom = detail::profile_lq_norm(F, R, q, &dec, m);
            for (PointId y : y_sample) {
                if (denom == 0.0) {
                    rep.warnings.push_back("zero denominator sample skipped");
                    continue;
                }
                const double num = restricted_norm_22(op, everything, sp.ball(y, 1.0 / R));
                const double ratio = num / denom;
                rep.samples.push_back({{"F", fi}, {"R", R}, {"y", y}, {"ratio", ratio}});
                if (ratio > rep.sup_ratio) {
                    rep.sup_ratio = ratio;
                    rep.witness = {{"F", fi}, {"R", R}, {"y", y}};
                }
            }
        }
        ++fi;
    }
    if (std::isinf(q) && rep.sup_ratio > 1.0 + 1e-10) rep.status = "fail";
    return rep;
}

/// Point-spectrum-friendly Plancherel variant: the denominator is the cell
/// norm ||F(N.)||_{N^kappa, q}.
inline ExperimentReport check_plancherel_variant(const SpectralDecomposition& dec, int m, double q, int kappa,
                                                 const std::vector<int>& N_grid,
                                                 const std::vector<MultiplierProfile>& F_family,
                                                 const std::vector<PointId>& y_sample) {
    if (kappa < 1) throw std::invalid_argument("check_plancherel_variant: kappa must be >= 1");
    if (!(q >= 2.0) || std::isinf(q))
        throw std::invalid_argument("check_plancherel_variant: q must be in [2,inf)");
    ExperimentReport rep;
    rep.id = "plancherel_variant";
    rep.params = {{"m", m}, {"q", q}, {"kappa", kappa}};
    const MetricMeasureSpace& sp = *dec.space;
    const PointSet everything = all_points(sp);
    std::size_t fi = 0;
    for (const MultiplierProfile& F : F_family) {
        for (int N : N_grid) {
            const double cutoff = static_cast<double>(N) + 1.0;
            const WeightedOperator op = dec.apply_function([&F, cutoff, m](double lam) {
                const double pull = std::pow(lam, 1.0 / m);
                return pull <= cutoff ? F.eval(pull) : cplx{0.0, 0.0};
            });
            int cells = 1;
            for (int k = 0; k < kappa; ++k) cells *= N;
            const double denom = nq_norm(F, cells, q, static_cast<double>(N));
            for (PointId y : y_sample) {
                if (denom == 0.0) {
                    rep.warnings.push_back("zero denominator sample skipped");
                    continue;
                }
                const double num = restricted_norm_22(op, everything, sp.ball(y, 1.0 / N));
                const double ratio = num / denom;
                rep.samples.push_back({{"F", fi}, {"N", N}, {"y", y}, {"ratio", ratio}});
                if (ratio > rep.sup_ratio) {
                    rep.sup_ratio = ratio;
                    rep.witness = {{"F", fi}, {"N", N}, {"y", y}};
                }
            }
        }
        ++fi;
    }
    return rep;
}

struct PiecewiseBoundReport {
    double certified_C = 0.0;
    double c_omega_s = 0.0;
    std::vector<std::tuple<int, int, double, double>> samples;  // (l, j, lhs, model/C)

    json to_json() const {
        json j;
        j["certified_C"] = certified_C;
        j["c_omega_s"] = c_omega_s;
        json arr = json::array();
        for (const auto& [l, jj, lhs, model] : samples)
            arr.push_back({{"l", l}, {"j", jj}, {"lhs", lhs}, {"model", model}});
        j["samples"] = arr;
        return j;
    }
};

/// Per-piece bound: for F^l(lam) = omega(2^{-l} lam) F(lam)(1-e^{-(r lam)^m})^M,
/// checks || chi_{U_j(B)} F^l(L^{1/m}) chi_B || against
/// C_{omega,s} 2^{-j s'} (2^l r)^{-s'} min{1,(2^l r)^{mM}} max{1,(2^l r)^{D/2}}
/// and reports the smallest certifying C.
inline PiecewiseBoundReport check_piecewise_bound(const SpectralDecomposition& dec,
                                                  const MultiplierProfile& F, int m, int M, double s,
                                                  const Ball& B, const std::vector<int>& j_range,
                                                  const std::vector<int>& l_range, double fitted_D,
                                                  double s_prime = -1.0) {
    PiecewiseBoundReport out;
    if (s_prime <= 0.0) s_prime = 0.5 * (fitted_D / 2.0 + s);
    const PartitionFunction om;
    const MetricMeasureSpace& sp = *dec.space;
    const HoermanderNorm cos = hoermander_norm(F, s + 0.5, 2.0);
    out.c_omega_s = cos.value;
    const PointSet base = sp.ball(B.center, B.radius);
    const double r = B.radius;
    for (int l : l_range) {
        const WeightedOperator op = dec.apply_function([&, l](double lam_op) {
            const double lam = std::pow(lam_op, 1.0 / m);
            const double hd = std::pow(-std::expm1(-std::pow(r * lam, m)), M);
            return om.eval(std::ldexp(lam, -l)) * F.eval(lam) * hd;
        });
        const double scale = std::ldexp(r, l);  // 2^l r
        for (int j : j_range) {
            if (j == 1) continue;
            const PointSet uj = sp.dyadic_annulus(B, j);
            if (uj.empty()) continue;
            const double lhs = restricted_norm_22(op, uj, base);
            const double model = out.c_omega_s * std::pow(2.0, -j * s_prime) * std::pow(scale, -s_prime) *
                                 std::min(1.0, std::pow(scale, m * M)) *
                                 std::max(1.0, std::pow(scale, fitted_D / 2.0));
            out.samples.emplace_back(l, j, lhs, model);
            if (model > 0.0 && lhs > 1e-14) out.certified_C = std::max(out.certified_C, lhs / model);
        }
    }
    return out;
}

/// Bounded-spread multiplier experiment on H^1_L: for each profile, the
/// ratio of the estimated operator norm to the Hoermander norm plus |F(0)|.
inline ExperimentReport experiment_h1_multiplier(const SpectralDecomposition& dec,
                                                 const std::vector<MultiplierProfile>& F_family, double s,
                                                 double q, const SquareFunctionGrid& grid,
                                                 const std::vector<GridFunction>& test_family,
                                                 double fitted_D, double spread_threshold,
                                                 std::uint64_t seed = 0) {
    ExperimentReport rep;
    rep.id = "h1_multiplier";
    rep.seed = seed;
    rep.params = {{"s", s}, {"q", std::isinf(q) ? -1.0 : q}, {"threshold", spread_threshold}};
    if (std::isinf(q)) {
        if (s <= fitted_D / 2.0) rep.warnings.push_back("s <= D/2 for the fitted dimension");
    } else if (q == 2.0) {
        if (s <= (fitted_D + 1.0) / 2.0) rep.warnings.push_back("s <= (D+1)/2 for the fitted dimension");
    } else {
        if (s <= std::max(fitted_D / 2.0, 1.0 / q))
            rep.warnings.push_back("s <= max(D/2, 1/q) for the fitted dimension");
    }
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    std::size_t fi = 0;
    for (const MultiplierProfile& F : F_family) {
        const HoermanderNorm hc = hoermander_norm(F, s, q);
        const double denom = hc.value + std::abs(F.value_at_zero());
        if (denom == 0.0) {
            rep.warnings.push_back("zero denominator sample skipped");
            ++fi;
            continue;
        }
        const WeightedOperator op = dec.apply_function(F);
        const double est = h1_operator_norm_estimate(dec, op, test_family, grid);
        const double ratio = est / denom;
        rep.samples.push_back(
            {{"F", fi}, {"estimate", est}, {"denominator", denom}, {"ratio", ratio}, {"capped", hc.capped}});
        if (ratio > rep.sup_ratio) {
            rep.sup_ratio = ratio;
            rep.witness = {{"F", fi}, {"ratio", ratio}};
        }
        rmin = std::min(rmin, ratio);
        rmax = std::max(rmax, ratio);
        ++fi;
    }
    rep.spread = (rmin > 0.0 && std::isfinite(rmin)) ? rmax / rmin : std::numeric_limits<double>::infinity();
    if (!(rep.spread <= spread_threshold)) rep.status = "fail";
    if (!rep.warnings.empty() && rep.status == "pass") rep.status = "warn";
    return rep;
}

/// Same experiment on L^p: the numerator is the certified lower bound of the
/// L^p -> L^p bracket (exact at p = 2, which anchors the family).
inline ExperimentReport experiment_lp_multiplier(const SpectralDecomposition& dec,
                                                 const std::vector<MultiplierProfile>& F_family, double p,
                                                 double s, double q, double fitted_D,
                                                 double spread_threshold, std::uint64_t seed = 0) {
    if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("experiment_lp_multiplier: p must be in (1,2]");
    ExperimentReport rep;
    rep.id = "lp_multiplier";
    rep.seed = seed;
    rep.params = {{"p", p}, {"s", s}, {"q", std::isinf(q) ? -1.0 : q}, {"threshold", spread_threshold}};
    if (s <= (fitted_D + 1.0) * std::abs(1.0 / p - 0.5))
        rep.warnings.push_back("s <= (D+1)|1/p-1/2| for the fitted dimension");
    const PointSet everything = all_points(*dec.space);
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    std::size_t fi = 0;
    for (const MultiplierProfile& F : F_family) {
        const HoermanderNorm hc = hoermander_norm(F, s, q);
        const double denom = hc.value + std::abs(F.value_at_zero());
        if (denom == 0.0) {
            rep.warnings.push_back("zero denominator sample skipped");
            ++fi;
            continue;
        }
        const WeightedOperator op = dec.apply_function(F);
        double num;
        if (p == 2.0) {
            double mx = 0.0;
            for (int i = 0; i < dec.size(); ++i) mx = std::max(mx, std::abs(F.eval(dec.eigenvalues(i))));
            num = mx;
        } else {
            num = restricted_norm_pq(op, everything, everything, p, p, seed + fi).lower;
        }
        const double ratio = num / denom;
        rep.samples.push_back({{"F", fi}, {"lower_bound", num}, {"denominator", denom}, {"ratio", ratio}});
        if (ratio > rep.sup_ratio) {
            rep.sup_ratio = ratio;
            rep.witness = {{"F", fi}, {"ratio", ratio}};
        }
        rmin = std::min(rmin, ratio);
        rmax = std::max(rmax, ratio);
        ++fi;
    }
    rep.spread = (rmin > 0.0 && std::isfinite(rmin)) ? rmax / rmin : std::numeric_limits<double>::infinity();
    if (!(rep.spread <= spread_threshold)) rep.status = "fail";
    if (!rep.warnings.empty() && rep.status == "pass") rep.status = "warn";
    return rep;
}

/// Spread of hardy_norm(f,p) / lp_norm(f,p) over random kernel-projected f.
inline ExperimentReport check_hp_lp(const SpectralDecomposition& dec, double p, int trials,
                                    const SquareFunctionGrid& grid, double spread_threshold,
                                    std::uint64_t seed = 0, double fitted_p0 = 1.0) {
    ExperimentReport rep;
    rep.id = "hp_lp";
    rep.seed = seed;
    rep.params = {{"p", p}, {"trials", trials}, {"threshold", spread_threshold}};
    if (!(p > fitted_p0 && p <= 2.0))
        rep.warnings.push_back("p outside (p0,2] for the certified p0");
    const MetricMeasureSpace& sp = *dec.space;
    const InjectiveSplit split = injective_split(dec);
    Rng rng(seed);
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        GridFunction f(sp.size());
        for (int x = 0; x < sp.size(); ++x) f(x) = rng.normal_complex();
        f = kernel_project_out(split, f);
        const double denom = lp_norm(sp, f, p);
        if (denom < 1e-12) continue;
        const double num = hardy_norm(dec, f, p, grid, false);
        const double ratio = num / denom;
        rep.samples.push_back({{"trial", trial}, {"ratio", ratio}});
        if (ratio > rep.sup_ratio) {
            rep.sup_ratio = ratio;
            rep.witness = {{"trial", trial}, {"ratio", ratio}};
        }
        rmin = std::min(rmin, ratio);
        rmax = std::max(rmax, ratio);
    }
    rep.spread = (rmin > 0.0 && std::isfinite(rmin)) ? rmax / rmin : std::numeric_limits<double>::infinity();
    if (!(rep.spread <= spread_threshold)) rep.status = "fail";
    if (!rep.warnings.empty() && rep.status == "pass") rep.status = "warn";
    return rep;
}

}  // namespace specmult
