#pragma once

#include "specmult/estimates.hpp"

namespace specmult {

/// Log-spaced t grid with midpoint weights for integrals against dt/t.
struct SquareFunctionGrid {
    std::vector<double> t;
    std::vector<double> w;  // per-node weight; sums to log(t_max/t_min)
    double t_min = 0.0, t_max = 0.0;

    static SquareFunctionGrid make(double t_min, double t_max, int nodes) {
        if (!(t_min > 0.0) || !(t_max > t_min) || nodes < 2)
            throw std::invalid_argument("square function grid: need 0 < t_min < t_max and >= 2 nodes");
        SquareFunctionGrid g;
        g.t_min = t_min;
        g.t_max = t_max;
        const double span = std::log(t_max / t_min);
        const double h = span / nodes;
        for (int i = 0; i < nodes; ++i) {
            g.t.push_back(t_min * std::exp((i + 0.5) * h));
            g.w.push_back(h);
        }
        return g;
    }

    SquareFunctionGrid refined() const {
        return make(t_min, t_max, static_cast<int>(t.size()) * 2);
    }
};

/// Default grid: t^m lambda effectively supported in [1e-3, 1e3] across the
/// positive spectrum, t_max additionally capped at 4x the diameter (skipped
/// for single-point spaces whose diameter is zero).
inline SquareFunctionGrid default_t_grid(const SpectralDecomposition& dec, int nodes = 96) {
    const int m = dec.order_m;
    const double lmax = std::max(dec.lambda_max(), 1e-300);
    const double lminp = dec.lambda_min_pos() > 0.0 ? dec.lambda_min_pos() : lmax;
    double t_min = std::pow(1e-3 / lmax, 1.0 / m);
    double t_max = std::pow(1e3 / lminp, 1.0 / m);
    if (dec.space->diameter() > 0.0) t_max = std::min(t_max, 4.0 * dec.space->diameter());
    if (!(t_max > t_min)) t_max = 2.0 * t_min;
    return SquareFunctionGrid::make(t_min, t_max, nodes);
}

namespace detail {

inline GridFunction square_function_once(const SpectralDecomposition& dec, const GridFunction& f,
                                         const SquareFunctionGrid& grid) {
    const MetricMeasureSpace& sp = *dec.space;
    const int n = sp.size();
    const int m = dec.order_m;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXcd coeffs = dec.analyze(f);
    for (std::size_t ti = 0; ti < grid.t.size(); ++ti) {
        const double t = grid.t[ti];
        const double tm = std::pow(t, m);
        Eigen::VectorXcd c = coeffs;
        for (int i = 0; i < n; ++i) {
            const double u = tm * dec.eigenvalues(i);
            c(i) *= u * std::exp(-u);  // psi_0(z) = z e^{-z}
        }
        const GridFunction g = dec.synthesize(c);
        for (int x = 0; x < n; ++x) {
            double ball_vol = 0.0, mass = 0.0;
            for (int y = 0; y < n; ++y)
                if (sp.dist(x, y) < t) {
                    ball_vol += sp.weight(y);
                    mass += std::norm(g(y)) * sp.weight(y);
                }
            acc(x) += grid.w[ti] * mass / ball_vol;
        }
    }
    GridFunction out(n);
    for (int x = 0; x < n; ++x) out(x) = std::sqrt(acc(x));
    return out;
}

}  // namespace detail

/// Conical square function Sf(x): the t-integral of the averaged squared
/// field psi_0(t^m L) f over the ball B(x,t). A one-shot refinement check
/// certifies the grid (doubling t-resolution must move ||Sf||_{L^2} < 1%).
inline GridFunction square_function(const SpectralDecomposition& dec, const GridFunction& f,
                                    const SquareFunctionGrid& grid, bool self_check = true) {
    if (f.size() != dec.space->size()) throw std::invalid_argument("square_function: size mismatch");
    GridFunction s = detail::square_function_once(dec, f, grid);
    if (self_check) {
        const GridFunction s2 = detail::square_function_once(dec, f, grid.refined());
        const double n1 = lp_norm(*dec.space, s, 2.0);
        const double n2 = lp_norm(*dec.space, s2, 2.0);
        const double scale = std::max(n1, n2);
        if (scale > 0.0 && std::abs(n1 - n2) > 0.01 * scale)
            throw std::runtime_error("square_function: t-grid resolution self-check failed");
    }
    return s;
}

/// H^p_L seminorm ||Sf||_{L^p}; vanishes on the kernel of L.
inline double hardy_norm(const SpectralDecomposition& dec, const GridFunction& f, double p,
                         const SquareFunctionGrid& grid, bool self_check = true) {
    if (!(p >= 1.0 && p <= 2.0)) throw std::invalid_argument("hardy_norm: p must be in [1,2]");
    return lp_norm(*dec.space, square_function(dec, f, grid, self_check), p);
}

/// Littlewood-Paley-Stein g*_lambda function with the full-space distance
/// kernel (s^{1/m}/(d(x,y)+s^{1/m}))^{D lambda}; the s-grid is the t-grid
/// pushed through s = t^m.
inline GridFunction g_star(const SpectralDecomposition& dec, const GridFunction& f, double lambda_param,
                           const SquareFunctionGrid& grid, double D) {
    if (!(lambda_param > 1.0)) throw std::invalid_argument("g_star: lambda must be > 1");
    const MetricMeasureSpace& sp = *dec.space;
    const int n = sp.size();
    const int m = dec.order_m;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXcd coeffs = dec.analyze(f);
    for (std::size_t ti = 0; ti < grid.t.size(); ++ti) {
        const double s = std::pow(grid.t[ti], m);
        const double ws = grid.w[ti] * m;  // ds/s = m dt/t on the pushed grid
        const double s1m = std::pow(s, 1.0 / m);
        Eigen::VectorXcd c = coeffs;
        for (int i = 0; i < n; ++i) {
            const double u = s * dec.eigenvalues(i);
            c(i) *= u * std::exp(-u);
        }
        const GridFunction g = dec.synthesize(c);
        for (int x = 0; x < n; ++x) {
            const double ball_vol = sp.ball_volume(x, s1m);
            double mass = 0.0;
            for (int y = 0; y < n; ++y) {
                const double kernel = std::pow(s1m / (sp.dist(x, y) + s1m), D * lambda_param);
                mass += kernel * std::norm(g(y)) * sp.weight(y);
            }
            acc(x) += ws * mass / ball_vol;
        }
    }
    GridFunction out(n);
    for (int x = 0; x < n; ++x) out(x) = std::sqrt(acc(x));
    return out;
}

/// Ratio table of the molecule inequality: rows k = 0..M, columns j up to
/// the first empty annulus. Valid when no entry exceeds 1 (+1e-8 slack).
struct MoleculeCertificate {
    Ball B;
    int M = 1;
    double eps = 1.0;
    Eigen::MatrixXd ratios;  // (M+1) x (j_count); LHS/RHS per cell
    double max_ratio = 0.0;
    GridFunction witness_b;

    bool valid() const { return max_ratio <= 1.0 + 1e-8; }

    json to_json() const {
        json j;
        j["center"] = B.center;
        j["radius"] = B.radius;
        j["M"] = M;
        j["eps"] = eps;
        j["max_ratio"] = max_ratio;
        j["valid"] = valid();
        std::vector<std::vector<double>> table;
        for (Eigen::Index r = 0; r < ratios.rows(); ++r) {
            std::vector<double> row;
            for (Eigen::Index c = 0; c < ratios.cols(); ++c) row.push_back(ratios(r, c));
            table.push_back(std::move(row));
        }
        j["ratios"] = table;
        return j;
    }
};

namespace detail {

inline Eigen::MatrixXd molecule_ratio_table(const SpectralDecomposition& dec, const GridFunction& b,
                                            const Ball& B, int M, double eps, int* j_count) {
    const MetricMeasureSpace& sp = *dec.space;
    const int m = dec.order_m;
    const double rm = std::pow(B.radius, m);
    std::vector<PointSet> annuli;
    for (int j = 0;; ++j) {
        PointSet u = sp.dyadic_annulus(B, j);
        if (u.empty()) break;
        annuli.push_back(std::move(u));
    }
    if (annuli.empty()) annuli.push_back({});
    *j_count = static_cast<int>(annuli.size());
    Eigen::MatrixXd table(M + 1, *j_count);
    for (int k = 0; k <= M; ++k) {
        const GridFunction gk = dec.apply_symbol(
            [rm, k](double lam) { return cplx{std::pow(rm * lam, k), 0.0}; }, b);
        for (int j = 0; j < *j_count; ++j) {
            const double lhs = lp_norm(sp, gk, 2.0, annuli[static_cast<std::size_t>(j)]);
            const double dil_vol = sp.ball_volume(B.center, std::ldexp(B.radius, j));
            const double rhs = std::pow(B.radius, m * M) * std::pow(2.0, -j * eps) / std::sqrt(dil_vol);
            table(k, j) = lhs / rhs;
        }
    }
    return table;
}

}  // namespace detail

/// Builds a molecule witness from the heat-smoothed normalized ball
/// indicator: b0 = r^{mM} e^{-r^m L}(chi_B / ||chi_B||), kernel-projected,
/// then rescaled so the worst ratio-table cell sits exactly at 1. Returns
/// a = L^M b together with the certificate.
inline std::pair<GridFunction, MoleculeCertificate> make_molecule(const SpectralDecomposition& dec,
                                                                  const Ball& B, int M, double eps) {
    if (M < 1) throw std::invalid_argument("make_molecule: M must be >= 1");
    if (!(eps > 0.0)) throw std::invalid_argument("make_molecule: eps must be positive");
    if (!(B.radius > 0.0)) throw std::invalid_argument("make_molecule: ball radius must be positive");
    const MetricMeasureSpace& sp = *dec.space;
    const int m = dec.order_m;
    const PointSet inside = sp.ball(B.center, B.radius);
    GridFunction g = GridFunction::Zero(sp.size());
    for (PointId x : inside) g(x) = 1.0;
    const double gn = lp_norm(sp, g, 2.0);
    if (gn == 0.0) throw std::runtime_error("make_molecule: empty ball");
    g /= gn;
    const InjectiveSplit split = injective_split(dec);
    g = kernel_project_out(split, g);
    const double rm = std::pow(B.radius, m);
    GridFunction b0 = dec.apply_symbol([rm](double lam) { return std::exp(cplx{-rm * lam, 0.0}); }, g);
    b0 *= std::pow(B.radius, m * M);
    if (lp_norm(sp, b0, 2.0) < 1e-300)
        throw std::runtime_error("make_molecule: witness vanished (ball inside the kernel shadow)");
    MoleculeCertificate cert;
    cert.B = B;
    cert.M = M;
    cert.eps = eps;
    int j_count = 0;
    Eigen::MatrixXd table = detail::molecule_ratio_table(dec, b0, B, M, eps, &j_count);
    const double max_ratio = table.maxCoeff();
    if (!(max_ratio > 0.0)) throw std::runtime_error("make_molecule: degenerate ratio table");
    cert.witness_b = b0 / max_ratio;
    cert.ratios = table / max_ratio;
    cert.max_ratio = cert.ratios.maxCoeff();
    const GridFunction a = dec.apply_symbol(
        [M](double lam) { return cplx{std::pow(lam, M), 0.0}; }, cert.witness_b);
    return {a, cert};
}

/// Re-evaluates the molecule inequality table for a given (a, b) pair and
/// verifies a = L^M b.
inline MoleculeCertificate check_molecule(const SpectralDecomposition& dec, const GridFunction& a,
                                          const GridFunction& b, const Ball& B, int M, double eps) {
    const GridFunction lmb =
        dec.apply_symbol([M](double lam) { return cplx{std::pow(lam, M), 0.0}; }, b);
    const double scale = std::max(lp_norm(*dec.space, a, 2.0), lp_norm(*dec.space, lmb, 2.0));
    const double err = lp_norm(*dec.space, GridFunction(a - lmb), 2.0);
    if (scale > 0.0 && err > 1e-9 * scale)
        throw std::runtime_error("check_molecule: witness mismatch (a != L^M b)");
    MoleculeCertificate cert;
    cert.B = B;
    cert.M = M;
    cert.eps = eps;
    cert.witness_b = b;
    int j_count = 0;
    cert.ratios = detail::molecule_ratio_table(dec, b, B, M, eps, &j_count);
    cert.max_ratio = cert.ratios.size() ? cert.ratios.maxCoeff() : 0.0;
    return cert;
}

/// Test family for the H^1 operator-norm estimator: generated molecules over
/// spread-out centers and radii plus kernel-projected random functions.
inline std::vector<GridFunction> make_h1_test_family(const SpectralDecomposition& dec, std::uint64_t seed,
                                                     int n_molecules, int n_random) {
    const MetricMeasureSpace& sp = *dec.space;
    std::vector<GridFunction> fam;
    Rng rng(seed);
    const InjectiveSplit split = injective_split(dec);
    const double base_r = std::max(1.5, sp.diameter() / 16.0);
    for (int i = 0; i < n_molecules; ++i) {
        const PointId c = static_cast<PointId>(rng.below(static_cast<std::uint64_t>(sp.size())));
        const double r = base_r * (1.0 + static_cast<double>(i % 3));
        const int M = 1 + (i % 2);
        try {
            fam.push_back(make_molecule(dec, Ball{c, r}, M, 1.0).first);
        } catch (const std::runtime_error&) {
            // kernel-shadowed ball; skip
        }
    }
    for (int i = 0; i < n_random; ++i) {
        GridFunction f(sp.size());
        for (int x = 0; x < sp.size(); ++x) f(x) = rng.normal_complex();
        fam.push_back(kernel_project_out(split, f));
    }
    return fam;
}

/// Family-sup lower estimate of ||T||_{H^1_L -> H^1_L}: the largest ratio
/// hardy_norm(Tf)/hardy_norm(f) over usable family members. A lower bound
/// by construction; reports label it est-LB.
inline double h1_operator_norm_estimate(const SpectralDecomposition& dec, const WeightedOperator& T,
                                        const std::vector<GridFunction>& family,
                                        const SquareFunctionGrid& grid) {
    double best = 0.0;
    int usable = 0;
    for (const GridFunction& f : family) {
        const double denom = hardy_norm(dec, f, 1.0, grid, false);
        if (denom <= 1e-12) continue;
        ++usable;
        const double num = hardy_norm(dec, T.apply(f), 1.0, grid, false);
        best = std::max(best, num / denom);
    }
    if (usable == 0) throw std::runtime_error("h1_operator_norm_estimate: no usable test functions");
    return best;
}

}  // namespace specmult
