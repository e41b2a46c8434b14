#pragma once

#include <Eigen/Dense>
#include <array>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <utility>

#include <json.hpp>

#include "specmult/common.hpp"

namespace specmult {

using json = nlohmann::ordered_json;

using PointId = int;
using PointSet = std::vector<PointId>;          // kept sorted ascending
using GridFunction = Eigen::VectorXcd;          // one complex value per point

struct Ball {
    PointId center = 0;
    double radius = 0.0;
};

/// Fitted constants from a log-scale regression plus diagnostics.
/// `exponent` is the model exponent (D, b, delta, ...), `constant` the
/// certified prefactor (inflated so every retained sample obeys the bound).
struct FitReport {
    double exponent = 0.0;
    double constant = 0.0;
    double residual = 0.0;   // R^2 of the log fit; 1 for a perfect line
    int sample_count = 0;
    bool degenerate = false;
    double exponent_alt = 0.0;  // secondary estimate where defined (max-ratio D)
    std::vector<std::string> warnings;

    json to_json() const {
        json j;
        j["exponent"] = exponent;
        j["constant"] = constant;
        j["residual"] = residual;
        j["sample_count"] = sample_count;
        j["degenerate"] = degenerate;
        j["exponent_alt"] = exponent_alt;
        j["warnings"] = warnings;
        return j;
    }
};

/// Finite metric measure space: n points, symmetric distance matrix and
/// positive point weights. Immutable after construction; everything else in
/// the library (balls, annuli, norms, operators) derives from it.
class MetricMeasureSpace {
public:
    MetricMeasureSpace(Eigen::MatrixXd dist, Eigen::VectorXd weight,
                       Eigen::MatrixXi adjacency = Eigen::MatrixXi(), std::string family = "custom")
        : dist_(std::move(dist)),
          weight_(std::move(weight)),
          adjacency_(std::move(adjacency)),
          family_(std::move(family)) {
        const Eigen::Index n = dist_.rows();
        if (n < 1) throw std::invalid_argument("space: need at least one point");
        if (dist_.cols() != n) throw std::invalid_argument("space: dist must be square");
        if (weight_.size() != n) throw std::invalid_argument("space: weight size mismatch");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(weight_[i] > 0.0)) throw std::invalid_argument("space: weights must be positive");
            if (dist_(i, i) != 0.0) throw std::invalid_argument("space: dist(x,x) must be 0");
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (dist_(i, j) != dist_(j, i)) throw std::invalid_argument("space: dist not symmetric");
                if (!(dist_(i, j) > 0.0)) throw std::invalid_argument("space: dist(x,y) must be positive for x!=y");
            }
        }
        diameter_ = (n == 1) ? 0.0 : dist_.maxCoeff();
        total_mass_ = weight_.sum();
    }

    int size() const { return static_cast<int>(dist_.rows()); }
    double dist(PointId x, PointId y) const { return dist_(x, y); }
    const Eigen::MatrixXd& dist_matrix() const { return dist_; }
    double weight(PointId x) const { return weight_[x]; }
    const Eigen::VectorXd& weights() const { return weight_; }
    double total_mass() const { return total_mass_; }
    double diameter() const { return diameter_; }
    const std::string& family() const { return family_; }
    bool has_adjacency() const { return adjacency_.size() > 0; }
    const Eigen::MatrixXi& adjacency() const { return adjacency_; }

    /// Open ball: points at distance strictly less than r.
    PointSet ball(PointId x, double r) const {
        check_point(x);
        PointSet out;
        for (int y = 0; y < size(); ++y)
            if (dist_(x, y) < r) out.push_back(y);
        return out;
    }

    double volume(const PointSet& set) const {
        double v = 0.0;
        for (PointId y : set) v += weight_[y];
        return v;
    }

    double ball_volume(PointId x, double r) const {
        check_point(x);
        double v = 0.0;
        for (int y = 0; y < size(); ++y)
            if (dist_(x, y) < r) v += weight_[y];
        return v;
    }

    /// A(x,r,k) = B(x,(k+1)r) \ B(x,kr).
    PointSet annulus(PointId x, double r, int k) const {
        if (!(r > 0.0)) throw std::invalid_argument("annulus: r must be positive");
        if (k < 0) throw std::invalid_argument("annulus: k must be >= 0");
        check_point(x);
        PointSet out;
        for (int y = 0; y < size(); ++y) {
            const double d = dist_(x, y);
            if (d >= k * r && d < (k + 1) * r) out.push_back(y);
        }
        return out;
    }

    /// U_0(B) = B and U_j(B) = 2^j B \ 2^{j-1} B for j >= 1.
    PointSet dyadic_annulus(const Ball& B, int j) const {
        if (j < 0) throw std::invalid_argument("dyadic_annulus: j must be >= 0");
        check_point(B.center);
        if (j == 0) return ball(B.center, B.radius);
        const double inner = std::ldexp(B.radius, j - 1);
        const double outer = std::ldexp(B.radius, j);
        PointSet out;
        for (int y = 0; y < size(); ++y) {
            const double d = dist_(B.center, y);
            if (d >= inner && d < outer) out.push_back(y);
        }
        return out;
    }

    json to_json() const {
        json j;
        j["family"] = family_;
        j["points"] = size();
        std::vector<double> d;
        d.reserve(static_cast<std::size_t>(size()) * static_cast<std::size_t>(size()));
        for (int r = 0; r < size(); ++r)
            for (int c = 0; c < size(); ++c) d.push_back(dist_(r, c));
        j["dist"] = d;
        std::vector<double> w(weight_.data(), weight_.data() + weight_.size());
        j["weights"] = w;
        if (has_adjacency()) {
            std::vector<int> a;
            a.reserve(d.size());
            for (int r = 0; r < size(); ++r)
                for (int c = 0; c < size(); ++c) a.push_back(adjacency_(r, c));
            j["adjacency"] = a;
        }
        return j;
    }

    static MetricMeasureSpace from_json(const json& j) {
        const int n = j.at("points").get<int>();
        const auto d = j.at("dist").get<std::vector<double>>();
        const auto w = j.at("weights").get<std::vector<double>>();
        if (static_cast<int>(d.size()) != n * n || static_cast<int>(w.size()) != n)
            throw std::invalid_argument("space json: inconsistent sizes");
        Eigen::MatrixXd dist(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) dist(r, c) = d[static_cast<std::size_t>(r * n + c)];
        Eigen::VectorXd weight(n);
        for (int i = 0; i < n; ++i) weight[i] = w[static_cast<std::size_t>(i)];
        Eigen::MatrixXi adj;
        if (j.contains("adjacency")) {
            const auto a = j.at("adjacency").get<std::vector<int>>();
            adj.resize(n, n);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) adj(r, c) = a[static_cast<std::size_t>(r * n + c)];
        }
        return MetricMeasureSpace(std::move(dist), std::move(weight), std::move(adj),
                                  j.value("family", std::string("custom")));
    }

    std::uint64_t hash() const { return fnv1a(to_json().dump()); }

private:
    void check_point(PointId x) const {
        if (x < 0 || x >= size()) throw std::invalid_argument("space: point id out of range");
    }

    Eigen::MatrixXd dist_;
    Eigen::VectorXd weight_;
    Eigen::MatrixXi adjacency_;
    std::string family_;
    double diameter_ = 0.0;
    double total_mass_ = 0.0;
};

using SpacePtr = std::shared_ptr<const MetricMeasureSpace>;

namespace detail {

inline Eigen::MatrixXd bfs_all_pairs(const Eigen::MatrixXi& adj) {
    const int n = static_cast<int>(adj.rows());
    Eigen::MatrixXd dist = Eigen::MatrixXd::Constant(n, n, -1.0);
    for (int s = 0; s < n; ++s) {
        std::deque<int> queue{s};
        dist(s, s) = 0.0;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int v = 0; v < n; ++v) {
                if (adj(u, v) && dist(s, v) < 0.0) {
                    dist(s, v) = dist(s, u) + 1.0;
                    queue.push_back(v);
                }
            }
        }
        for (int v = 0; v < n; ++v)
            if (dist(s, v) < 0.0) throw std::invalid_argument("build_space: graph must be connected");
    }
    return dist;
}

struct GasketLevel {
    std::vector<std::pair<long, long>> coords;
    std::vector<std::pair<int, int>> edges;
    std::array<int, 3> corners{};
};

// Sierpinski gasket graph: three half-scale copies glued at corners.
inline GasketLevel sierpinski_level(int level) {
    GasketLevel g;
    if (level == 0) {
        g.coords = {{0, 0}, {2, 0}, {1, 1}};
        g.edges = {{0, 1}, {0, 2}, {1, 2}};
        g.corners = {0, 1, 2};
        return g;
    }
    const GasketLevel prev = sierpinski_level(level - 1);
    const long span = 1L << (level + 1);  // x-extent of the current level
    const std::array<std::pair<long, long>, 3> offsets = {
        std::pair<long, long>{0, 0},
        std::pair<long, long>{span / 2, 0},
        std::pair<long, long>{span / 4, span / 4}};
    std::map<std::pair<long, long>, int> index;
    std::map<std::pair<int, int>, bool> edge_set;
    g.coords.clear();
    auto intern = [&](std::pair<long, long> c) {
        auto it = index.find(c);
        if (it != index.end()) return it->second;
        const int id = static_cast<int>(g.coords.size());
        index.emplace(c, id);
        g.coords.push_back(c);
        return id;
    };
    for (const auto& off : offsets) {
        std::vector<int> remap(prev.coords.size());
        for (std::size_t i = 0; i < prev.coords.size(); ++i)
            remap[i] = intern({prev.coords[i].first + off.first, prev.coords[i].second + off.second});
        for (const auto& [a, b] : prev.edges) {
            const int u = remap[static_cast<std::size_t>(a)], v = remap[static_cast<std::size_t>(b)];
            edge_set[{std::min(u, v), std::max(u, v)}] = true;
        }
    }
    for (const auto& [e, _] : edge_set) g.edges.push_back(e);
    g.corners = {intern({0, 0}), intern({span, 0}), intern({span / 2, span / 2})};
    return g;
}

}  // namespace detail

struct SpaceSpec {
    std::string family = "path";          // path|cycle|grid2d|binary_tree|sierpinski|custom
    int n = 1;                            // path/cycle size, binary_tree depth, sierpinski level
    int nx = 0, ny = 0;                   // grid2d
    std::string weight_scheme = "unit";   // unit|degree|custom
    std::vector<double> custom_weights;
    json custom_space;                    // for family == custom

    static SpaceSpec from_json(const json& j) {
        SpaceSpec s;
        s.family = j.value("family", std::string("path"));
        s.n = j.value("n", 1);
        s.nx = j.value("nx", 0);
        s.ny = j.value("ny", 0);
        s.weight_scheme = j.value("weights", std::string("unit"));
        if (j.contains("custom_weights")) s.custom_weights = j.at("custom_weights").get<std::vector<double>>();
        if (j.contains("space")) s.custom_space = j.at("space");
        return s;
    }

    json to_json() const {
        json j;
        j["family"] = family;
        j["n"] = n;
        if (nx > 0) j["nx"] = nx;
        if (ny > 0) j["ny"] = ny;
        j["weights"] = weight_scheme;
        if (!custom_weights.empty()) j["custom_weights"] = custom_weights;
        return j;
    }
};

/// l^1 product: points are pairs, distance adds, weights multiply.
inline MetricMeasureSpace product(const MetricMeasureSpace& a, const MetricMeasureSpace& b) {
    const int na = a.size(), nb = b.size(), n = na * nb;
    Eigen::MatrixXd dist(n, n);
    Eigen::VectorXd weight(n);
    Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
    const bool has_adj = a.has_adjacency() && b.has_adjacency();
    auto id = [nb](int i, int j) { return i * nb + j; };
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) {
            weight[id(i, j)] = a.weight(i) * b.weight(j);
            for (int k = 0; k < na; ++k)
                for (int l = 0; l < nb; ++l) {
                    dist(id(i, j), id(k, l)) = a.dist(i, k) + b.dist(j, l);
                    if (has_adj) {
                        const bool edge = (i == k && b.adjacency()(j, l)) || (j == l && a.adjacency()(i, k));
                        adj(id(i, j), id(k, l)) = edge ? 1 : 0;
                    }
                }
        }
    return MetricMeasureSpace(std::move(dist), std::move(weight), has_adj ? std::move(adj) : Eigen::MatrixXi(),
                              a.family() + "x" + b.family());
}

inline MetricMeasureSpace build_space(const SpaceSpec& spec) {
    auto finish = [&spec](Eigen::MatrixXi adj, const std::string& family) {
        const int n = static_cast<int>(adj.rows());
        Eigen::MatrixXd dist = (n == 1) ? Eigen::MatrixXd::Zero(1, 1) : detail::bfs_all_pairs(adj);
        Eigen::VectorXd weight = Eigen::VectorXd::Ones(n);
        if (spec.weight_scheme == "degree") {
            for (int i = 0; i < n; ++i) weight[i] = std::max(1, adj.row(i).sum());
        } else if (spec.weight_scheme == "custom") {
            if (static_cast<int>(spec.custom_weights.size()) != n)
                throw std::invalid_argument("build_space: custom weight size mismatch");
            for (int i = 0; i < n; ++i) weight[i] = spec.custom_weights[static_cast<std::size_t>(i)];
        } else if (spec.weight_scheme != "unit") {
            throw std::invalid_argument("build_space: unknown weight scheme " + spec.weight_scheme);
        }
        return MetricMeasureSpace(std::move(dist), std::move(weight), std::move(adj), family);
    };

    if (spec.family == "path" || spec.family == "cycle") {
        if (spec.n < 1) throw std::invalid_argument("build_space: size must be >= 1");
        const int n = spec.n;
        Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
        for (int i = 0; i + 1 < n; ++i) adj(i, i + 1) = adj(i + 1, i) = 1;
        if (spec.family == "cycle" && n > 2) adj(0, n - 1) = adj(n - 1, 0) = 1;
        return finish(std::move(adj), spec.family);
    }
    if (spec.family == "grid2d") {
        const int nx = spec.nx > 0 ? spec.nx : spec.n;
        const int ny = spec.ny > 0 ? spec.ny : spec.n;
        if (nx < 1 || ny < 1) throw std::invalid_argument("build_space: size must be >= 1");
        SpaceSpec px = spec;
        px.family = "path";
        px.n = nx;
        px.weight_scheme = "unit";
        px.custom_weights.clear();
        SpaceSpec py = px;
        py.n = ny;
        MetricMeasureSpace g = product(build_space(px), build_space(py));
        if (spec.weight_scheme == "unit") return g;
        Eigen::MatrixXi adj = g.adjacency();
        return finish(std::move(adj), "grid2d");
    }
    if (spec.family == "binary_tree") {
        if (spec.n < 0) throw std::invalid_argument("build_space: depth must be >= 0");
        const int n = (1 << (spec.n + 1)) - 1;
        Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
        for (int i = 1; i < n; ++i) {
            const int parent = (i - 1) / 2;
            adj(i, parent) = adj(parent, i) = 1;
        }
        return finish(std::move(adj), "binary_tree");
    }
    if (spec.family == "sierpinski") {
        if (spec.n < 0) throw std::invalid_argument("build_space: level must be >= 0");
        const detail::GasketLevel g = detail::sierpinski_level(spec.n);
        const int n = static_cast<int>(g.coords.size());
        Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
        for (const auto& [a, b] : g.edges) adj(a, b) = adj(b, a) = 1;
        return finish(std::move(adj), "sierpinski");
    }
    if (spec.family == "custom") {
        return MetricMeasureSpace::from_json(spec.custom_space);
    }
    throw std::invalid_argument("build_space: unknown family " + spec.family);
}

inline PointSet ball(const MetricMeasureSpace& space, PointId x, double r) {
    if (r < 0.0) throw std::invalid_argument("ball: radius must be >= 0");
    return space.ball(x, r);
}

inline PointSet annulus(const MetricMeasureSpace& space, PointId x, double r, int k) {
    return space.annulus(x, r, k);
}

inline PointSet dyadic_annulus(const MetricMeasureSpace& space, const Ball& B, int j) {
    return space.dyadic_annulus(B, j);
}

/// Weighted L^p norm on the whole space; p = inf gives the max of |f|.
inline double lp_norm(const MetricMeasureSpace& space, const GridFunction& f, double p) {
    if (f.size() != space.size()) throw std::invalid_argument("lp_norm: f size mismatch");
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (Eigen::Index i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i]));
        return m;
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i)
        acc += std::pow(std::abs(f[i]), p) * space.weight(static_cast<PointId>(i));
    return std::pow(acc, 1.0 / p);
}

inline double lp_norm(const MetricMeasureSpace& space, const GridFunction& f, double p, const PointSet& on) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (PointId x : on) m = std::max(m, std::abs(f[x]));
        return m;
    }
    double acc = 0.0;
    for (PointId x : on) acc += std::pow(std::abs(f[x]), p) * space.weight(x);
    return std::pow(acc, 1.0 / p);
}

/// Doubling-dimension fit: regress log mu(B(x,lam*r)) - log mu(B(x,r))
/// against log lam over the sampled centers, radii, and dilation factors.
/// `exponent` is the slope-fit D; `exponent_alt` the smallest D making the
/// volume bound hold with prefactor C <= 8 on the sample.
inline FitReport fit_dimension(const MetricMeasureSpace& space, const std::vector<double>& radius_grid,
                               const std::vector<PointId>& center_sample,
                               const std::vector<double>& lambdas = {2.0, 4.0}) {
    FitReport rep;
    std::vector<double> xs, ys;
    for (PointId x : center_sample)
        for (double r : radius_grid)
            for (double lam : lambdas) {
                if (!(r > 0.0) || !(lam > 1.0)) continue;
                const double v0 = space.ball_volume(x, r);
                const double v1 = space.ball_volume(x, lam * r);
                if (v0 <= 0.0 || v1 <= 0.0) continue;
                xs.push_back(std::log(lam));
                ys.push_back(std::log(v1 / v0));
            }
    rep.sample_count = static_cast<int>(xs.size());
    if (rep.sample_count < 2) {
        rep.degenerate = true;
        rep.warnings.push_back("not enough samples for a dimension fit");
        return rep;
    }
    bool all_equal = true;
    for (double y : ys)
        if (y != 0.0) all_equal = false;
    if (all_equal) {
        rep.exponent = 0.0;
        rep.constant = 1.0;
        rep.residual = 1.0;
        rep.degenerate = true;
        rep.warnings.push_back("all sampled ball volumes equal");
        return rep;
    }
    const LineFit lf = fit_line(xs, ys);
    rep.exponent = lf.slope;
    rep.residual = lf.r2;
    // inflate C so that v1 <= C * lam^D * v0 holds on every sample
    double c = std::exp(lf.intercept);
    double d_maxratio = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        c = std::max(c, std::exp(ys[i] - rep.exponent * xs[i]));
        d_maxratio = std::max(d_maxratio, (ys[i] - std::log(8.0)) / xs[i]);
    }
    rep.constant = c;
    rep.exponent_alt = std::max(0.0, d_maxratio);
    return rep;
}

/// Greedy farthest-point net: a maximal s/2-separated subset of B(y,r).
/// By construction the returned points are pairwise more than s/2 apart and
/// the balls B(y_k, s) cover B(y,r).
inline PointSet covering_net(const MetricMeasureSpace& space, PointId y, double r, double s) {
    if (!(s > 0.0) || r < s) throw std::invalid_argument("covering_net: need r >= s > 0");
    const PointSet candidates = space.ball(y, r);
    PointSet net;
    if (candidates.empty()) return net;
    std::vector<double> min_dist(candidates.size(), std::numeric_limits<double>::infinity());
    // start from the center (y is always in B(y,r) for r > 0)
    net.push_back(y);
    for (std::size_t i = 0; i < candidates.size(); ++i) min_dist[i] = space.dist(y, candidates[i]);
    while (true) {
        double best = -1.0;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (min_dist[i] > best) {
                best = min_dist[i];
                best_i = i;
            }
        if (best <= s / 2.0) break;
        const PointId p = candidates[best_i];
        net.push_back(p);
        for (std::size_t i = 0; i < candidates.size(); ++i)
            min_dist[i] = std::min(min_dist[i], space.dist(p, candidates[i]));
    }
    std::sort(net.begin(), net.end());
    return net;
}

/// Overlap multiplicity of a net: max number of balls B(y_k,s) containing a
/// single point of B(y,r). Reported, not enforced.
inline int covering_multiplicity(const MetricMeasureSpace& space, PointId y, double r, double s,
                                 const PointSet& net) {
    int mult = 0;
    for (PointId x : space.ball(y, r)) {
        int m = 0;
        for (PointId c : net)
            if (space.dist(c, x) < s) ++m;
        mult = std::max(mult, m);
    }
    return mult;
}

struct VolumeComparabilityReport {
    double min_integral = 0.0;
    double max_integral = 0.0;
    double constant = 0.0;  // the C the report was checked against
    bool within = false;

    json to_json() const {
        json j;
        j["min_integral"] = min_integral;
        j["max_integral"] = max_integral;
        j["constant"] = constant;
        j["within"] = within;
        return j;
    }
};

/// Evaluates int_{B(x,r)} 1/mu(B(y,r)) dmu(y) for every center x and checks
/// that all values land in [1/C, C].
inline VolumeComparabilityReport check_volume_comparability(const MetricMeasureSpace& space, double r,
                                                            double C) {
    if (!(r > 0.0)) throw std::invalid_argument("check_volume_comparability: r must be positive");
    if (!(C >= 1.0)) throw std::invalid_argument("check_volume_comparability: C must be >= 1");
    VolumeComparabilityReport rep;
    rep.constant = C;
    rep.min_integral = std::numeric_limits<double>::infinity();
    rep.max_integral = 0.0;
    for (int x = 0; x < space.size(); ++x) {
        double integral = 0.0;
        for (PointId y : space.ball(x, r)) integral += space.weight(y) / space.ball_volume(y, r);
        rep.min_integral = std::min(rep.min_integral, integral);
        rep.max_integral = std::max(rep.max_integral, integral);
    }
    rep.within = rep.min_integral >= 1.0 / C - 1e-12 && rep.max_integral <= C + 1e-12;
    return rep;
}

/// Exhaustive triangle-inequality check for small spaces, sampled otherwise.
inline bool check_metric_axioms(const MetricMeasureSpace& space, std::uint64_t seed = 0,
                                int samples = 200000) {
    const int n = space.size();
    auto triple_ok = [&space](int x, int y, int z) {
        return space.dist(x, z) <= space.dist(x, y) + space.dist(y, z) + 1e-12;
    };
    if (n <= 64) {
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y)
                for (int z = 0; z < n; ++z)
                    if (!triple_ok(x, y, z)) return false;
        return true;
    }
    Rng rng(seed);
    for (int i = 0; i < samples; ++i) {
        const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const int z = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        if (!triple_ok(x, y, z)) return false;
    }
    return true;
}

}  // namespace specmult
