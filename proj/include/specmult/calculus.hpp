#pragma once

#include <Eigen/Eigenvalues>

#include "specmult/profiles.hpp"

namespace specmult {

/// A linear operator on grid functions, (Tf)(x) = sum_y M[x][y] f(y),
/// carried together with its space. Self-adjointness is always meant with
/// respect to the weighted inner product <f,g> = sum f conj(g) mu; results
/// of the functional calculus with complex symbols are stored here too and
/// need not be self-adjoint.
class WeightedOperator {
public:
    WeightedOperator(SpacePtr space, Eigen::MatrixXcd mat, int order_m = 2)
        : space_(std::move(space)), mat_(std::move(mat)), order_m_(order_m) {
        if (!space_) throw std::invalid_argument("operator: null space");
        if (mat_.rows() != space_->size() || mat_.cols() != space_->size())
            throw std::invalid_argument("operator: matrix size mismatch");
    }

    const SpacePtr& space_ptr() const { return space_; }
    const MetricMeasureSpace& space() const { return *space_; }
    const Eigen::MatrixXcd& matrix() const { return mat_; }
    int order_m() const { return order_m_; }
    int size() const { return static_cast<int>(mat_.rows()); }

    GridFunction apply(const GridFunction& f) const { return mat_ * f; }

    /// mu(x) M[x][y] == conj(mu(y) M[y][x]) up to a relative tolerance.
    bool is_weighted_self_adjoint(double rel_tol = 1e-10) const {
        const double scale = std::max(mat_.cwiseAbs().maxCoeff(), 1e-300);
        for (int x = 0; x < size(); ++x)
            for (int y = 0; y <= x; ++y) {
                const cplx lhs = space_->weight(x) * mat_(x, y);
                const cplx rhs = std::conj(space_->weight(y) * mat_(y, x));
                if (std::abs(lhs - rhs) > rel_tol * scale * std::max(space_->weight(x), space_->weight(y)))
                    return false;
            }
        return true;
    }

    /// Similarity transform to the mu-symmetrized matrix D^{1/2} M D^{-1/2}.
    Eigen::MatrixXcd symmetrized() const {
        const int n = size();
        Eigen::MatrixXcd s(n, n);
        for (int x = 0; x < n; ++x) {
            const double sx = std::sqrt(space_->weight(x));
            for (int y = 0; y < n; ++y) s(x, y) = sx * mat_(x, y) / std::sqrt(space_->weight(y));
        }
        return s;
    }

    /// Operator norm on L^2(mu): largest singular value of the symmetrization.
    double norm22() const {
        return symmetrized().jacobiSvd().singularValues()(0);
    }

    json to_json() const {
        json j;
        j["space_hash"] = hex64(space_->hash());
        j["m"] = order_m_;
        std::vector<double> re, im;
        re.reserve(static_cast<std::size_t>(size()) * static_cast<std::size_t>(size()));
        im.reserve(re.capacity());
        for (int r = 0; r < size(); ++r)
            for (int c = 0; c < size(); ++c) {
                re.push_back(mat_(r, c).real());
                im.push_back(mat_(r, c).imag());
            }
        j["matrix_re"] = re;
        j["matrix_im"] = im;
        return j;
    }

    static WeightedOperator from_json(const json& j, SpacePtr space) {
        const int n = space->size();
        const auto re = j.at("matrix_re").get<std::vector<double>>();
        const auto im = j.at("matrix_im").get<std::vector<double>>();
        if (static_cast<int>(re.size()) != n * n || static_cast<int>(im.size()) != n * n)
            throw std::invalid_argument("operator json: size mismatch");
        if (j.contains("space_hash") && j.at("space_hash").get<std::string>() != hex64(space->hash()))
            throw std::invalid_argument("operator json: space hash mismatch");
        Eigen::MatrixXcd m(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                m(r, c) = cplx{re[static_cast<std::size_t>(r * n + c)], im[static_cast<std::size_t>(r * n + c)]};
        return WeightedOperator(std::move(space), std::move(m), j.value("m", 2));
    }

    std::uint64_t hash() const { return fnv1a(to_json().dump()); }

private:
    SpacePtr space_;
    Eigen::MatrixXcd mat_;
    int order_m_;
};

/// Full eigensystem of a non-negative self-adjoint operator, in the weighted
/// inner product. Eigenvalues ascend and tiny negative values (round-off)
/// are clamped to zero; genuinely negative spectrum is rejected.
struct SpectralDecomposition {
    SpacePtr space;
    Eigen::VectorXd eigenvalues;      // ascending, >= 0
    Eigen::MatrixXcd eigenvectors;    // columns; <v_i, v_j>_mu = delta_ij
    int order_m = 2;

    int size() const { return static_cast<int>(eigenvalues.size()); }
    double lambda_max() const { return eigenvalues.size() ? eigenvalues(eigenvalues.size() - 1) : 0.0; }

    /// smallest strictly positive eigenvalue (0 if none)
    double lambda_min_pos(double kernel_tol = -1.0) const {
        const double tol = kernel_tol >= 0.0 ? kernel_tol : 1e-8 * lambda_max();
        for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
            if (eigenvalues(i) > tol) return eigenvalues(i);
        return 0.0;
    }

    /// coefficients c_i = <f, v_i>_mu
    Eigen::VectorXcd analyze(const GridFunction& f) const {
        const int n = size();
        Eigen::VectorXcd c(n);
        for (int i = 0; i < n; ++i) {
            cplx acc = 0.0;
            for (int x = 0; x < n; ++x)
                acc += f(x) * std::conj(eigenvectors(x, i)) * space->weight(x);
            c(i) = acc;
        }
        return c;
    }

    GridFunction synthesize(const Eigen::VectorXcd& coeffs) const { return eigenvectors * coeffs; }

    /// F(L) f without forming the full matrix.
    GridFunction apply_symbol(const std::function<cplx(double)>& symbol, const GridFunction& f) const {
        Eigen::VectorXcd c = analyze(f);
        for (int i = 0; i < size(); ++i) c(i) *= symbol(eigenvalues(i));
        return synthesize(c);
    }

    /// F(L) = sum_i F(lambda_i) Pi_i as a full matrix.
    WeightedOperator apply_function(const std::function<cplx(double)>& symbol) const {
        const int n = size();
        Eigen::MatrixXcd scaled = eigenvectors;
        for (int i = 0; i < n; ++i) scaled.col(i) *= symbol(eigenvalues(i));
        // adjoint rows in the weighted product: conj(V)^T D
        Eigen::MatrixXcd vadj = eigenvectors.adjoint();
        for (int x = 0; x < n; ++x) vadj.col(x) *= space->weight(x);
        return WeightedOperator(space, scaled * vadj, order_m);
    }

    WeightedOperator apply_function(const MultiplierProfile& profile) const {
        for (int i = 0; i < size(); ++i)
            if (!profile.evaluable_at(eigenvalues(i)))
                throw std::domain_error("apply_function: profile not evaluable at an eigenvalue");
        return apply_function([&profile](double lam) { return profile.eval(lam); });
    }
};

inline SpectralDecomposition decompose(const WeightedOperator& op) {
    if (!op.is_weighted_self_adjoint())
        throw std::invalid_argument("decompose: operator is not self-adjoint in the weighted product");
    const Eigen::MatrixXcd sym = op.symmetrized();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym);
    if (solver.info() != Eigen::Success) throw std::runtime_error("decompose: eigensolver failed");
    SpectralDecomposition dec;
    dec.space = op.space_ptr();
    dec.order_m = op.order_m();
    dec.eigenvalues = solver.eigenvalues();
    const int n = op.size();
    const double scale = std::max(std::abs(dec.eigenvalues(0)), std::abs(dec.eigenvalues(n - 1)));
    const double clamp_tol = 1e-8 * std::max(scale, 1e-300);
    for (int i = 0; i < n; ++i) {
        if (dec.eigenvalues(i) < -clamp_tol)
            throw std::runtime_error("decompose: negative eigenvalue beyond clamp tolerance");
        if (dec.eigenvalues(i) < 0.0) dec.eigenvalues(i) = 0.0;
    }
    dec.eigenvectors = solver.eigenvectors();
    for (int x = 0; x < n; ++x)
        dec.eigenvectors.row(x) /= std::sqrt(op.space().weight(x));
    return dec;
}

enum class OperatorKind { Laplacian, Bilaplacian, Schroedinger };

/// Graph Laplacian adapted to the weighted inner product: M = D^{-1}(Deg-Adj)
/// is self-adjoint w.r.t. mu and non-negative; with unit weights this is the
/// combinatorial Laplacian. Bilaplacian squares it (order 4), Schroedinger
/// adds a potential on the diagonal (shifted up if it dips below zero).
inline WeightedOperator build_operator(SpacePtr space, OperatorKind kind,
                                       const Eigen::VectorXd& potential = Eigen::VectorXd()) {
    const int n = space->size();
    Eigen::MatrixXcd lap = Eigen::MatrixXcd::Zero(n, n);
    if (n > 1) {
        if (!space->has_adjacency())
            throw std::invalid_argument("build_operator: space carries no adjacency");
        const Eigen::MatrixXi& adj = space->adjacency();
        for (int x = 0; x < n; ++x) {
            double deg = 0.0;
            for (int y = 0; y < n; ++y)
                if (adj(x, y)) {
                    deg += 1.0;
                    lap(x, y) = -1.0 / space->weight(x);
                }
            lap(x, x) = deg / space->weight(x);
        }
    }
    switch (kind) {
        case OperatorKind::Laplacian:
            return WeightedOperator(space, std::move(lap), 2);
        case OperatorKind::Bilaplacian:
            return WeightedOperator(space, lap * lap, 4);
        case OperatorKind::Schroedinger: {
            if (potential.size() != n)
                throw std::invalid_argument("build_operator: potential size mismatch");
            const double vmin = potential.minCoeff();
            const double shift = vmin < 0.0 ? -vmin : 0.0;
            for (int x = 0; x < n; ++x) lap(x, x) += potential(x) + shift;
            return WeightedOperator(space, std::move(lap), 2);
        }
    }
    throw std::invalid_argument("build_operator: unknown kind");
}

inline OperatorKind operator_kind_from_string(const std::string& s) {
    if (s == "laplacian") return OperatorKind::Laplacian;
    if (s == "bilaplacian") return OperatorKind::Bilaplacian;
    if (s == "schroedinger") return OperatorKind::Schroedinger;
    throw std::invalid_argument("unknown operator kind: " + s);
}

inline WeightedOperator heat(const SpectralDecomposition& dec, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("heat: t must be positive");
    return dec.apply_function([t](double lam) { return cplx{std::exp(-t * lam), 0.0}; });
}

inline WeightedOperator complex_heat(const SpectralDecomposition& dec, cplx z) {
    if (!(z.real() > 0.0)) throw std::invalid_argument("complex_heat: Re z must be positive");
    return dec.apply_function([z](double lam) { return std::exp(-z * lam); });
}

/// (tL)^K e^{-tL}
inline WeightedOperator power_heat(const SpectralDecomposition& dec, double t, int K) {
    if (!(t > 0.0)) throw std::invalid_argument("power_heat: t must be positive");
    if (K < 1) throw std::invalid_argument("power_heat: K must be >= 1");
    return dec.apply_function([t, K](double lam) {
        const double u = t * lam;
        return cplx{std::pow(u, K) * std::exp(-u), 0.0};
    });
}

namespace detail {

inline double binom(int n, int k) {
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v = v * static_cast<double>(n - k + i) / static_cast<double>(i);
    return v;
}

// 32-point Gauss-Legendre nodes/weights on [-1,1] (positive half; symmetric)
inline const std::array<double, 16>& gl32_nodes() {
    static const std::array<double, 16> x = {
        0.0483076656877383162, 0.1444719615827964934, 0.2392873622521370745, 0.3318686022821276497,
        0.4213512761306353454, 0.5068999089322293900, 0.5877157572407623290, 0.6630442669302152010,
        0.7321821187402896804, 0.7944837959679424070, 0.8493676137325699701, 0.8963211557660521240,
        0.9349060759377396892, 0.9647622555875064308, 0.9856115115452683354, 0.9972638618494815635};
    return x;
}

inline const std::array<double, 16>& gl32_weights() {
    static const std::array<double, 16> w = {
        0.0965400885147278006, 0.0956387200792748594, 0.0938443990808045654, 0.0911738786957638847,
        0.0876520930044038111, 0.0833119242269467552, 0.0781938957870703065, 0.0723457941088485062,
        0.0658222227763618468, 0.0586840934785355471, 0.0509980592623761762, 0.0428358980222266807,
        0.0342738629130214331, 0.0253920653092620595, 0.0162743947309056706, 0.0070186100094700966};
    return w;
}

// p(lam) = r^{-m} int_r^{2^{1/m} r} s^{m-1} (1 - e^{-s^m lam})^M ds.
// Closed form via binomial expansion for moderate arguments; for small
// r^m lam the alternating sum cancels, so switch to Gauss-Legendre in
// u = s^m with the expm1 form of the integrand.
inline double regularizer_symbol(double lam, int m, int M, double r) {
    if (lam <= 0.0) return 0.0;
    const double a = std::pow(r, m) * lam;
    if (a > 1e-2) {
        double acc = 1.0 / m;
        for (int k = 1; k <= M; ++k) {
            const double ka = k * a;
            const double g = std::exp(-ka) * (-std::expm1(-ka)) / ka;
            acc += binom(M, k) * ((k % 2) ? -1.0 : 1.0) * g / m;
        }
        return acc;
    }
    // int_{r^m}^{2 r^m} (-expm1(-u lam))^M du / (m r^m)
    const double lo = std::pow(r, m), hi = 2.0 * std::pow(r, m);
    const double c = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    double acc = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
        const double xg = gl32_nodes()[i], wg = gl32_weights()[i];
        acc += wg * std::pow(-std::expm1(-(mid + c * xg) * lam), M);
        acc += wg * std::pow(-std::expm1(-(mid - c * xg) * lam), M);
    }
    return acc * c / (m * std::pow(r, m));
}

}  // namespace detail

/// The averaged heat regularizer r^{-m} int_r^{2^{1/m} r} s^{m-1}(I-e^{-s^m L})^M ds,
/// evaluated through its scalar symbol (exact, no operator-valued quadrature).
inline WeightedOperator regularizer(const SpectralDecomposition& dec, int m, int M, double r) {
    if (m < 2) throw std::invalid_argument("regularizer: m must be >= 2");
    if (M < 1) throw std::invalid_argument("regularizer: M must be >= 1");
    if (!(r > 0.0)) throw std::invalid_argument("regularizer: r must be positive");
    return dec.apply_function([m, M, r](double lam) {
        return cplx{detail::regularizer_symbol(lam, m, M, r), 0.0};
    });
}

inline double regularizer_symbol(double lam, int m, int M, double r) {
    return detail::regularizer_symbol(lam, m, M, r);
}

struct InjectiveSplit {
    SpectralDecomposition positive;    // eigenpairs with lambda > kernel_tol
    Eigen::MatrixXcd kernel_projector; // orthogonal projector onto N(L) in L^2(mu)
    int kernel_dim = 0;
    double kernel_tol = 0.0;
};

/// L = L_0 + 0 on R(L) + N(L): eigenpairs at (numerical) zero feed the kernel
/// projector, the rest form an injective decomposition.
inline InjectiveSplit injective_split(const SpectralDecomposition& dec) {
    InjectiveSplit out;
    const int n = dec.size();
    out.kernel_tol = 1e-8 * std::max(dec.lambda_max(), 1e-300);
    std::vector<int> kernel_idx, pos_idx;
    for (int i = 0; i < n; ++i)
        (dec.eigenvalues(i) <= out.kernel_tol ? kernel_idx : pos_idx).push_back(i);
    out.kernel_dim = static_cast<int>(kernel_idx.size());
    out.positive.space = dec.space;
    out.positive.order_m = dec.order_m;
    out.positive.eigenvalues.resize(static_cast<Eigen::Index>(pos_idx.size()));
    out.positive.eigenvectors.resize(n, static_cast<Eigen::Index>(pos_idx.size()));
    for (std::size_t k = 0; k < pos_idx.size(); ++k) {
        out.positive.eigenvalues(static_cast<Eigen::Index>(k)) = dec.eigenvalues(pos_idx[k]);
        out.positive.eigenvectors.col(static_cast<Eigen::Index>(k)) = dec.eigenvectors.col(pos_idx[k]);
    }
    out.kernel_projector = Eigen::MatrixXcd::Zero(n, n);
    for (int idx : kernel_idx) {
        const auto v = dec.eigenvectors.col(idx);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y)
                out.kernel_projector(x, y) += v(x) * std::conj(v(y)) * dec.space->weight(y);
    }
    return out;
}

/// f minus its kernel component.
inline GridFunction kernel_project_out(const InjectiveSplit& split, const GridFunction& f) {
    return f - split.kernel_projector * f;
}

}  // namespace specmult
