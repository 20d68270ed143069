// measures.hpp: entropies, two-qubit tangle, three-tangle, projective probabilities,
// field and spin Q functions, and revival detection on sampled series.

#pragma once

#include "tcm/hilbert.hpp"
#include "tcm/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tcm {

// Eigenvalues in [-1e-10, 0) are numerical dust and clipped.
inline constexpr double kEigenDust = 1e-10;

inline RealVector density_eigenvalues(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.entries, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("density_eigenvalues: solver failed");
    return es.eigenvalues();
}

// -Tr(rho log2 rho) / n_qubits
inline double entropy(const DensityMatrix& rho, int n_qubits) {
    if (n_qubits < 1) throw std::invalid_argument("entropy: n_qubits must be >= 1");
    const RealVector ev = density_eigenvalues(rho);
    double s = 0.0;
    for (double p : ev) {
        if (p < -kEigenDust) throw std::invalid_argument("entropy: density matrix is not positive semidefinite");
        if (p > 0.0) s -= p * std::log2(p);
    }
    // eigenvalues a hair above 1 give -1e-16 for pure states
    return std::max(s / n_qubits, 0.0);
}

inline double entropy(const DensityMatrix& rho) { return entropy(rho, rho.n_qubits); }

// --------------------------- two-qubit tangle --------------------------------

struct TangleBreakdown {
    double tangle = 0.0;
    double concurrence = 0.0;
    double raw = 0.0;  // lambda1 - lambda2 - lambda3 - lambda4
    std::array<double, 4> eigenvalues{};  // square roots, descending
    int rank = 0;
};

inline Matrix sigma_y_pair() {
    Matrix s = Matrix::Zero(4, 4);
    // sigma_y (x) sigma_y in the |e>,|g> ordering: |ee> <-> -|gg>, |eg> <-> |ge>
    s(0, 3) = -1.0;
    s(3, 0) = -1.0;
    s(1, 2) = 1.0;
    s(2, 1) = 1.0;
    return s;
}

// Eigenvalues of rho below this are rounding noise; left in, their square roots would
// surface as spurious 1e-8 entries in the tangle spectrum.
inline constexpr double kSupportCut = 1e-14;

// Square roots of the eigenvalues of rho (sy x sy) rho* (sy x sy), computed on the support of rho:
// with rho = V P V^dag the nonzero spectrum equals that of (V sqrt P)^dag rho~ (V sqrt P).
inline TangleBreakdown tangle(const DensityMatrix& rho) {
    const DensityMatrix r = rho.side == Side::qubits_dicke ? to_product_basis(rho) : rho;
    if (r.dim() != 4) throw DimensionError("tangle: needs a two-qubit density matrix");
    const Matrix syy = sigma_y_pair();
    const Matrix flipped = syy * r.entries.conjugate() * syy;
    Eigen::SelfAdjointEigenSolver<Matrix> rs(r.entries);
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < 4; ++i)
        if (rs.eigenvalues()(i) > kSupportCut) support.push_back(i);
    Matrix v(4, static_cast<Eigen::Index>(support.size()));
    for (std::size_t j = 0; j < support.size(); ++j)
        v.col(static_cast<Eigen::Index>(j)) = rs.eigenvectors().col(support[j]) * std::sqrt(rs.eigenvalues()(support[j]));
    Matrix m = v.adjoint() * flipped * v;
    m = 0.5 * (m + m.adjoint()).eval();
    std::array<double, 4> lam{};
    if (m.size() > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            lam[static_cast<std::size_t>(i)] = std::sqrt(std::max(es.eigenvalues()(i), 0.0));
    }
    std::sort(lam.begin(), lam.end(), std::greater<>());

    TangleBreakdown out;
    out.eigenvalues = lam;
    out.raw = lam[0] - lam[1] - lam[2] - lam[3];
    out.concurrence = std::max(out.raw, 0.0);
    out.tangle = out.concurrence * out.concurrence;
    // a singular direction inside the support can still leave a 1e-8 root
    out.rank = static_cast<int>(std::count_if(lam.begin(), lam.end(), [](double l) { return l > 1e-6; }));
    return out;
}

// --------------------------- three-tangle ------------------------------------

// tau_ABC = 4 det(rho_A) - C^2_AB - C^2_AC for a pure three-qubit state, pivot = A.
inline double three_tangle(const DensityMatrix& rho, int pivot = 0) {
    const DensityMatrix r = rho.side == Side::qubits_dicke ? to_product_basis(rho) : rho;
    if (r.n_qubits != 3 || r.dim() != 8) throw DimensionError("three_tangle: needs a three-qubit state");
    if (pivot < 0 || pivot > 2) throw std::invalid_argument("three_tangle: pivot must be 0, 1 or 2");
    if (std::abs(r.purity() - 1.0) > 1e-8) throw std::invalid_argument("three_tangle: input state is mixed");
    const DensityMatrix rho_a = reduce_qubits(r, {pivot});
    const double det_a = (rho_a.entries(0, 0) * rho_a.entries(1, 1) - rho_a.entries(0, 1) * rho_a.entries(1, 0)).real();
    double pair_sum = 0.0;
    for (int other = 0; other < 3; ++other) {
        if (other == pivot) continue;
        pair_sum += tangle(reduce_qubits(r, {std::min(pivot, other), std::max(pivot, other)})).tangle;
    }
    return 4.0 * det_a - pair_sum;
}

inline double three_tangle(const QubitState& psi, int pivot = 0) { return three_tangle(pure_density(psi), pivot); }

// --------------------------- probabilities -----------------------------------

inline double probability(const DensityMatrix& rho, const Vector& target) {
    if (target.size() != rho.dim()) throw DimensionError("probability: target dimension does not match rho");
    const cplx v = target.dot(rho.entries * target);
    return std::clamp(v.real(), 0.0, 1.0);
}

inline double probability(const DensityMatrix& rho, const QubitState& target) {
    if (rho.side == Side::qubits_dicke) return probability(to_product_basis(rho), target.amplitudes);
    return probability(rho, target.amplitudes);
}

inline double probability(const DensityMatrix& rho, const DickeState& target) {
    if (rho.side == Side::qubits_product) return probability(rho, to_product_basis(target).amplitudes);
    return probability(rho, target.amplitudes);
}

// --------------------------- phase-space functions ---------------------------

struct PlaneGrid {
    double re_min = -1.0, re_max = 1.0;
    double im_min = -1.0, im_max = 1.0;
    int re_points = 2, im_points = 2;

    static PlaneGrid square(double half_width, int points) {
        return {-half_width, half_width, -half_width, half_width, points, points};
    }

    double re(int i) const { return re_points == 1 ? re_min : re_min + (re_max - re_min) * i / (re_points - 1.0); }
    double im(int j) const { return im_points == 1 ? im_min : im_min + (im_max - im_min) * j / (im_points - 1.0); }
    double cell_area() const {
        return (re_max - re_min) / (re_points - 1.0) * (im_max - im_min) / (im_points - 1.0);
    }
};

struct PhaseGrid {
    PlaneGrid grid;
    std::vector<double> values;  // index j * re_points + i (imaginary axis outer)

    double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.re_points + i]; }
    double riemann_sum() const;
    std::pair<cplx, double> peak() const;
};

inline double PhaseGrid::riemann_sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.cell_area();
}

inline std::pair<cplx, double> PhaseGrid::peak() const {
    const auto it = std::max_element(values.begin(), values.end());
    const auto k = static_cast<int>(it - values.begin());
    return {cplx(grid.re(k % grid.re_points), grid.im(k / grid.re_points)), *it};
}

namespace detail {

// rho = sum_i p_i |v_i><v_i| keeping the weights above a relative cut.
struct PureMixture {
    std::vector<double> weights;
    std::vector<Vector> vectors;
};

inline PureMixture decompose(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.entries);
    PureMixture mix;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double p = es.eigenvalues()(i);
        if (p <= 1e-14) continue;
        mix.weights.push_back(p);
        mix.vectors.push_back(es.eigenvectors().col(i));
    }
    return mix;
}

template <class Ket>
PhaseGrid sample_plane(const DensityMatrix& rho, const PlaneGrid& grid, Ket&& ket_at, double scale_of(cplx)) {
    if (grid.re_points < 2 || grid.im_points < 2) throw std::invalid_argument("PlaneGrid: need at least 2x2 points");
    const PureMixture mix = decompose(rho);
    PhaseGrid out{grid, std::vector<double>(static_cast<std::size_t>(grid.re_points) * grid.im_points)};
    for (int j = 0; j < grid.im_points; ++j) {
        for (int i = 0; i < grid.re_points; ++i) {
            const cplx point(grid.re(i), grid.im(j));
            const Vector ket = ket_at(point);
            double v = 0.0;
            for (std::size_t k = 0; k < mix.weights.size(); ++k) v += mix.weights[k] * std::norm(ket.dot(mix.vectors[k]));
            out.values[static_cast<std::size_t>(j) * grid.re_points + i] = v * scale_of(point);
        }
    }
    return out;
}

inline double inverse_pi(cplx) { return 1.0 / pi; }

}  // namespace detail

// Q(alpha) = <alpha|rho_f|alpha> / pi
inline PhaseGrid q_function(const DensityMatrix& rho_f, const PlaneGrid& grid) {
    if (rho_f.side != Side::field) throw std::invalid_argument("q_function: needs a field-side density matrix");
    const int n_max = static_cast<int>(rho_f.dim()) - 1;
    return detail::sample_plane(rho_f, grid, [n_max](cplx alpha) { return coherent_ket(alpha, n_max); },
                                detail::inverse_pi);
}

// Q_q(z) = <z|rho_q|z> / (1+|z|^2)^2 with |z> the normalised spin coherent state.
inline PhaseGrid spin_q_function(const DensityMatrix& rho_q, const PlaneGrid& grid) {
    const int n = rho_q.n_qubits;
    auto scale = [](cplx z) { return 1.0 / ((1.0 + std::norm(z)) * (1.0 + std::norm(z))); };
    if (rho_q.side == Side::qubits_dicke)
        return detail::sample_plane(rho_q, grid, [n](cplx z) { return spin_coherent_dicke(z, n).amplitudes; },
                                    +scale);
    if (rho_q.side == Side::qubits_product)
        return detail::sample_plane(rho_q, grid, [n](cplx z) { return spin_coherent(z, n).amplitudes; }, +scale);
    throw std::invalid_argument("spin_q_function: needs a qubit-side density matrix");
}

// --------------------------- revival detection -------------------------------

// Envelope amplitude: max - min of the series over a centred window of the given width.
inline std::vector<double> oscillation_envelope(const std::vector<double>& values, double step, double window) {
    const auto half = static_cast<std::ptrdiff_t>(std::round(0.5 * window / step));
    const auto n = static_cast<std::ptrdiff_t>(values.size());
    std::vector<double> env(values.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto lo = std::max<std::ptrdiff_t>(0, i - half);
        const auto hi = std::min<std::ptrdiff_t>(n - 1, i + half);
        const auto [mn, mx] = std::minmax_element(values.begin() + lo, values.begin() + hi + 1);
        env[static_cast<std::size_t>(i)] = *mx - *mn;
    }
    return env;
}

struct RevivalOptions {
    double window = 2.0;           // envelope window, normally t_c
    double threshold = 0.02;       // minimum envelope amplitude of a peak
    double separation = 2.0;       // peaks closer than this are merged, normally t_c
    double skip_start = 0.0;       // ignore the initial Rabi oscillations before this time
};

// Times of local maxima of the oscillation envelope above the threshold.
inline std::vector<double> detect_revivals(const std::vector<double>& times, const std::vector<double>& values,
                                           const RevivalOptions& opt) {
    if (times.size() != values.size()) throw std::invalid_argument("detect_revivals: size mismatch");
    if (times.size() < 3) return {};
    const double step = times[1] - times[0];
    if (!(step > 0.0)) throw std::invalid_argument("detect_revivals: grid must be increasing");
    for (std::size_t i = 2; i < times.size(); ++i)
        if (std::abs((times[i] - times[i - 1]) - step) > 1e-6 * step)
            throw std::invalid_argument("detect_revivals: grid must be uniform");
    if (step >= opt.window / 10.0) throw std::invalid_argument("detect_revivals: grid too coarse for the window");

    const std::vector<double> env = oscillation_envelope(values, step, opt.window);
    const auto reach = static_cast<std::ptrdiff_t>(std::round(opt.separation / step));
    const auto n = static_cast<std::ptrdiff_t>(env.size());
    std::vector<double> peaks;
    std::ptrdiff_t last = -reach - 1;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (times[static_cast<std::size_t>(i)] < opt.skip_start || env[static_cast<std::size_t>(i)] < opt.threshold) continue;
        const auto lo = std::max<std::ptrdiff_t>(0, i - reach);
        const auto hi = std::min<std::ptrdiff_t>(n - 1, i + reach);
        const double local = *std::max_element(env.begin() + lo, env.begin() + hi + 1);
        if (env[static_cast<std::size_t>(i)] < local) continue;
        // plateau of equal maxima: report its centre
        std::ptrdiff_t j = i;
        while (j + 1 < n && env[static_cast<std::size_t>(j + 1)] == env[static_cast<std::size_t>(i)]) ++j;
        if (i - last <= reach) {
            i = j;
            continue;
        }
        peaks.push_back(0.5 * (times[static_cast<std::size_t>(i)] + times[static_cast<std::size_t>(j)]));
        last = j;
        i = j;
    }
    return peaks;
}

}  // namespace tcm
