// hilbert.hpp: qubit product and Dicke bases, coherent and spin-coherent states,
// joint qubit x Fock states and their partial traces.

#pragma once

#include "tcm/types.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tcm {

// --------------------------- basis bookkeeping ------------------------------

inline Eigen::Index product_dim(int n_qubits) {
    if (n_qubits < 1 || n_qubits > 30) throw std::invalid_argument("product basis: n_qubits out of range");
    return Eigen::Index{1} << n_qubits;
}

// Number of qubits in |g> for a product-basis index.
inline int ground_count(Eigen::Index index) {
    return std::popcount(static_cast<std::uint64_t>(index));
}

inline double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double binomial(int n, int k) { return std::exp(log_binomial(n, k)); }

// --------------------------- qubit-side states ------------------------------

struct QubitState {
    int n_qubits = 0;
    Vector amplitudes;

    QubitState() = default;
    QubitState(int n, Vector amps) : n_qubits(n), amplitudes(std::move(amps)) {
        if (amplitudes.size() != product_dim(n))
            throw DimensionError("QubitState: amplitude count does not match 2^n_qubits");
    }

    double norm() const { return amplitudes.norm(); }
};

struct DickeState {
    int n_qubits = 0;
    Vector amplitudes;  // index r = N/2 - m

    DickeState() = default;
    DickeState(int n, Vector amps) : n_qubits(n), amplitudes(std::move(amps)) {
        if (n < 1) throw std::invalid_argument("DickeState: n_qubits must be >= 1");
        if (amplitudes.size() != n + 1)
            throw DimensionError("DickeState: amplitude count does not match n_qubits + 1");
    }

    double norm() const { return amplitudes.norm(); }
};

inline QubitState basis_state(int n_qubits, Eigen::Index index) {
    Vector v = Vector::Zero(product_dim(n_qubits));
    v(index) = 1.0;
    return {n_qubits, std::move(v)};
}

inline QubitState all_ground(int n_qubits) { return basis_state(n_qubits, product_dim(n_qubits) - 1); }
inline QubitState all_excited(int n_qubits) { return basis_state(n_qubits, 0); }

inline Vector kron(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

inline QubitState tensor(const QubitState& a, const QubitState& b) {
    return {a.n_qubits + b.n_qubits, kron(a.amplitudes, b.amplitudes)};
}

// Single-qubit factor raised to the n-th tensor power.
inline QubitState tensor_power(const Eigen::Vector2cd& single, int n_qubits) {
    Vector out = Vector::Ones(product_dim(n_qubits));
    for (Eigen::Index idx = 0; idx < out.size(); ++idx)
        for (int q = 0; q < n_qubits; ++q) out(idx) *= single((idx >> (n_qubits - 1 - q)) & 1);
    return {n_qubits, std::move(out)};
}

// m must satisfy N/2 - m in {0, ..., N}.
inline int ground_count_for_m(int n_qubits, double m) {
    const double r = 0.5 * n_qubits - m;
    const double rounded = std::round(r);
    if (std::abs(r - rounded) > 1e-12 || rounded < 0 || rounded > n_qubits)
        throw std::invalid_argument("dicke_state: m must lie in {-N/2, ..., N/2} in integer steps");
    return static_cast<int>(rounded);
}

inline DickeState dicke_basis_vector(int n_qubits, double m) {
    Vector d = Vector::Zero(n_qubits + 1);
    d(ground_count_for_m(n_qubits, m)) = 1.0;
    return {n_qubits, std::move(d)};
}

// --------------------------- Dicke <-> product ------------------------------

inline QubitState to_product_basis(const DickeState& d) {
    const int n = d.n_qubits;
    Vector out(product_dim(n));
    std::vector<double> inv_sqrt_binom(n + 1);
    for (int r = 0; r <= n; ++r) inv_sqrt_binom[r] = std::exp(-0.5 * log_binomial(n, r));
    for (Eigen::Index idx = 0; idx < out.size(); ++idx) {
        const int r = ground_count(idx);
        out(idx) = d.amplitudes(r) * inv_sqrt_binom[r];
    }
    return {n, std::move(out)};
}

// Dicke components <N,m|q> of an arbitrary product-basis state.
inline DickeState project_symmetric(const QubitState& q) {
    const int n = q.n_qubits;
    Vector d = Vector::Zero(n + 1);
    for (Eigen::Index idx = 0; idx < q.amplitudes.size(); ++idx) d(ground_count(idx)) += q.amplitudes(idx);
    for (int r = 0; r <= n; ++r) d(r) *= std::exp(-0.5 * log_binomial(n, r));
    return {n, std::move(d)};
}

// Inverse of to_product_basis; throws when the input has weight outside the symmetric subspace.
inline DickeState from_product_basis(const QubitState& q, double tolerance = 1e-10) {
    DickeState out = project_symmetric(q);
    const double residual = (to_product_basis(out).amplitudes - q.amplitudes).norm();
    if (residual > tolerance)
        throw std::invalid_argument("from_product_basis: state is not in the symmetric subspace (residual " +
                                    std::to_string(residual) + ")");
    return out;
}

inline bool is_symmetric(const QubitState& q, double tolerance = 1e-10) {
    try {
        (void)from_product_basis(q, tolerance);
        return true;
    } catch (const std::invalid_argument&) {
        return false;
    }
}

inline QubitState dicke_state(int n_qubits, double m) { return to_product_basis(dicke_basis_vector(n_qubits, m)); }

// --------------------------- spin coherent states ---------------------------

// |z, N> in the Dicke basis: sqrt(C(N,r)) z^r / (1+|z|^2)^{N/2}, evaluated in log space.
// at_infinity selects the z -> infinity limit |g...g>.
inline DickeState spin_coherent_dicke(cplx z, int n_qubits, bool at_infinity = false) {
    if (n_qubits < 1) throw std::invalid_argument("spin_coherent: n_qubits must be >= 1");
    Vector d = Vector::Zero(n_qubits + 1);
    if (at_infinity) {
        d(n_qubits) = 1.0;
        return {n_qubits, std::move(d)};
    }
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument("spin_coherent: z must be finite (use at_infinity)");
    const double mag = std::abs(z);
    const double phase = std::arg(z);
    const double log_norm = 0.5 * n_qubits * std::log1p(mag * mag);
    for (int r = 0; r <= n_qubits; ++r) {
        if (mag == 0.0) {
            d(r) = r == 0 ? 1.0 : 0.0;
            continue;
        }
        const double log_mag = 0.5 * log_binomial(n_qubits, r) + r * std::log(mag) - log_norm;
        d(r) = std::polar(std::exp(log_mag), r * phase);
    }
    return {n_qubits, std::move(d)};
}

// Majorana product ((|e> + z|g>)/sqrt(1+|z|^2))^{(x)N}.
inline QubitState spin_coherent(cplx z, int n_qubits, bool at_infinity = false) {
    if (at_infinity) return all_ground(n_qubits);
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument("spin_coherent: z must be finite (use at_infinity)");
    const double s = 1.0 / std::sqrt(1.0 + std::norm(z));
    return tensor_power(Eigen::Vector2cd(s, z * s), n_qubits);
}

// --------------------------- coherent field ---------------------------------

// Poisson weight e^{-nbar} nbar^n / n!
inline double poisson_log_weight(double nbar, int n) {
    return -nbar + n * std::log(nbar) - std::lgamma(n + 1.0);
}

// Probability mass beyond n_max, summed directly from the tail terms.
inline double poisson_tail(double nbar, int n_max) {
    if (nbar == 0.0) return 0.0;
    double tail = 0.0;
    for (int n = n_max + 1;; ++n) {
        const double term = std::exp(poisson_log_weight(nbar, n));
        tail += term;
        if (n > nbar && term < 1e-18 * std::max(tail, 1e-300)) break;
        if (n > nbar && term == 0.0) break;
    }
    return tail;
}

// C_n = e^{-nbar/2} alpha^n / sqrt(n!), renormalised over 0..n_max.
inline Vector coherent_amplitudes(const CoherentField& field, int n_max) {
    if (n_max < 0) throw std::invalid_argument("coherent_amplitudes: n_max must be >= 0");
    if (!(field.nbar >= 0.0)) throw std::invalid_argument("coherent_amplitudes: nbar must be >= 0");
    Vector c = Vector::Zero(n_max + 1);
    if (field.nbar == 0.0) {
        c(0) = 1.0;
        return c;
    }
    const double tail = poisson_tail(field.nbar, n_max);
    if (tail > kTruncationTolerance)
        throw TruncationError("coherent_amplitudes: Poisson tail " + std::to_string(tail) +
                              " beyond n_max = " + std::to_string(n_max) + " exceeds tolerance");
    for (int n = 0; n <= n_max; ++n)
        c(n) = std::polar(std::exp(0.5 * poisson_log_weight(field.nbar, n)), -n * field.theta);
    c /= c.norm();
    return c;
}

// Unrenormalised <n|alpha> for arbitrary complex alpha, by recurrence.
inline Vector coherent_ket(cplx alpha, int n_max) {
    Vector c(n_max + 1);
    c(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n <= n_max; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    return c;
}

// --------------------------- joint states -----------------------------------

// Amplitude table over (qubit index, Fock level), interaction picture.
struct JointState {
    QubitBasis basis = QubitBasis::product;
    int n_qubits = 0;
    int n_max = 0;
    Vector amplitudes;  // flat index q * (n_max + 1) + n

    JointState() = default;
    JointState(QubitBasis b, int nq, int nm, Vector amps)
        : basis(b), n_qubits(nq), n_max(nm), amplitudes(std::move(amps)) {
        if (amplitudes.size() != qubit_dim() * fock_dim())
            throw DimensionError("JointState: amplitude count does not match qubit x Fock dimension");
    }

    Eigen::Index qubit_dim() const {
        return basis == QubitBasis::product ? product_dim(n_qubits) : Eigen::Index{n_qubits + 1};
    }
    Eigen::Index fock_dim() const { return n_max + 1; }
    Eigen::Index flat(Eigen::Index q, Eigen::Index n) const { return q * fock_dim() + n; }

    cplx amp(Eigen::Index q, Eigen::Index n) const { return amplitudes(flat(q, n)); }

    double norm() const { return amplitudes.norm(); }

    // Rows are qubit indices, columns Fock levels.
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> as_matrix() const {
        return {amplitudes.data(), qubit_dim(), fock_dim()};
    }

    // Population of the highest retained Fock level.
    double top_level_occupancy() const { return as_matrix().col(n_max).squaredNorm(); }

    bool same_space(const JointState& other) const {
        return basis == other.basis && n_qubits == other.n_qubits && n_max == other.n_max;
    }
};

inline JointState embed(QubitBasis basis, int n_qubits, const Vector& qubit_amps, const Vector& field_amps) {
    return {basis, n_qubits, static_cast<int>(field_amps.size()) - 1, kron(qubit_amps, field_amps)};
}

inline JointState embed_product(const QubitState& qubits, const CoherentField& field, int n_max) {
    return embed(QubitBasis::product, qubits.n_qubits, qubits.amplitudes, coherent_amplitudes(field, n_max));
}

inline JointState embed_product(const DickeState& qubits, const CoherentField& field, int n_max) {
    return embed(QubitBasis::dicke, qubits.n_qubits, qubits.amplitudes, coherent_amplitudes(field, n_max));
}

// --------------------------- density matrices ------------------------------

enum class Side { qubits_product, qubits_dicke, field };

struct DensityMatrix {
    Side side = Side::qubits_product;
    int n_qubits = 0;  // qubit count of the system the operator belongs to
    Matrix entries;

    DensityMatrix() = default;
    DensityMatrix(Side s, int nq, Matrix m) : side(s), n_qubits(nq), entries(std::move(m)) {
        if (entries.rows() != entries.cols()) throw DimensionError("DensityMatrix: matrix must be square");
    }

    Eigen::Index dim() const { return entries.rows(); }
    double trace() const { return entries.trace().real(); }
    double purity() const { return (entries * entries).trace().real(); }

    // Hermitian within 1e-12, unit trace within 1e-10, eigenvalues >= -1e-10.
    void check(double tol_herm = 1e-12, double tol_trace = 1e-10, double tol_psd = 1e-10) const {
        if ((entries - entries.adjoint()).cwiseAbs().maxCoeff() > tol_herm)
            throw std::invalid_argument("DensityMatrix: not Hermitian");
        if (std::abs(trace() - 1.0) > tol_trace) throw std::invalid_argument("DensityMatrix: trace is not 1");
        Eigen::SelfAdjointEigenSolver<Matrix> es(entries, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol_psd) throw std::invalid_argument("DensityMatrix: not positive");
    }
};

inline Side qubit_side(QubitBasis b) { return b == QubitBasis::product ? Side::qubits_product : Side::qubits_dicke; }

inline DensityMatrix pure_density(const QubitState& q) {
    return {Side::qubits_product, q.n_qubits, q.amplitudes * q.amplitudes.adjoint()};
}

inline DensityMatrix pure_density(const DickeState& d) {
    return {Side::qubits_dicke, d.n_qubits, d.amplitudes * d.amplitudes.adjoint()};
}

// rho_q = Tr_f |Psi><Psi|
inline DensityMatrix partial_trace_field(const JointState& state) {
    const auto m = state.as_matrix();
    Matrix rho = m * m.adjoint();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return {qubit_side(state.basis), state.n_qubits, std::move(rho)};
}

// rho_f = Tr_q |Psi><Psi|
inline DensityMatrix partial_trace_qubits(const JointState& state) {
    const auto m = state.as_matrix();
    Matrix rho = m.transpose() * m.conjugate();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return {Side::field, state.n_qubits, std::move(rho)};
}

// Reduced density matrix of the listed qubits (ascending order) from a product-basis rho.
inline DensityMatrix reduce_qubits(const DensityMatrix& rho, const std::vector<int>& keep) {
    if (rho.side != Side::qubits_product) throw std::invalid_argument("reduce_qubits: needs a product-basis rho");
    const int n = rho.n_qubits;
    if (rho.dim() != product_dim(n)) throw DimensionError("reduce_qubits: dimension does not match n_qubits");
    if (!std::is_sorted(keep.begin(), keep.end()) || keep.empty())
        throw std::invalid_argument("reduce_qubits: keep list must be non-empty and sorted");
    std::vector<int> traced;
    for (int q = 0; q < n; ++q)
        if (!std::binary_search(keep.begin(), keep.end(), q)) traced.push_back(q);
    const int nk = static_cast<int>(keep.size());
    const int nt = static_cast<int>(traced.size());

    auto compose = [&](Eigen::Index kept_bits, Eigen::Index traced_bits) {
        Eigen::Index idx = 0;
        for (int i = 0; i < nk; ++i)
            if ((kept_bits >> (nk - 1 - i)) & 1) idx |= Eigen::Index{1} << (n - 1 - keep[i]);
        for (int i = 0; i < nt; ++i)
            if ((traced_bits >> (nt - 1 - i)) & 1) idx |= Eigen::Index{1} << (n - 1 - traced[i]);
        return idx;
    };

    const Eigen::Index dk = Eigen::Index{1} << nk;
    const Eigen::Index dt = Eigen::Index{1} << nt;
    Matrix out = Matrix::Zero(dk, dk);
    for (Eigen::Index a = 0; a < dk; ++a)
        for (Eigen::Index b = 0; b < dk; ++b)
            for (Eigen::Index t = 0; t < dt; ++t) out(a, b) += rho.entries(compose(a, t), compose(b, t));
    return {Side::qubits_product, nk, std::move(out)};
}

// Dicke-basis qubit rho expanded into the product basis.
inline DensityMatrix to_product_basis(const DensityMatrix& rho) {
    if (rho.side == Side::qubits_product) return rho;
    if (rho.side != Side::qubits_dicke) throw std::invalid_argument("to_product_basis: needs a qubit-side rho");
    const int n = rho.n_qubits;
    Matrix iso = Matrix::Zero(product_dim(n), n + 1);
    for (Eigen::Index idx = 0; idx < iso.rows(); ++idx) {
        const int r = ground_count(idx);
        iso(idx, r) = std::exp(-0.5 * log_binomial(n, r));
    }
    return {Side::qubits_product, n, iso * rho.entries * iso.adjoint()};
}

}  // namespace tcm
