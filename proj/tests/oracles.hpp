// oracles.hpp: slow, independent reference computations used only by the tests

#pragma once

#include "tcm/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using tcm::cplx;
using tcm::Matrix;
using tcm::Vector;

// 1 - sum_{n <= n_max} Poisson weights, accumulated in long double.
inline double poisson_tail(double nbar, int n_max) {
    long double term = std::exp(-static_cast<long double>(nbar));
    long double sum = term;
    for (int n = 1; n <= n_max; ++n) {
        term *= static_cast<long double>(nbar) / n;
        sum += term;
    }
    return static_cast<double>(1.0L - sum);
}

// Plain recurrence C_n = C_{n-1} alpha / sqrt(n), starting from e^{-nbar/2}.
inline Vector coherent(double nbar, double theta, int n_max) {
    const cplx alpha = std::polar(std::sqrt(nbar), -theta);
    Vector c(n_max + 1);
    c(0) = std::exp(-0.5 * nbar);
    for (int n = 1; n <= n_max; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    return c;
}

// Symmetrises |e..e g..g> (n_excited leading e's) by enumerating every permutation of positions.
inline Vector symmetrised(int n_qubits, int n_excited) {
    std::vector<int> bits(n_qubits, 1);
    std::fill(bits.begin(), bits.begin() + n_excited, 0);
    std::sort(bits.begin(), bits.end());
    Vector v = Vector::Zero(Eigen::Index{1} << n_qubits);
    do {
        Eigen::Index idx = 0;
        for (int b : bits) idx = (idx << 1) | b;
        v(idx) = 1.0;
    } while (std::next_permutation(bits.begin(), bits.end()));
    return v / v.norm();
}

// Kronecker product of matrices.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Full interaction Hamiltonian lambda sum_i (a s_i^+ + a^dag s_i^-) on qubits (x) Fock,
// built from operator products.
inline Matrix hamiltonian(int n_qubits, int n_max, double lambda) {
    Matrix lower = Matrix::Zero(2, 2);  // |g><e| with |e> = 0, |g> = 1
    lower(1, 0) = 1.0;
    Matrix a = Matrix::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    const Matrix id2 = Matrix::Identity(2, 2);
    const auto qdim = Eigen::Index{1} << n_qubits;
    Matrix h = Matrix::Zero(qdim * (n_max + 1), qdim * (n_max + 1));
    for (int site = 0; site < n_qubits; ++site) {
        Matrix s = Matrix::Identity(1, 1);
        for (int q = 0; q < n_qubits; ++q) s = kron(s, q == site ? lower : id2);
        const Matrix term = kron(s.adjoint(), a) + kron(s, a.adjoint());
        h += lambda * term;
    }
    return h;
}

inline Vector evolve_dense(const Matrix& h, const Vector& psi, double t) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    Vector phased = es.eigenvectors().adjoint() * psi;
    for (Eigen::Index i = 0; i < phased.size(); ++i) phased(i) *= std::polar(1.0, -es.eigenvalues()(i) * t);
    return es.eigenvectors() * phased;
}

// Tr over the field by explicit summation; amplitudes indexed q * (n_max + 1) + n.
inline Matrix trace_field(const Vector& psi, Eigen::Index qdim, int n_max) {
    Matrix rho = Matrix::Zero(qdim, qdim);
    for (Eigen::Index q1 = 0; q1 < qdim; ++q1)
        for (Eigen::Index q2 = 0; q2 < qdim; ++q2)
            for (int n = 0; n <= n_max; ++n) rho(q1, q2) += psi(q1 * (n_max + 1) + n) * std::conj(psi(q2 * (n_max + 1) + n));
    return rho;
}

// Keeps qubit `keep` of an n-qubit density matrix by explicit summation.
inline Matrix single_qubit(const Matrix& rho, int n_qubits, int keep) {
    Matrix out = Matrix::Zero(2, 2);
    const int shift = n_qubits - 1 - keep;
    for (Eigen::Index i = 0; i < rho.rows(); ++i)
        for (Eigen::Index j = 0; j < rho.cols(); ++j)
            if ((i & ~(Eigen::Index{1} << shift)) == (j & ~(Eigen::Index{1} << shift)))
                out((i >> shift) & 1, (j >> shift) & 1) += rho(i, j);
    return out;
}

// Concurrence of a pure two-qubit state.
inline double pure_concurrence(const Vector& psi) {
    return 2.0 * std::abs(psi(0) * psi(3) - psi(1) * psi(2));
}

// Three-tangle 4|Det a| from the Cayley hyperdeterminant of the amplitude cube a_ijk.
inline double hyperdeterminant_tangle(const Vector& psi) {
    auto a = [&](int i, int j, int k) { return psi(4 * i + 2 * j + k); };
    const cplx d1 = a(0, 0, 0) * a(0, 0, 0) * a(1, 1, 1) * a(1, 1, 1) + a(0, 0, 1) * a(0, 0, 1) * a(1, 1, 0) * a(1, 1, 0) +
                    a(0, 1, 0) * a(0, 1, 0) * a(1, 0, 1) * a(1, 0, 1) + a(1, 0, 0) * a(1, 0, 0) * a(0, 1, 1) * a(0, 1, 1);
    const cplx d2 = a(0, 0, 0) * a(1, 1, 1) * a(0, 1, 1) * a(1, 0, 0) + a(0, 0, 0) * a(1, 1, 1) * a(1, 0, 1) * a(0, 1, 0) +
                    a(0, 0, 0) * a(1, 1, 1) * a(1, 1, 0) * a(0, 0, 1) + a(0, 1, 1) * a(1, 0, 0) * a(1, 0, 1) * a(0, 1, 0) +
                    a(0, 1, 1) * a(1, 0, 0) * a(1, 1, 0) * a(0, 0, 1) + a(1, 0, 1) * a(0, 1, 0) * a(1, 1, 0) * a(0, 0, 1);
    const cplx d3 = a(0, 0, 0) * a(1, 1, 0) * a(1, 0, 1) * a(0, 1, 1) + a(1, 1, 1) * a(0, 0, 1) * a(0, 1, 0) * a(1, 0, 0);
    return 4.0 * std::abs(d1 - 2.0 * d2 + 4.0 * d3);
}

inline Vector random_state(std::mt19937_64& rng, Eigen::Index dim) {
    std::normal_distribution<double> g;
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = cplx(g(rng), g(rng));
    return v / v.norm();
}

inline Matrix random_unitary(std::mt19937_64& rng, Eigen::Index dim) {
    std::normal_distribution<double> g;
    Matrix m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = cplx(g(rng), g(rng));
    Eigen::HouseholderQR<Matrix> qr(m);
    return qr.householderQ();
}

inline double trace_distance(const Matrix& a, const Matrix& b) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a - b);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace oracle
