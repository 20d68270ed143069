// dynamics.hpp: exact resonant Tavis-Cummings evolution in the interaction picture.
//
// H_I = lambda * sum_i (a sigma_i^+ + a^dag sigma_i^-) conserves the excitation number
// Lambda = n + N_e, so the truncated space splits into small blocks that are diagonalised
// once. Evolution to any t is then exact: psi_b(t) = V exp(-i E t) V^dag psi_b(0).

#pragma once

#include "tcm/hilbert.hpp"
#include "tcm/types.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

namespace tcm {

struct ExcitationBlock {
    int excitation = 0;
    std::vector<std::pair<Eigen::Index, int>> basis;  // (qubit index, Fock level)
    std::vector<Eigen::Index> flat;                   // positions in the joint amplitude table
    Matrix hamiltonian;
    RealVector energies;
    Matrix modes;  // eigenvectors as columns
};

// Largest qubit count the full product basis is built for.
inline constexpr int kMaxProductQubits = 12;

namespace detail {

// Number of excited qubits for a qubit-basis index.
inline int excited_count(QubitBasis basis, int n_qubits, Eigen::Index q) {
    return basis == QubitBasis::product ? n_qubits - ground_count(q) : n_qubits - static_cast<int>(q);
}

}  // namespace detail

class Propagator {
public:
    Propagator(const ModelConfig& model, QubitBasis basis) : model_(model), basis_(basis) {
        model_.validate();
        if (basis_ == QubitBasis::product && model_.n_qubits > kMaxProductQubits)
            throw std::invalid_argument("Propagator: product basis limited to 12 qubits, use the Dicke basis");
        build();
    }

    const ModelConfig& model() const { return model_; }
    QubitBasis basis() const { return basis_; }
    int n_max() const { return n_max_; }
    const std::vector<ExcitationBlock>& blocks() const { return blocks_; }

    Eigen::Index qubit_dim() const {
        return basis_ == QubitBasis::product ? product_dim(model_.n_qubits) : Eigen::Index{model_.n_qubits + 1};
    }
    Eigen::Index dim() const { return qubit_dim() * (n_max_ + 1); }

    void check_state(const JointState& state) const {
        if (state.basis != basis_ || state.n_qubits != model_.n_qubits || state.n_max != n_max_)
            throw DimensionError("Propagator: state does not live in the propagator's space");
    }

    // Eigen-mode coefficients V^dag psi_b for each block.
    std::vector<Vector> project(const JointState& state) const {
        check_state(state);
        std::vector<Vector> coeffs;
        coeffs.reserve(blocks_.size());
        for (const auto& b : blocks_) {
            Vector local(static_cast<Eigen::Index>(b.flat.size()));
            for (std::size_t i = 0; i < b.flat.size(); ++i) local(static_cast<Eigen::Index>(i)) = state.amplitudes(b.flat[i]);
            coeffs.push_back(b.modes.adjoint() * local);
        }
        return coeffs;
    }

    void reconstruct(const std::vector<Vector>& coeffs, double t, JointState& out) const {
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const auto& b = blocks_[k];
            Vector phased(coeffs[k].size());
            for (Eigen::Index i = 0; i < phased.size(); ++i)
                phased(i) = coeffs[k](i) * std::polar(1.0, -b.energies(i) * t);
            const Vector local = b.modes * phased;
            for (std::size_t i = 0; i < b.flat.size(); ++i) out.amplitudes(b.flat[i]) = local(static_cast<Eigen::Index>(i));
        }
    }

    JointState evolve(const JointState& state, double t) const {
        check_state(state);
        if (t == 0.0) return state;
        JointState out = state;
        reconstruct(project(state), t, out);
        return out;
    }

private:
    void build() {
        n_max_ = model_.n_max();
        const int nq = model_.n_qubits;
        const Eigen::Index qdim = qubit_dim();
        const int max_excitation = n_max_ + nq;
        std::vector<std::vector<std::pair<Eigen::Index, int>>> members(max_excitation + 1);
        for (Eigen::Index q = 0; q < qdim; ++q)
            for (int n = 0; n <= n_max_; ++n) members[n + detail::excited_count(basis_, nq, q)].emplace_back(q, n);

        blocks_.clear();
        for (int lam = 0; lam <= max_excitation; ++lam) {
            if (members[lam].empty()) continue;
            ExcitationBlock b;
            b.excitation = lam;
            b.basis = std::move(members[lam]);
            const auto dim = static_cast<Eigen::Index>(b.basis.size());
            b.hamiltonian = Matrix::Zero(dim, dim);
            for (Eigen::Index i = 0; i < dim; ++i) {
                b.flat.push_back(b.basis[i].first * (n_max_ + 1) + b.basis[i].second);
                for (Eigen::Index j = 0; j < dim; ++j) b.hamiltonian(i, j) = coupling(b.basis[i], b.basis[j]);
            }
            Eigen::SelfAdjointEigenSolver<Matrix> es(b.hamiltonian);
            if (es.info() != Eigen::Success) throw std::runtime_error("Propagator: block diagonalisation failed");
            b.energies = es.eigenvalues();
            b.modes = es.eigenvectors();
            blocks_.push_back(std::move(b));
        }
    }

    // <row| H_I |col> within one excitation block.
    double coupling(const std::pair<Eigen::Index, int>& row, const std::pair<Eigen::Index, int>& col) const {
        const double lambda = model_.coupling;
        const int nq = model_.n_qubits;
        // a^dag sigma^-: col (one more excited qubit) -> row (one more photon); the transpose is a sigma^+.
        auto lowering = [&](const std::pair<Eigen::Index, int>& hi, const std::pair<Eigen::Index, int>& lo) -> double {
            if (lo.second != hi.second + 1) return 0.0;
            if (basis_ == QubitBasis::product) {
                const Eigen::Index diff = lo.first ^ hi.first;
                if (std::popcount(static_cast<std::uint64_t>(diff)) != 1 || (hi.first & diff) != 0) return 0.0;
                return lambda * std::sqrt(static_cast<double>(lo.second));
            }
            if (lo.first != hi.first + 1) return 0.0;
            const double r = static_cast<double>(hi.first);
            return lambda * std::sqrt(static_cast<double>(lo.second)) * std::sqrt((nq - r) * (r + 1.0));
        };
        return lowering(col, row) + lowering(row, col);
    }

    ModelConfig model_;
    QubitBasis basis_;
    int n_max_ = 0;
    std::vector<ExcitationBlock> blocks_;
};

inline Propagator build_blocks(const ModelConfig& model, QubitBasis basis = QubitBasis::product) {
    return Propagator(model, basis);
}

inline JointState evolve(const Propagator& prop, const JointState& state, double t) { return prop.evolve(state, t); }

// --------------------------- closed-form single qubit -----------------------

// Amplitudes of |e,n> and |g,n+1> oscillate at lambda sqrt(n+1); |g,0> is stationary.
// The |e,n_max> amplitude uses C_{n_max+1} from the same closed form.
inline JointState one_qubit_analytic(cplx c_e, cplx c_g, const ModelConfig& model, double t) {
    if (std::abs(std::norm(c_e) + std::norm(c_g) - 1.0) > 1e-10)
        throw std::invalid_argument("one_qubit_analytic: |C_e|^2 + |C_g|^2 must be 1");
    const int n_max = model.n_max();
    const Vector table = coherent_amplitudes(model.field(), n_max);
    // one extra level of the unrenormalised closed form, scaled like the table
    cplx c_next = 0.0;
    if (model.nbar > 0.0) {
        const double scale = std::abs(table(0)) / std::exp(-0.5 * model.nbar);
        c_next = scale * std::polar(std::exp(0.5 * poisson_log_weight(model.nbar, n_max + 1)),
                                    -(n_max + 1) * model.theta);
    }
    auto coeff = [&](int n) -> cplx { return n <= n_max ? table(n) : c_next; };

    JointState out(QubitBasis::product, 1, n_max, Vector::Zero(2 * (n_max + 1)));
    for (int n = 0; n <= n_max; ++n) {
        const double w = model.coupling * std::sqrt(n + 1.0) * t;
        const double c = std::cos(w), s = std::sin(w);
        out.amplitudes(out.flat(0, n)) = c_e * coeff(n) * c - I * c_g * coeff(n + 1) * s;
        if (n + 1 <= n_max) out.amplitudes(out.flat(1, n + 1)) = c_g * coeff(n + 1) * c - I * c_e * coeff(n) * s;
    }
    out.amplitudes(out.flat(1, 0)) = c_g * coeff(0);
    return out;
}

// --------------------------- time series ------------------------------------

struct TimeGrid {
    double start = 0.0;
    double end = 0.0;
    int points = 2;

    std::vector<double> values() const {
        if (points < 1) throw std::invalid_argument("TimeGrid: points must be >= 1");
        std::vector<double> v(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i)
            v[static_cast<std::size_t>(i)] = points == 1 ? start : start + (end - start) * i / (points - 1.0);
        return v;
    }
};

// Evaluates extract(t, state) at every grid time without storing the states.
template <class Extract>
auto evolve_series(const Propagator& prop, const JointState& initial, std::span<const double> times, Extract&& extract)
    -> std::vector<std::invoke_result_t<Extract&, double, const JointState&>> {
    using Result = std::invoke_result_t<Extract&, double, const JointState&>;
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] < times[i - 1]) throw std::invalid_argument("evolve_series: time grid must be monotone");
    const auto coeffs = prop.project(initial);
    std::vector<Result> out;
    out.reserve(times.size());
    JointState work = initial;
    for (double t : times) {
        if (t == 0.0) {
            out.push_back(extract(t, initial));
            continue;
        }
        prop.reconstruct(coeffs, t, work);
        out.push_back(extract(t, static_cast<const JointState&>(work)));
    }
    return out;
}

// <Lambda> = <a^dag a> + <number of excited qubits>
inline double excitation_expectation(const JointState& state) {
    double total = 0.0;
    for (Eigen::Index q = 0; q < state.qubit_dim(); ++q) {
        const int ne = detail::excited_count(state.basis, state.n_qubits, q);
        for (int n = 0; n <= state.n_max; ++n) total += std::norm(state.amp(q, n)) * (n + ne);
    }
    return total;
}

}  // namespace tcm
