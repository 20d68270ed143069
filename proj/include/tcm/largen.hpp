// largen.hpp: large-nbar analytic decomposition sum_k beta_k(t) |D_k(t)> (x) |Phi_k(t)>,
// attractor states, the basin of attraction and the revival / attractor timetable.
//
// Conventions (interaction picture, alpha = sqrt(nbar) e^{-i theta}):
//   D_{+-1/2}(t)   = (e^{-i theta}|e> -+ e^{-+ i pi t/t_r}|g>) / sqrt(2)
//   D_{+-N/2}(t)   = D_{+-1/2}(N t)^{(x)N}
//   Phi_k(t)       = |e^{2 pi i k t/t_r} alpha>
//   beta_{+-N/2}(t)= <D_{+-N/2}(0)|psi> exp(+-i pi N (t/t_r)(nbar + (N+1)/2))
// For N = 1 the beta phase is exactly the closed form; for general N it is the
// first-order expansion of the extreme dressed-state energies of the block Hamiltonian.

#pragma once

#include "tcm/hilbert.hpp"
#include "tcm/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

namespace tcm {

template <class State>
struct LargeNComponent {
    double k = 0.0;
    cplx beta = 0.0;
    State qubit_state;
    double field_rotation = 0.0;  // Phi_k = |e^{i field_rotation} alpha>
    bool direction_defined = true;  // false when beta = 0 leaves D_k undefined
};

using ProductComponent = LargeNComponent<QubitState>;
using DickeComponent = LargeNComponent<DickeState>;

// |beta_0| below this classifies a state as in the basin.
inline constexpr double kBasinTolerance = 1e-10;

inline double field_rotation(double k, double t, double t_r) { return 2.0 * pi * k * t / t_r; }

// --------------------------- attractor states --------------------------------

inline Eigen::Vector2cd attractor_qubit(double theta, int sign) {
    return Eigen::Vector2cd(std::polar(1.0, -theta), sign >= 0 ? I : -I) / std::sqrt(2.0);
}

// ((e^{-i theta}|e> +- i|g>)/sqrt 2)^{(x)N}
inline QubitState attractor_state(int n_qubits, double theta, int sign) {
    return tensor_power(attractor_qubit(theta, sign), n_qubits);
}

// Same state in the Dicke basis: e^{-i N theta} |z = +-i e^{i theta}>.
inline DickeState attractor_state_dicke(int n_qubits, double theta, int sign) {
    DickeState d = spin_coherent_dicke((sign >= 0 ? I : -I) * std::polar(1.0, theta), n_qubits);
    d.amplitudes *= std::polar(1.0, -n_qubits * theta);
    return d;
}

// |<x|y>| = 1 within tol.
inline bool equal_up_to_phase(const Vector& x, const Vector& y, double tol = 1e-12) {
    if (x.size() != y.size()) return false;
    return std::abs(std::abs(x.dot(y)) - x.norm() * y.norm()) < tol && std::abs(x.norm() - y.norm()) < tol;
}

// --------------------------- basin of attraction -----------------------------

struct BasinSpec {
    int n_qubits = 2;
    cplx a = 0.0;
    double theta = 0.0;

    double a_max() const { return std::pow(2.0, -0.5 * (n_qubits - 1)); }
    // sqrt(1/2^{N-1} - |a|^2)
    double partner() const { return std::sqrt(std::max(0.0, a_max() * a_max() - std::norm(a))); }

    void validate() const {
        if (n_qubits < 1) throw std::invalid_argument("BasinSpec: n_qubits must be >= 1");
        if (std::abs(a) > a_max() * (1.0 + 1e-12))
            throw std::invalid_argument("BasinSpec: |a| exceeds 1/sqrt(2^{N-1})");
    }
};

// Dicke amplitudes A(N,a,m) e^{i r theta} sqrt(C(N,r)), r = N/2 - m; A = a for even r, partner otherwise.
inline DickeState basin_dicke(const BasinSpec& spec) {
    spec.validate();
    const int n = spec.n_qubits;
    const double s = spec.partner();
    Vector d(n + 1);
    for (int r = 0; r <= n; ++r) {
        const cplx amp = (r % 2 == 0) ? spec.a : cplx(s);
        d(r) = amp * std::polar(std::exp(0.5 * log_binomial(n, r)), r * spec.theta);
    }
    return {n, std::move(d)};
}

inline QubitState basin_state(const BasinSpec& spec) { return to_product_basis(basin_dicke(spec)); }

// basin = w_plus |z_plus> + w_minus |z_minus>, z_pm = +-e^{i theta}
struct CatDecomposition {
    cplx weight_plus;
    cplx weight_minus;
    cplx z_plus;
    cplx z_minus;
    int n_qubits = 0;

    DickeState reconstruct() const {
        Vector d = weight_plus * spin_coherent_dicke(z_plus, n_qubits).amplitudes +
                   weight_minus * spin_coherent_dicke(z_minus, n_qubits).amplitudes;
        return {n_qubits, std::move(d)};
    }
};

inline CatDecomposition basin_as_cat(const BasinSpec& spec) {
    spec.validate();
    const double scale = std::sqrt(std::pow(2.0, spec.n_qubits - 2));
    const double s = spec.partner();
    const cplx z = std::polar(1.0, spec.theta);
    return {scale * (spec.a + s), scale * (spec.a - s), z, -z, spec.n_qubits};
}

// --------------------------- one and two qubits ------------------------------

inline Eigen::Vector2cd rotating_qubit(int sign, double theta, double t, double t_r) {
    const double s = sign >= 0 ? 1.0 : -1.0;
    return Eigen::Vector2cd(std::polar(1.0, -theta), -s * std::polar(1.0, -s * pi * t / t_r)) / std::sqrt(2.0);
}

// beta_{+-1/2}, D_{+-1/2}, Phi_{+-1/2}; index 0 is k = +1/2.
inline std::array<ProductComponent, 2> one_qubit_components(cplx c_e, cplx c_g, const ModelConfig& model, double t) {
    if (std::abs(std::norm(c_e) + std::norm(c_g) - 1.0) > 1e-10)
        throw std::invalid_argument("one_qubit_components: qubit state must be normalised");
    const double t_r = model.revival_time();
    const double th = model.theta;
    std::array<ProductComponent, 2> out;
    for (int idx = 0; idx < 2; ++idx) {
        const int sign = idx == 0 ? 1 : -1;
        auto& c = out[static_cast<std::size_t>(idx)];
        c.k = 0.5 * sign;
        c.beta = std::polar(1.0 / std::sqrt(2.0), sign * pi * (t / t_r) * (model.nbar + 1.0)) *
                 (std::polar(1.0, th) * c_e - static_cast<double>(sign) * c_g);
        Vector v = rotating_qubit(sign, th, t, t_r);
        c.qubit_state = QubitState(1, std::move(v));
        c.field_rotation = field_rotation(c.k, t, t_r);
    }
    return out;
}

// beta_{+-1}(t), beta_0, D_0, D_{+-1}(t) = D_{+-1/2}(2t)^{(x)2}; index order k = +1, 0, -1.
// The constant in the beta_{+-1} phase is nbar + 3/2 (see file header).
inline std::array<ProductComponent, 3> two_qubit_components(const QubitState& psi, const ModelConfig& model, double t) {
    if (psi.n_qubits != 2) throw DimensionError("two_qubit_components: needs a two-qubit state");
    if (std::abs(psi.norm() - 1.0) > 1e-10) throw std::invalid_argument("two_qubit_components: state must be normalised");
    const cplx c_ee = psi.amplitudes(0), c_eg = psi.amplitudes(1), c_ge = psi.amplitudes(2), c_gg = psi.amplitudes(3);
    const double t_r = model.revival_time();
    const double th = model.theta;
    const cplx e1 = std::polar(1.0, th), e2 = std::polar(1.0, 2.0 * th);

    std::array<ProductComponent, 3> out;
    for (int sign : {1, -1}) {
        auto& c = out[sign > 0 ? 0 : 2];
        c.k = sign;
        c.beta = 0.5 * std::polar(1.0, 2.0 * pi * sign * (t / t_r) * (model.nbar + 1.5)) *
                 (e2 * c_ee - static_cast<double>(sign) * e1 * (c_eg + c_ge) + c_gg);
        c.qubit_state = tensor_power(rotating_qubit(sign, th, 2.0 * t, t_r), 2);
        c.field_rotation = field_rotation(c.k, t, t_r);
    }

    auto& mid = out[1];
    mid.k = 0.0;
    mid.field_rotation = 0.0;
    const cplx x = e2 * c_ee - c_gg;
    const cplx y = c_eg - c_ge;
    const double weight = std::sqrt(std::norm(x) + std::norm(y));
    mid.beta = weight / std::sqrt(2.0);
    Vector d0 = Vector::Zero(4);
    if (weight / std::sqrt(2.0) < kBasinTolerance) {
        mid.direction_defined = false;
    } else {
        d0(0) = x * std::conj(e2);
        d0(1) = y;
        d0(2) = -y;
        d0(3) = -x;
        d0 /= std::sqrt(2.0) * weight;
    }
    mid.qubit_state = QubitState(2, std::move(d0));
    return out;
}

// --------------------------- N qubits, extreme k -----------------------------

// D_{+-N/2}(t) = e^{-i N theta} |z = -+e^{i theta} e^{-+ i pi N t/t_r}> in the Dicke basis.
inline DickeState extreme_qubit_state(int n_qubits, int sign, double theta, double t, double t_r) {
    const double s = sign >= 0 ? 1.0 : -1.0;
    const cplx z = -s * std::polar(1.0, theta - s * pi * n_qubits * t / t_r);
    DickeState d = spin_coherent_dicke(z, n_qubits);
    d.amplitudes *= std::polar(1.0, -n_qubits * theta);
    return d;
}

inline cplx extreme_beta(const DickeState& psi, int sign, const ModelConfig& model, double t) {
    const int n = psi.n_qubits;
    const DickeState d0 = extreme_qubit_state(n, sign, model.theta, 0.0, model.revival_time());
    const double phase = (sign >= 0 ? 1.0 : -1.0) * pi * n * (t / model.revival_time()) * (model.nbar + 0.5 * (n + 1));
    return d0.amplitudes.dot(psi.amplitudes) * std::polar(1.0, phase);
}

// k = +N/2 (index 0) and k = -N/2 (index 1); interior k are not synthesised.
inline std::array<DickeComponent, 2> nq_extreme_components(const DickeState& psi, const ModelConfig& model, double t) {
    if (std::abs(psi.norm() - 1.0) > 1e-10) throw std::invalid_argument("nq_extreme_components: state must be normalised");
    const double t_r = model.revival_time();
    std::array<DickeComponent, 2> out;
    for (int idx = 0; idx < 2; ++idx) {
        const int sign = idx == 0 ? 1 : -1;
        auto& c = out[static_cast<std::size_t>(idx)];
        c.k = 0.5 * psi.n_qubits * sign;
        c.beta = extreme_beta(psi, sign, model, t);
        c.qubit_state = extreme_qubit_state(psi.n_qubits, sign, model.theta, t, t_r);
        c.field_rotation = field_rotation(c.k, t, t_r);
    }
    return out;
}

inline std::array<ProductComponent, 2> nq_extreme_components(const QubitState& psi, const ModelConfig& model, double t) {
    const auto dicke = nq_extreme_components(from_product_basis(psi), model, t);
    std::array<ProductComponent, 2> out;
    for (std::size_t i = 0; i < 2; ++i) {
        out[i].k = dicke[i].k;
        out[i].beta = dicke[i].beta;
        out[i].qubit_state = to_product_basis(dicke[i].qubit_state);
        out[i].field_rotation = dicke[i].field_rotation;
    }
    return out;
}

// Weight of a symmetric state outside span{D_{+N/2}(0), D_{-N/2}(0)}; zero in the basin.
inline double basin_residual(const DickeState& psi, double theta) {
    Vector rest = psi.amplitudes;
    for (int sign : {1, -1}) {
        const Vector d = extreme_qubit_state(psi.n_qubits, sign, theta, 0.0, 1.0).amplitudes;
        rest -= d * d.dot(psi.amplitudes);
    }
    return rest.norm();
}

inline double basin_residual(const QubitState& psi, double theta) {
    const DickeState sym = project_symmetric(psi);
    const double outside = (psi.amplitudes - to_product_basis(sym).amplitudes).norm();
    return std::hypot(outside, basin_residual(sym, theta));
}

// --------------------------- assembly -----------------------------------------

template <class State>
struct AssembledState {
    JointState state;
    double norm_defect = 0.0;
};

// sum_k beta_k D_k (x) Phi_k on the truncated Fock space; not renormalised.
template <class State, std::size_t K>
AssembledState<State> assemble(const std::array<LargeNComponent<State>, K>& components, const ModelConfig& model) {
    static_assert(K > 0);
    const int n_max = model.n_max();
    const int nq = components[0].qubit_state.n_qubits;
    constexpr QubitBasis basis = std::is_same_v<State, DickeState> ? QubitBasis::dicke : QubitBasis::product;
    Vector amps;
    for (const auto& c : components) {
        if (c.qubit_state.n_qubits != nq) throw DimensionError("assemble: inconsistent qubit counts");
        if (c.beta == 0.0 || !c.direction_defined) continue;
        const CoherentField rotated{model.nbar, model.theta - c.field_rotation};
        const Vector term = c.beta * kron(c.qubit_state.amplitudes, coherent_amplitudes(rotated, n_max));
        if (amps.size() == 0) amps = term;
        else amps += term;
    }
    if (amps.size() == 0) throw std::invalid_argument("assemble: all components have zero weight");
    JointState js(basis, nq, n_max, std::move(amps));
    const double defect = std::abs(js.norm() - 1.0);
    return {std::move(js), defect};
}

// --------------------------- timetable ------------------------------------------

namespace detail {

inline std::vector<double> sorted_fractions(std::set<std::pair<long, long>> fracs) {
    std::vector<std::pair<long, long>> v(fracs.begin(), fracs.end());
    std::sort(v.begin(), v.end(), [](auto a, auto b) { return a.first * b.second < b.first * a.second; });
    std::vector<double> out;
    for (auto [num, den] : v) out.push_back(static_cast<double>(num) / static_cast<double>(den));
    return out;
}

inline std::pair<long, long> reduced(long num, long den) {
    const long g = std::gcd(num, den);
    return {num / g, den / g};
}

}  // namespace detail

// (k + 1/p) and (k + (p-1)/p) for p = 1..N, k = 0..k_max-1, positive, in units of t_r.
inline std::vector<double> revival_times(int n_qubits, int k_max) {
    if (n_qubits < 1) throw std::invalid_argument("revival_times: n_qubits must be >= 1");
    std::set<std::pair<long, long>> fracs;
    for (long k = 0; k < k_max; ++k)
        for (long p = 1; p <= n_qubits; ++p)
            for (long num : {k * p + 1, k * p + p - 1})
                if (num > 0) fracs.insert(detail::reduced(num, p));
    return detail::sorted_fractions(std::move(fracs));
}

// (k + (2p-1)/(2N)) for p = 1..N, k = 0..k_max-1, in units of t_r.
inline std::vector<double> attractor_times(int n_qubits, int k_max) {
    if (n_qubits < 1) throw std::invalid_argument("attractor_times: n_qubits must be >= 1");
    std::set<std::pair<long, long>> fracs;
    const long den = 2L * n_qubits;
    for (long k = 0; k < k_max; ++k)
        for (long p = 1; p <= n_qubits; ++p) fracs.insert(detail::reduced(k * den + 2 * p - 1, den));
    return detail::sorted_fractions(std::move(fracs));
}

// d_k = |k| (+-cos(theta + 2|k| pi t/t_r), sin(theta + 2|k| pi t/t_r)), sign from k.
inline std::array<double, 2> dipole_moment(double k, double theta, double t, double t_r) {
    if (k == 0.0) return {0.0, 0.0};
    const double ak = std::abs(k);
    const double angle = theta + 2.0 * ak * pi * t / t_r;
    return {ak * (k > 0 ? 1.0 : -1.0) * std::cos(angle), ak * std::sin(angle)};
}

}  // namespace tcm
