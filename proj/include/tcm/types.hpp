// types.hpp: scalar aliases, error types and the model configuration shared by every module

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace tcm {

using cplx = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Coherent-state Poisson tail allowed beyond the Fock cutoff.
inline constexpr double kTruncationTolerance = 1e-10;

class TruncationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Ordering of the qubit factor of a joint state or qubit-side density matrix.
//   product: 2^N entries, |e> = bit 0, |g> = bit 1, qubit 0 most significant
//   dicke:   N+1 entries, index r = number of ground qubits (m = N/2 - r)
enum class QubitBasis { product, dicke };

// Field phase enters as alpha = sqrt(nbar) * exp(-i theta).
struct CoherentField {
    double nbar = 0.0;
    double theta = 0.0;

    cplx alpha() const { return std::polar(std::sqrt(nbar), -theta); }
};

struct ModelConfig {
    int n_qubits = 1;
    double coupling = 1.0;  // lambda
    double nbar = 50.0;
    double theta = 0.0;
    std::optional<int> fock_cutoff;  // unset -> default_cutoff()

    CoherentField field() const { return {nbar, theta}; }

    // 200 at nbar = 50, otherwise ceil(nbar + 10 sqrt(nbar)) plus headroom for
    // the photons the qubits can emit.
    int default_cutoff() const {
        if (nbar == 50.0) return 200;
        return static_cast<int>(std::ceil(nbar + 10.0 * std::sqrt(nbar))) + n_qubits;
    }

    int n_max() const { return fock_cutoff.value_or(default_cutoff()); }

    double minimum_cutoff() const { return nbar + 10.0 * std::sqrt(nbar); }

    double revival_time() const { return 2.0 * pi * std::sqrt(nbar) / coupling; }
    double collapse_time() const { return 2.0 / coupling; }

    void validate() const {
        if (n_qubits < 1) throw std::invalid_argument("ModelConfig: n_qubits must be >= 1");
        if (!(coupling > 0.0) || !std::isfinite(coupling))
            throw std::invalid_argument("ModelConfig: coupling must be positive");
        if (!(nbar >= 0.0) || !std::isfinite(nbar))
            throw std::invalid_argument("ModelConfig: nbar must be >= 0");
        if (!std::isfinite(theta)) throw std::invalid_argument("ModelConfig: theta must be finite");
        if (n_max() < 0) throw std::invalid_argument("ModelConfig: fock_cutoff must be >= 0");
        if (static_cast<double>(n_max()) < minimum_cutoff())
            throw TruncationError("ModelConfig: fock_cutoff " + std::to_string(n_max()) +
                                  " is below nbar + 10 sqrt(nbar) = " +
                                  std::to_string(minimum_cutoff()));
    }
};

}  // namespace tcm
