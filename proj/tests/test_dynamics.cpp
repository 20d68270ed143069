#include "oracles.hpp"
#include "tcm/dynamics.hpp"
#include "tcm/measures.hpp"

#include <gtest/gtest.h>

using namespace tcm;

namespace {

ModelConfig small_model(int n_qubits, double nbar, int cutoff, double coupling = 1.0) {
    ModelConfig m;
    m.n_qubits = n_qubits;
    m.nbar = nbar;
    m.coupling = coupling;
    m.fock_cutoff = cutoff;
    return m;
}

double max_diff(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Propagator, MatchesDenseHamiltonian) {
    std::mt19937_64 rng(21);
    for (int n : {1, 2, 3}) {
        const ModelConfig model = small_model(n, 1.0, 14, 0.8);
        const Propagator prop(model, QubitBasis::product);
        const Matrix h = oracle::hamiltonian(n, 14, 0.8);
        const JointState psi(QubitBasis::product, n, 14, oracle::random_state(rng, product_dim(n) * 15));
        for (double t : {0.3, 1.7, 5.2, 23.0}) {
            const Vector ref = oracle::evolve_dense(h, psi.amplitudes, t);
            EXPECT_LT(max_diff(prop.evolve(psi, t).amplitudes, ref), 1e-11) << n << " " << t;
        }
    }
}

TEST(Propagator, BlocksReproduceDenseHamiltonian) {
    const ModelConfig model = small_model(2, 1.0, 12);
    const Propagator prop(model, QubitBasis::product);
    const Matrix h = oracle::hamiltonian(2, 12, 1.0);
    Matrix assembled = Matrix::Zero(h.rows(), h.cols());
    for (const auto& b : prop.blocks())
        for (std::size_t i = 0; i < b.flat.size(); ++i)
            for (std::size_t j = 0; j < b.flat.size(); ++j)
                assembled(b.flat[i], b.flat[j]) = b.hamiltonian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    EXPECT_LT((assembled - h).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Propagator, VacuumRabiOscillation) {
    const ModelConfig model = small_model(1, 0.0, 3, 1.3);
    const Propagator prop(model, QubitBasis::product);
    const JointState psi = embed_product(all_excited(1), {0.0, 0.0}, 3);
    for (double t : {0.1, 0.7, 2.0}) {
        const JointState out = prop.evolve(psi, t);
        EXPECT_NEAR(std::norm(out.amp(0, 0)), std::pow(std::cos(1.3 * t), 2), 1e-13);
        EXPECT_NEAR(std::norm(out.amp(1, 1)), std::pow(std::sin(1.3 * t), 2), 1e-13);
    }
}

TEST(Propagator, ZeroTimeIsIdentity) {
    const ModelConfig model;
    const Propagator prop(model, QubitBasis::product);
    const JointState psi = embed_product(all_excited(1), model.field(), model.n_max());
    EXPECT_EQ(prop.evolve(psi, 0.0).amplitudes, psi.amplitudes);
}

TEST(Propagator, SingletIsDark) {
    const ModelConfig model = small_model(2, 4.0, 30);
    const Propagator prop(model, QubitBasis::product);
    Vector singlet = Vector::Zero(4);
    singlet(1) = 1.0 / std::sqrt(2.0);
    singlet(2) = -1.0 / std::sqrt(2.0);
    const JointState psi = embed_product(QubitState(2, singlet), model.field(), 30);
    EXPECT_LT(max_diff(prop.evolve(psi, 17.3).amplitudes, psi.amplitudes), 1e-12);
}

TEST(Propagator, DickeBasisAgreesWithProductBasis) {
    std::mt19937_64 rng(4);
    for (int n : {2, 3, 4}) {
        const ModelConfig model = small_model(n, 9.0, 45);
        const Propagator full(model, QubitBasis::product), sym(model, QubitBasis::dicke);
        const DickeState d(n, oracle::random_state(rng, n + 1));
        const JointState pd = embed_product(d, model.field(), 45);
        const JointState pp = embed_product(to_product_basis(d), model.field(), 45);
        for (double t : {1.0, 6.5}) {
            const JointState a = sym.evolve(pd, t), b = full.evolve(pp, t);
            EXPECT_LT((to_product_basis(partial_trace_field(a)).entries - partial_trace_field(b).entries).cwiseAbs().maxCoeff(),
                      1e-11);
            EXPECT_LT((partial_trace_qubits(a).entries - partial_trace_qubits(b).entries).cwiseAbs().maxCoeff(), 1e-11);
        }
    }
}

TEST(Propagator, ConservesNormAndExcitation) {
    std::mt19937_64 rng(9);
    const ModelConfig model = [] {
        ModelConfig m;
        m.n_qubits = 3;
        return m;
    }();
    const Propagator prop(model, QubitBasis::product);
    const JointState psi = embed_product(QubitState(3, oracle::random_state(rng, 8)), model.field(), model.n_max());
    const double lam0 = excitation_expectation(psi);
    for (double t : {5.0, 44.4, 0.5 * model.revival_time()}) {
        const JointState out = prop.evolve(psi, t);
        EXPECT_NEAR(out.norm(), 1.0, 1e-10);
        EXPECT_NEAR(excitation_expectation(out), lam0, 1e-9);
    }
}

TEST(Propagator, EntropiesOfBothSidesAgree) {
    const ModelConfig model;
    const Propagator prop(model, QubitBasis::product);
    const JointState psi = embed_product(all_excited(1), model.field(), model.n_max());
    for (double t : {3.0, 20.0, 0.5 * model.revival_time()}) {
        const JointState out = prop.evolve(psi, t);
        EXPECT_NEAR(entropy(partial_trace_field(out), 1), entropy(partial_trace_qubits(out), 1), 1e-8);
    }
}

TEST(Propagator, RejectsForeignStates) {
    const ModelConfig model = small_model(2, 1.0, 12);
    const Propagator prop(model, QubitBasis::product);
    const JointState wrong_cutoff = embed_product(all_ground(2), model.field(), 13);
    EXPECT_THROW(prop.evolve(wrong_cutoff, 1.0), DimensionError);
    const JointState wrong_basis = embed_product(dicke_basis_vector(2, 1.0), model.field(), 12);
    EXPECT_THROW(prop.evolve(wrong_basis, 1.0), DimensionError);
}

TEST(Propagator, RejectsShortCutoffAndHugeProductSpace) {
    EXPECT_THROW(Propagator(small_model(1, 50.0, 100), QubitBasis::product), TruncationError);
    ModelConfig big;
    big.n_qubits = kMaxProductQubits + 1;
    EXPECT_THROW(Propagator(big, QubitBasis::product), std::invalid_argument);
    big.nbar = 4.0;
    EXPECT_NO_THROW(Propagator(big, QubitBasis::dicke));
}

TEST(OneQubitAnalytic, MatchesPropagator) {
    const ModelConfig model = [] {
        ModelConfig m;
        m.theta = 0.6;
        return m;
    }();
    const Propagator prop(model, QubitBasis::product);
    const cplx ce(0.6, 0.0), cg(0.0, 0.8);
    Vector q(2);
    q << ce, cg;
    const JointState psi = embed_product(QubitState(1, q), model.field(), model.n_max());
    for (double t : {0.0, 1.0, 12.5, model.revival_time()}) {
        const JointState a = one_qubit_analytic(ce, cg, model, t);
        EXPECT_LT(max_diff(a.amplitudes, prop.evolve(psi, t).amplitudes), 1e-9) << t;
    }
}

TEST(OneQubitAnalytic, ExcitedStateCollapses) {
    const ModelConfig model;
    const double t = 0.25 * model.revival_time();  // ~5.6 collapse times in
    const JointState out = one_qubit_analytic(1.0, 0.0, model, t);
    const double p_e = partial_trace_field(out).entries(0, 0).real();
    EXPECT_NEAR(p_e, 0.5, 0.02);
}

TEST(OneQubitAnalytic, RejectsUnnormalised) {
    EXPECT_THROW(one_qubit_analytic(1.0, 1.0, ModelConfig{}, 1.0), std::invalid_argument);
}

TEST(TimeSeries, MatchesPointwiseEvolution) {
    const ModelConfig model = small_model(2, 4.0, 30);
    const Propagator prop(model, QubitBasis::product);
    const JointState psi = embed_product(all_excited(2), model.field(), 30);
    const std::vector<double> times = TimeGrid{0.0, 10.0, 11}.values();
    const auto series = evolve_series(prop, psi, times, [](double, const JointState& s) { return s.amplitudes; });
    ASSERT_EQ(series.size(), times.size());
    for (std::size_t i = 0; i < times.size(); ++i) EXPECT_LT(max_diff(series[i], prop.evolve(psi, times[i]).amplitudes), 1e-13);
}

TEST(TimeSeries, RejectsNonMonotoneGrid) {
    const ModelConfig model = small_model(1, 1.0, 12);
    const Propagator prop(model, QubitBasis::product);
    const JointState psi = embed_product(all_excited(1), model.field(), 12);
    const std::vector<double> times{0.0, 2.0, 1.0};
    EXPECT_THROW(evolve_series(prop, psi, times, [](double t, const JointState&) { return t; }), std::invalid_argument);
}

TEST(TimeSeries, GridEndpoints) {
    const auto v = TimeGrid{1.0, 3.0, 5}.values();
    ASSERT_EQ(v.size(), 5u);
    EXPECT_EQ(v.front(), 1.0);
    EXPECT_EQ(v.back(), 3.0);
    EXPECT_EQ((TimeGrid{2.0, 9.0, 1}.values()), std::vector<double>{2.0});
    EXPECT_THROW(TimeGrid({0.0, 1.0, 0}).values(), std::invalid_argument);
}

TEST(Excitation, CoherentFieldMean) {
    const ModelConfig model;
    EXPECT_NEAR(excitation_expectation(embed_product(all_excited(1), model.field(), model.n_max())), 51.0, 1e-8);
    EXPECT_NEAR(excitation_expectation(embed_product(all_ground(1), model.field(), model.n_max())), 50.0, 1e-8);
}
