#include <cmath>
#include <random>

#include "doctest.h"
#include "qdsim/control.hpp"
#include "qdsim/io.hpp"
#include "qdsim/noise.hpp"
#include "qdsim/rng.hpp"
#include "qdsim/spin.hpp"
#include "qdsim/types.hpp"

using namespace qdsim;

namespace {

const double kPi = 3.14159265358979323846;

DephasingModel alternating_model(int d, double t2) {
    DephasingModel m;
    m.sensitivities = RealVector(d);
    for (int i = 0; i < d; ++i) m.sensitivities(i) = (i % 2 == 0) ? 1.0 : -1.0;
    m.t2_reference = t2;
    return m;
}

Matrix diagonal_jump(const DephasingModel& m) {
    Matrix L = Matrix::Zero(m.sensitivities.size(), m.sensitivities.size());
    L.diagonal() = m.sensitivities.cast<Complex>();
    return L;
}

Matrix random_density(int d, std::uint64_t seed) {
    auto rng = make_stream(seed, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));
    Matrix rho = m * m.adjoint();
    rho /= rho.trace().real();
    return rho;
}

}  // namespace

TEST_CASE("DephasingModel: gamma resolution against the T2 normalization") {
    const DephasingModel m = alternating_model(5, 3.0);
    CHECK_NOTHROW(m.validate(5));
    // min nonzero (s_j - s_k)^2 = 4 -> gamma = 2 / (3 * 4)
    CHECK(m.resolved_gamma() == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(!m.is_trivial());

    DephasingModel direct;
    direct.sensitivities = RealVector::Zero(3);
    direct.sensitivities << 1.0, 0.0, -1.0;
    direct.gamma = 0.7;
    CHECK(direct.resolved_gamma() == doctest::Approx(0.7).epsilon(1e-15));

    // a T2 request with all-equal sensitivities has no decaying coherence to
    // normalize against; the failure surfaces when the rate is resolved
    DephasingModel flat;
    flat.sensitivities = RealVector::Constant(3, 2.0);
    flat.t2_reference = 1.0;
    CHECK_NOTHROW(flat.validate(3));
    CHECK(flat.is_trivial());
    CHECK_THROWS_AS(flat.resolved_gamma(), std::invalid_argument);

    CHECK(DephasingModel::none(4).is_trivial());
    CHECK_THROWS_AS(m.validate(4), std::invalid_argument);  // dimension mismatch
}

TEST_CASE("lindblad_evolve: entry validation") {
    const int d = 3;
    const Matrix rho = random_density(d, 1);
    const Matrix h = spin_operators(d).Jx;
    const Matrix L = Matrix::Identity(d, d);

    CHECK_THROWS_AS(lindblad_evolve(rho, h, L, 0.1, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(lindblad_evolve(rho, h, L, 0.1, 1.0, -0.1), std::invalid_argument);

    Matrix bad_rho = rho;
    bad_rho(0, 1) += Complex(0.1, 0.0);  // breaks Hermiticity
    CHECK_THROWS_AS(lindblad_evolve(bad_rho, h, L, 0.1, 1.0, 0.01), std::invalid_argument);

    Matrix not_diag = L;
    not_diag(0, 1) = 0.5;
    CHECK_THROWS_AS(lindblad_evolve(rho, h, not_diag, 0.1, 1.0, 0.01), std::invalid_argument);

    Matrix unnormalized = 2.0 * rho;
    CHECK_THROWS_AS(lindblad_evolve(unnormalized, h, L, 0.1, 1.0, 0.01), std::invalid_argument);

    Matrix negative = Matrix::Zero(d, d);
    negative(0, 0) = 1.5;
    negative(1, 1) = -0.5;
    CHECK_THROWS_AS(lindblad_evolve(negative, h, L, 0.1, 1.0, 0.01), std::invalid_argument);
}

TEST_CASE("lindblad_evolve: gamma = 0 reproduces unitary evolution") {
    const int d = 4;
    const Matrix rho = random_density(d, 2);
    const Matrix h = 1.3 * spin_operators(d).Jx + 0.4 * spin_operators(d).Jz;
    const double T = 0.8;
    const Matrix evolved = lindblad_evolve(rho, h, Matrix::Zero(d, d), 0.0, T, T / 200);
    const Matrix u = propagate(h, T);
    CHECK((evolved - u * rho * u.adjoint()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("lindblad_evolve: pure dephasing leaves populations exactly unchanged") {
    const int d = 5;
    const DephasingModel m = alternating_model(d, 3.0);
    const Matrix rho = random_density(d, 3);
    const Matrix out =
        lindblad_evolve(rho, Matrix::Zero(d, d), diagonal_jump(m), m.resolved_gamma(), 2.0, 0.01);
    // bitwise equality of the populations: the diagonal dissipator coefficient
    // cancels exactly in floating point
    CHECK((out.diagonal() - rho.diagonal()).cwiseAbs().maxCoeff() == 0.0);
    // while coherences genuinely decayed
    CHECK(std::abs(out(0, 1)) < std::abs(rho(0, 1)));
}

TEST_CASE("lindblad_evolve: coherence decay matches the closed form per pair") {
    const int d = 3;
    DephasingModel m;
    m.sensitivities = RealVector(3);
    m.sensitivities << 1.0, 0.0, -1.0;
    m.gamma = 0.3;

    const Vector s = Vector::Constant(d, Complex(1.0 / std::sqrt(double(d)), 0.0));
    const Matrix rho0 = s * s.adjoint();
    const double T = 1.0;
    const Matrix rho =
        lindblad_evolve(rho0, Matrix::Zero(d, d), diagonal_jump(m), m.gamma, T, T / 200);

    auto damp = [&](int j, int k) {
        const double ds = m.sensitivities[j] - m.sensitivities[k];
        return std::exp(-m.gamma * ds * ds * T / 2.0);
    };
    CHECK(std::abs(rho(0, 1) - rho0(0, 1) * damp(0, 1)) < 1e-9);
    CHECK(std::abs(rho(0, 2) - rho0(0, 2) * damp(0, 2)) < 1e-9);
    CHECK(std::abs(rho(1, 2) - rho0(1, 2) * damp(1, 2)) < 1e-9);
}

TEST_CASE("lindblad_evolve: maximally mixed state is stationary") {
    const int d = 4;
    const Matrix rho = Matrix::Identity(d, d) / double(d);
    const Matrix h = 0.9 * spin_operators(d).Jx;
    const DephasingModel m = alternating_model(d, 2.0);
    const Matrix out = lindblad_evolve(rho, h, diagonal_jump(m), m.resolved_gamma(), 1.5, 0.01);
    CHECK((out - rho).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("PulseTiming: durations and steps") {
    const PulseTiming ft = PulseTiming::from_theta(2.0);
    CHECK(ft.duration(kPi) == doctest::Approx(kPi / 4.0).epsilon(1e-15));
    CHECK(ft.duration(0.0) == 0.0);
    CHECK_THROWS_AS(ft.duration(-0.1), std::invalid_argument);
    CHECK(ft.step_for(1.0) == doctest::Approx(1.0 / 200).epsilon(1e-15));

    const PulseTiming fx = PulseTiming::fixed(0.033, 1e-4);
    CHECK(fx.duration(2.7) == 0.033);
    CHECK(fx.step_for(0.033) == 1e-4);

    CHECK_THROWS_AS(PulseTiming::from_theta(0.0), std::invalid_argument);
    CHECK_THROWS_AS(PulseTiming::fixed(-1.0), std::invalid_argument);
}

TEST_CASE("noisy_sequence: trivial model equals the exact composition") {
    const int d = 5;
    const auto dir = default_fixture_dir();
    const PulseTable t1 = parse_pulse_table(read_file(dir / "table1_d5.csv"));
    const PulseSequence* seq = t1.find("mark2");
    REQUIRE(seq != nullptr);

    const double omega = 2.0;
    Vector e0 = Vector::Zero(d);
    e0(0) = 1;
    const Matrix rho0 = e0 * e0.adjoint();
    const Matrix rho = noisy_sequence(rho0, *seq, ToneSet::ideal(d, omega),
                                      DephasingModel::none(d), PulseTiming::from_theta(omega));
    const Matrix u = compose(*seq);
    CHECK((rho - u * rho0 * u.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("noisy_sequence: fidelity to the ideal state drops as gamma grows") {
    const int d = 5;
    const auto dir = default_fixture_dir();
    const PulseTable t1 = parse_pulse_table(read_file(dir / "table1_d5.csv"));
    const PulseSequence* seq = t1.find("equal_sup");
    REQUIRE(seq != nullptr);

    const double omega = kPi / (4 * 0.033);
    Vector e0 = Vector::Zero(d);
    e0(0) = 1;
    const Matrix rho0 = e0 * e0.adjoint();
    const Vector ideal = compose(*seq) * e0;

    auto overlap_at = [&](double t2) {
        const Matrix rho = noisy_sequence(rho0, *seq, ToneSet::ideal(d, omega),
                                          alternating_model(d, t2),
                                          PulseTiming::from_theta(omega));
        return (ideal.adjoint() * rho * ideal)(0, 0).real();
    };
    const double f_slow = overlap_at(10.0);
    const double f_fast = overlap_at(1.0);
    CHECK(f_slow < 1.0);
    CHECK(f_fast < f_slow);
    CHECK(f_slow > 0.9);

    PulseSequence wrong = *seq;
    wrong.d = 4;
    CHECK_THROWS_AS(noisy_sequence(rho0, wrong, ToneSet::ideal(d, omega),
                                   DephasingModel::none(d), PulseTiming::from_theta(omega)),
                    std::invalid_argument);
}

TEST_CASE("ramsey: zero delay returns the fully flipped population") {
    // pi/2 then pi/2 with no free evolution is a pi pulse: |0> -> |d-1>, so
    // <Jz> = +j
    for (int d : {2, 5}) {
        CAPTURE(d);
        ToneSet tones = ToneSet::ideal(d, 1.0);
        const RamseyResult r =
            ramsey(d, tones, DephasingModel::none(d), {0.0, 0.1});
        CHECK(r.jz[0] == doctest::Approx((d - 1) / 2.0).epsilon(1e-9));
    }
}

TEST_CASE("ramsey: noiseless fringe oscillates at the detuning") {
    const int d = 2;
    ToneSet tones = ToneSet::ideal(d, 1.0);
    tones.detunings << 2 * kPi;  // angular kHz -> one fringe per ms

    std::vector<double> delays;
    for (int i = 0; i <= 40; ++i) delays.push_back(0.05 * i);
    const RamseyResult r = ramsey(d, tones, DephasingModel::none(d), delays);
    REQUIRE(r.jz.size() == delays.size());
    // jz(t) = (1/2) cos(delta t): zero at quarter period, full revival at 1 ms
    CHECK(r.jz[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::abs(r.jz[5]) < 1e-9);                         // t = 0.25 ms
    CHECK(r.jz[10] == doctest::Approx(-0.5).epsilon(1e-9));  // t = 0.50 ms
    CHECK(r.jz[20] == doctest::Approx(0.5).epsilon(1e-9));   // t = 1.00 ms
}

TEST_CASE("ramsey: fitted T2 and frequency recover the dephasing model") {
    const int d = 2;
    ToneSet tones = ToneSet::ideal(d, 1.0);
    tones.detunings << 2 * kPi;

    DephasingModel m;
    m.sensitivities = RealVector(2);
    m.sensitivities << 0.5, -0.5;
    m.t2_reference = 2.0;

    std::vector<double> delays;
    for (int i = 0; i <= 40; ++i) delays.push_back(0.1 * i);
    const RamseyResult r = ramsey(d, tones, m, delays);
    CHECK(r.fit_ok);
    CHECK(r.t2_fit == doctest::Approx(2.0).epsilon(0.02));
    CHECK(r.frequency_fit == doctest::Approx(2 * kPi).epsilon(0.01));
    CHECK(std::abs(r.amplitude_fit) == doctest::Approx(0.5).epsilon(0.05));

    const std::string csv = r.csv();
    CHECK(csv.rfind("delay_ms,jz\n", 0) == 0);
}

TEST_CASE("ramsey: input validation") {
    ToneSet tones = ToneSet::ideal(2, 1.0);
    CHECK_THROWS_AS(ramsey(2, tones, DephasingModel::none(2), {}), std::invalid_argument);
    CHECK_THROWS_AS(ramsey(2, tones, DephasingModel::none(2), {0.2, 0.1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ramsey(2, tones, DephasingModel::none(2), {-0.1, 0.1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ramsey(3, tones, DephasingModel::none(3), {0.0, 0.1}),
                    std::invalid_argument);  // tone set dimension mismatch
}

TEST_CASE("clifford_table: 24 distinct elements, identity first, closed under inverse") {
    const auto& table = clifford_table();
    REQUIRE(table.size() == 24);
    CHECK(unitary_fidelity(table[0].u2, Matrix::Identity(2, 2)) ==
          doctest::Approx(1.0).epsilon(1e-12));

    for (size_t i = 0; i < 24; ++i) {
        for (size_t j = i + 1; j < 24; ++j)
            CHECK(unitary_fidelity(table[i].u2, table[j].u2) < 1.0 - 1e-6);
        // the inverse of each element is in the set
        const Matrix inv = table[i].u2.adjoint();
        double best = 0;
        for (size_t j = 0; j < 24; ++j)
            best = std::max(best, unitary_fidelity(inv, table[j].u2));
        CHECK(best == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("clifford_su2_embedded: d=2 lift reproduces the canonical representatives") {
    const auto lifted = clifford_su2_embedded(2);
    const auto& table = clifford_table();
    REQUIRE(lifted.size() == 24);
    for (size_t i = 0; i < 24; ++i)
        CHECK(unitary_fidelity(lifted[i], table[i].u2) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("rz_rotation: diagonal phases linear in m") {
    const Matrix rz = rz_rotation(3, 0.8);
    CHECK(is_diagonal(rz, 1e-15));
    CHECK(std::abs(rz(0, 0) - std::exp(Complex(0, 0.8))) < 1e-14);   // m = -1
    CHECK(std::abs(rz(1, 1) - Complex(1, 0)) < 1e-14);               // m = 0
    CHECK(std::abs(rz(2, 2) - std::exp(Complex(0, -0.8))) < 1e-14);  // m = +1
}

TEST_CASE("decompose_clifford: 0/1 physical pulses, equal tone phases, exact recomposition") {
    int physical = 0;
    for (int d : {2, 3, 8}) {
        CAPTURE(d);
        const auto lifted = clifford_su2_embedded(d);
        for (int i = 0; i < 24; ++i) {
            const CliffordDecomposition dec = decompose_clifford(i, d);
            CHECK(dec.pulses.pulses.size() <= 1);
            for (const auto& p : dec.pulses.pulses) {
                CHECK(p.theta > 0);
                CHECK(p.theta <= kPi + 1e-12);
                for (int k = 1; k < d - 1; ++k)
                    CHECK(p.phases[k] == doctest::Approx(p.phases[0]).epsilon(1e-15));
            }
            CHECK(unitary_fidelity(recompose(dec, d), lifted[i]) >
                  1.0 - 1e-9);
            if (d == 2 && !dec.pulses.pulses.empty()) ++physical;
        }
    }
    CHECK(physical == 20);  // 4 diagonal Cliffords need no pulse
    CHECK(mean_pulses_per_clifford() == doctest::Approx(20.0 / 24.0).epsilon(1e-15));
    CHECK_THROWS_AS(decompose_clifford(24, 2), std::invalid_argument);
    CHECK_THROWS_AS(decompose_clifford(-1, 2), std::invalid_argument);
}

TEST_CASE("compile_clifford_sequence: frame folding reproduces the group product") {
    auto rng = make_stream(321, 0);
    std::uniform_int_distribution<int> pick(0, 23);
    for (int d : {2, 3, 5}) {
        CAPTURE(d);
        const auto lifted = clifford_su2_embedded(d);
        std::vector<int> word(9);
        for (int& w : word) w = pick(rng);

        Matrix net = Matrix::Identity(d, d);
        for (int w : word) net = lifted[w] * net;

        const CompiledSequence comp = compile_clifford_sequence(word, d);
        const Matrix reconstructed = rz_rotation(d, comp.final_frame) * compose(comp.pulses);
        CHECK(unitary_fidelity(reconstructed, net) > 1.0 - 1e-9);
        CHECK(int(comp.pulses.pulses.size()) <= int(word.size()));
    }
}

TEST_CASE("rb_run: noiseless survival is unity and the decay fit is flat") {
    RBConfig cfg;
    cfg.lengths = {1, 4, 12};
    cfg.n_sequences = 3;
    cfg.seed = 77;

    const double omega = 2.0;
    const RBResult res = rb_run(cfg, 2, ToneSet::ideal(2, omega), DephasingModel::none(2),
                                PulseTiming::from_theta(omega));
    REQUIRE(res.points.size() == 3);
    for (const auto& p : res.points) {
        CHECK(p.mean_survival == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(p.stderr_survival < 1e-10);
    }
    CHECK(res.p == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.per_pulse_fidelity == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.n_bar == doctest::Approx(20.0 / 24.0).epsilon(1e-12));

    const std::string csv = res.csv();
    CHECK(csv.rfind("m,mean_survival,stderr\n", 0) == 0);
}

TEST_CASE("rb_run: dephasing produces a genuine decay with p < 1") {
    RBConfig cfg;
    cfg.lengths = {1, 6, 16, 30};
    cfg.n_sequences = 6;
    cfg.seed = 5;

    const double omega = kPi / (4 * 0.033);  // 33 us pi/2 pulses
    const RBResult res = rb_run(cfg, 2, ToneSet::ideal(2, omega), alternating_model(2, 1.0),
                                PulseTiming::from_theta(omega));
    CHECK(res.p < 1.0);
    CHECK(res.p > 0.0);
    CHECK(res.points.front().mean_survival > res.points.back().mean_survival);
    CHECK(res.per_pulse_fidelity < 1.0);
    CHECK(res.per_pulse_fidelity > 0.8);
}

TEST_CASE("rb_run: sequence-level determinism and config validation") {
    RBConfig cfg;
    cfg.lengths = {2, 5, 9};
    cfg.n_sequences = 2;
    cfg.seed = 13;
    const double omega = 2.0;
    const RBResult a = rb_run(cfg, 3, ToneSet::ideal(3, omega), DephasingModel::none(3),
                              PulseTiming::from_theta(omega));
    const RBResult b = rb_run(cfg, 3, ToneSet::ideal(3, omega), DephasingModel::none(3),
                              PulseTiming::from_theta(omega));
    for (size_t i = 0; i < a.points.size(); ++i)
        CHECK(a.points[i].mean_survival == b.points[i].mean_survival);

    RBConfig bad = cfg;
    bad.lengths = {};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.lengths = {3, 3};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.lengths = {0, 2};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.lengths = {2, 5};
    bad.n_sequences = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("nelder_mead: quadratic bowl and bound clamping") {
    RealVector target(3);
    target << 0.3, -1.2, 2.0;
    auto objective = [&](const RealVector& x) { return (x - target).squaredNorm(); };

    RealVector x0 = RealVector::Zero(3);
    RealVector lo = RealVector::Constant(3, -5.0), hi = RealVector::Constant(3, 5.0);
    NelderMeadOptions opts;
    const NelderMeadResult res = nelder_mead(objective, x0, lo, hi, opts);
    CHECK(res.converged);
    CHECK((res.x - target).norm() < 1e-5);
    CHECK(res.value < 1e-9);
    // trace is the running best, hence non-increasing
    for (size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] <= res.trace[i - 1] + 1e-15);

    // optimum outside the box: solution sticks to the boundary
    RealVector tight_hi = RealVector::Constant(3, 1.0);
    const NelderMeadResult clamped = nelder_mead(objective, x0, lo, tight_hi, opts);
    CHECK(clamped.x[2] <= 1.0 + 1e-12);
    CHECK(clamped.x[2] > 0.9);
}

TEST_CASE("CalibrationProblem::make: starts, bounds, and inverse-closed words") {
    const double omega = 2.0;
    const CalibrationProblem prob = CalibrationProblem::make(4, omega, 3, 6, 0.10, 99);
    CHECK(prob.d == 4);
    CHECK(prob.true_amplitudes.size() == 3);
    CHECK((prob.start_amplitudes - 1.1 * prob.true_amplitudes).cwiseAbs().maxCoeff() < 1e-12);
    for (int k = 0; k < 3; ++k) {
        CHECK(prob.lower_bounds[k] < prob.true_amplitudes[k]);
        CHECK(prob.upper_bounds[k] > prob.start_amplitudes[k]);
    }
    REQUIRE(prob.sequences.size() == 3);

    const auto lifted = clifford_su2_embedded(4);
    for (const auto& word : prob.sequences) {
        CHECK(word.size() == 7);  // length + closing inverse
        Matrix net = Matrix::Identity(4, 4);
        for (int w : word) net = lifted[w] * net;
        CHECK(unitary_fidelity(net, Matrix::Identity(4, 4)) > 1.0 - 1e-9);
    }
}

TEST_CASE("calibration_objective: exactly one at the true amplitudes, lower elsewhere") {
    const CalibrationProblem prob = CalibrationProblem::make(3, 1.5, 3, 8, 0.10, 21);
    CHECK(calibration_objective(prob, prob.true_amplitudes) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(calibration_objective(prob, prob.start_amplitudes) < 1.0 - 1e-6);
    RealVector wrong_size = RealVector::Ones(5);
    CHECK_THROWS_AS(calibration_objective(prob, wrong_size), std::invalid_argument);
}

TEST_CASE("nelder_mead_calibrate: recovers amplitudes, trivially so from a zero perturbation") {
    const CalibrationProblem at_truth = CalibrationProblem::make(3, 1.5, 3, 8, 0.0, 22);
    const CalibrationResult res0 = nelder_mead_calibrate(at_truth);
    CHECK(res0.rel_error < 1e-6);

    const CalibrationProblem prob = CalibrationProblem::make(3, 1.5, 4, 10, 0.10, 23);
    const CalibrationResult res = nelder_mead_calibrate(prob);
    CHECK(res.converged);
    CHECK(res.rel_error < 0.01);
    CHECK(res.iterations > 0);

    const std::string json = res.to_json();
    CHECK(json.find("rel_error") != std::string::npos);
    CHECK(json.find("recovered") != std::string::npos);
}

TEST_CASE("calibration_landscape: peak at the true amplitudes, per-sequence grids kept") {
    const CalibrationProblem prob = CalibrationProblem::make(4, 1.5, 3, 6, 0.10, 31);
    const int n = 7, center = n / 2;
    RealVector gi(n), gj(n);
    for (int k = 0; k < n; ++k) {
        const double f = 0.9 + 0.2 * k / (n - 1);
        gi(k) = prob.true_amplitudes[0] * f;
        gj(k) = prob.true_amplitudes[1] * f;
    }
    const LandscapeResult land = calibration_landscape(prob, 0, 1, gi, gj);
    REQUIRE(land.per_sequence.size() == 3);
    REQUIRE(land.averaged.rows() == n);
    REQUIRE(land.averaged.cols() == n);

    CHECK(land.averaged(center, center) == doctest::Approx(1.0).epsilon(1e-12));
    int bi = 0, bj = 0;
    land.averaged.maxCoeff(&bi, &bj);
    CHECK(bi == center);
    CHECK(bj == center);

    // averaged is the mean of the per-sequence grids
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
    for (const auto& g : land.per_sequence) mean += g;
    mean /= 3.0;
    CHECK((mean - land.averaged).cwiseAbs().maxCoeff() < 1e-12);

    const std::string csv = land.csv();
    CHECK(csv.find(',') != std::string::npos);

    CHECK_THROWS_AS(calibration_landscape(prob, 0, 0, gi, gj), std::invalid_argument);
    CHECK_THROWS_AS(calibration_landscape(prob, 0, 3, gi, gj), std::invalid_argument);
}
