#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qdsim/control.hpp"
#include "qdsim/types.hpp"

namespace qdsim {

// Magnetic-dephasing model: jump operator L = diag(sensitivities). When
// t2_reference is set, gamma is derived so the slowest-decaying nonzero
// coherence has exactly that T2: the (j,k) coherence damps as
// exp(-gamma (s_j - s_k)^2 t / 2), so gamma = 2 / (T2 * min nonzero (s_j-s_k)^2).
struct DephasingModel {
    RealVector sensitivities;  // per-level, MHz/gauss
    double gamma = 0;          // rate scale, 1/ms (ignored when t2_reference set)
    std::optional<double> t2_reference;  // ms

    void validate(int d) const;
    double resolved_gamma() const;
    bool is_trivial() const;  // zero rate or all-equal sensitivities

    static DephasingModel none(int d);
};

// Fixed-step RK4 integration of
//   drho/dt = -i[H,rho] + gamma (L rho L^dag - 1/2 {L^dag L, rho}),
// with rho symmetrized each step. Throws on dt <= 0 or trace drift > 1e-6.
Matrix lindblad_evolve(const Matrix& rho, const Matrix& H, const Matrix& L, double gamma,
                       double T, double dt);

// How long a pulse of angle theta takes. FromTheta matches evolve_nonideal
// (t = theta / (2 * nominal_omega)); Fixed uses one configured duration per
// pulse, as in the hardware description (e.g. 33 us = 0.033 ms).
struct PulseTiming {
    enum class Mode { FromTheta, Fixed };
    Mode mode = Mode::FromTheta;
    double nominal_omega = 0;   // angular kHz
    double fixed_duration = 0;  // ms
    double dt = 0;              // RK4 step in ms; 0 -> duration/200

    double duration(double theta) const;
    double step_for(double duration) const;

    static PulseTiming from_theta(double omega, double dt = 0);
    static PulseTiming fixed(double duration_ms, double dt = 0);
};

// Applies each pulse of seq as a Lindblad evolution with
// H = rotating_hamiltonian(tones, pulse phases) over the pulse duration.
Matrix noisy_sequence(const Matrix& rho0, const PulseSequence& seq, const ToneSet& tones,
                      const DephasingModel& model, const PulseTiming& timing);

// --- Ramsey ------------------------------------------------------------

struct RamseyResult {
    std::vector<double> delays;  // ms
    std::vector<double> jz;      // <Jz> after the closing pi/2 pulse
    double t2_fit = 0;           // ms
    double frequency_fit = 0;    // angular kHz
    double amplitude_fit = 0;
    bool fit_ok = false;

    std::string csv() const;  // delay_ms,jz
};

// |0> -> pi/2 pulse -> free evolution (diagonal detuning Hamiltonian) under
// dephasing -> pi/2 pulse -> Tr(rho Jz); then a decaying-cosine fit for T2.
RamseyResult ramsey(int d, const ToneSet& tones, const DephasingModel& model,
                    const std::vector<double>& delays);

// --- SU(2)-embedded Cliffords and randomized benchmarking ---------------

struct CliffordElement {
    Matrix u2;     // canonical 2x2 representative, global phase stripped
    double alpha;  // ZYZ Euler angles: U ~ Rz(alpha) Ry(beta) Rz(gamma)
    double beta;
    double gamma;
};

// The 24 single-qubit Cliffords in a fixed deterministic order (identity
// first), generated by closure from {I,X,Y,Z,H,S}.
const std::vector<CliffordElement>& clifford_table();

// exp(-i chi Jz) in dimension d.
Matrix rz_rotation(int d, double chi);

// Lift of each Clifford to dimension d: exp(-ia Jz) exp(-ib Jy) exp(-ic Jz).
std::vector<Matrix> clifford_su2_embedded(int d);

// One Clifford as virtual-Z / physical-pulse / virtual-Z. The physical part is
// 0 pulses (diagonal Cliffords) or 1 displacement pulse with theta = beta and
// all tone phases equal (+pi/2 gives a Jy generator). The all-theta=pi
// alternative cannot reach the 16 Cliffords with beta = pi/2.
struct CliffordDecomposition {
    double z_pre = 0;  // applied first
    PulseSequence pulses;
    double z_post = 0;  // applied last
};

CliffordDecomposition decompose_clifford(int index, int d);
Matrix recompose(const CliffordDecomposition& dec, int d);

// Compile a time-ordered Clifford sequence into physical pulses only, folding
// every virtual Z into the tone phases of later pulses; the leftover frame
// rotation is returned (it does not affect |0> survival).
struct CompiledSequence {
    PulseSequence pulses;
    double final_frame = 0;
};

CompiledSequence compile_clifford_sequence(const std::vector<int>& indices, int d);

// Mean physical pulses per Clifford under decompose_clifford (20/24).
double mean_pulses_per_clifford();

struct RBConfig {
    std::vector<int> lengths;
    int n_sequences = 1;
    std::uint64_t seed = 0;
    bool include_inverse = true;

    void validate() const;
};

struct RBPoint {
    int m = 0;
    double mean_survival = 0;
    double stderr_survival = 0;
};

struct RBResult {
    std::vector<RBPoint> points;
    double amplitude = 0;  // A in A p^m + B
    double offset = 0;     // B
    double p = 1;          // decay base
    double per_pulse_fidelity = 1;  // p^(1/n_bar)
    double n_bar = 0;

    std::string csv() const;  // m,mean_survival,stderr
};

// Standard RB: random Clifford words (stream (seed, length_idx*n_seq+seq_idx)),
// optional brute-force inverse, compiled to pulses, run from |0><0| under the
// dephasing model; survival = final |0> population.
RBResult rb_run(const RBConfig& cfg, int d, const ToneSet& tones, const DephasingModel& model,
                const PulseTiming& timing);

// --- Amplitude calibration ----------------------------------------------

struct CalibrationProblem {
    int d = 0;
    double nominal_omega = 0;  // angular kHz drive scale
    RealVector true_amplitudes;
    RealVector start_amplitudes;
    RealVector lower_bounds;
    RealVector upper_bounds;
    std::vector<std::vector<int>> sequences;  // Clifford index words, inverse included

    void validate() const;

    // n_sequences random inverse-closed words of the given length; start =
    // true amplitudes scaled by (1 + perturbation); bounds at +-3x perturbation
    // (at least +-20%) around truth.
    static CalibrationProblem make(int d, double omega, int n_sequences, int length,
                                   double perturbation, std::uint64_t seed);
};

// Mean over sequences of |<ideal|psi(amplitudes)>|^2; the ideal outcome is the
// same compiled sequence at the true amplitudes. Noiseless (evolve_nonideal).
double calibration_objective(const CalibrationProblem& prob, const RealVector& amplitudes);

struct LandscapeResult {
    int axis_i = 0;
    int axis_j = 0;
    RealVector grid_i;  // amplitude values scanned on tone axis_i
    RealVector grid_j;
    std::vector<Eigen::MatrixXd> per_sequence;  // fidelity grids [i,j]
    Eigen::MatrixXd averaged;

    std::string csv() const;  // averaged grid, axis headers
};

// Scans two tone amplitudes over the given grids with the others held at the
// true values.
LandscapeResult calibration_landscape(const CalibrationProblem& prob, int axis_i, int axis_j,
                                      const RealVector& grid_i, const RealVector& grid_j);

struct NelderMeadOptions {
    int max_iters = 5000;
    double simplex_tol = 1e-6;  // vertex-diameter termination
    double spread_tol = 1e-10;  // objective-spread termination
    double initial_step = 0.05; // relative offset of the initial simplex
};

struct NelderMeadResult {
    RealVector x;
    double value = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;  // best objective per iteration
};

// Standard Nelder-Mead (coefficients 1, 2, 0.5, 0.5) with bound clamping.
NelderMeadResult nelder_mead(const std::function<double(const RealVector&)>& objective,
                             const RealVector& x0, const RealVector& lower,
                             const RealVector& upper, const NelderMeadOptions& opts);

struct CalibrationResult {
    RealVector recovered;
    RealVector true_amplitudes;
    double rel_error = 0;  // max relative amplitude error
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;

    std::string to_json() const;  // {recovered, true, rel_error, iterations}
};

CalibrationResult nelder_mead_calibrate(const CalibrationProblem& prob,
                                        const NelderMeadOptions& opts = {});

}  // namespace qdsim
