#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdsim/control.hpp"
#include "qdsim/types.hpp"

namespace qdsim {

enum class TargetKind { FullUnitary, StateMap, DiagonalUpToPhase };

// What a pulse sequence should implement. Full-unitary and diagonal-up-to-phase
// targets carry a unitary; state-map targets carry the desired output state for
// a given input state (default |0>). Oracles in this codebase are synthesized
// and verified as state maps on the equal superposition, which is the only
// state Grover ever feeds them (see ledger: short sequences cannot reach the
// full oracle unitary for off-center marks, and the published tables don't
// either).
struct TargetSpec {
    TargetKind kind = TargetKind::FullUnitary;
    int d = 0;
    Matrix target_unitary;  // FullUnitary / DiagonalUpToPhase
    Vector target_state;    // StateMap
    Vector input_state;     // StateMap; defaults to |0>

    void validate() const;

    static TargetSpec full_unitary(const Matrix& u);
    static TargetSpec diagonal_up_to_phase(const Matrix& u);
    static TargetSpec state_map(const Vector& target);                       // from |0>
    static TargetSpec state_map(const Vector& target, const Vector& input);  // from |input>
};

struct SynthesisConfig {
    int n_pulses = 2;
    int restarts = 20;
    int max_iters = 2000;
    double step = 0.5;        // initial line-search step
    double grad_step = 1e-6;  // finite-difference step
    double tol = 1e-6;        // target infidelity
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthesisResult {
    PulseSequence sequence;
    double infidelity = 1.0;
    int iterations = 0;  // accepted steps in the winning restart
    bool converged = false;
    int restart_index = 0;
    std::vector<double> trace;  // loss after each accepted step (winning restart)
};

// 1 - |Tr(Ut^dag U)|^2/d^2 for unitary targets (global phase modded out),
// 1 - |<psi_t|U|psi_in>|^2 for state maps.
double infidelity(const PulseSequence& seq, const TargetSpec& target);

// Central finite differences over the packed parameter vector
// [theta_1, phi_{1,0..d-2}, theta_2, ...]; length n_pulses*d.
RealVector gradient(const PulseSequence& seq, const TargetSpec& target, double grad_step = 1e-6);

// Best-of-restarts plain gradient descent with backtracking line search.
// Deterministic given cfg.seed; restart r draws from stream (seed, r) and the
// reduction picks minimum infidelity with ties broken by restart index.
SynthesisResult synthesize(const TargetSpec& target, const SynthesisConfig& cfg);

struct VerificationEntry {
    std::string operation;
    double fidelity = 0;      // best over conventions; states |<t|U|in>|^2, unitaries |Tr|^2/d^2
    std::string convention;   // which convention achieved it
    int n_pulses = 0;
    bool flagged = false;     // unknown operation name
};

struct VerificationReport {
    int d = 0;
    std::vector<VerificationEntry> entries;
    bool single_convention = false;  // all recognized rows agree on the winner
    std::string winning_convention;  // empty when no recognized rows

    std::string to_json() const;
};

// Names of the normalization/ordering conventions scanned by verify_pulse_table,
// in scan order: {jx,2jx} x {forward,reversed}.
const std::vector<std::string>& table_conventions();

// Composes each operation's pulses under every convention, scores against the
// analytic target inferred from the operation name (markK / equal_sup /
// reflection), and reports the per-operation best convention.
VerificationReport verify_pulse_table(const PulseTable& table, int d);

}  // namespace qdsim
