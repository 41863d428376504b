#pragma once

#include <map>
#include <string>
#include <vector>

#include "qdsim/types.hpp"

namespace qdsim {

struct ToneSet {
    int d = 0;
    RealVector amplitudes;  // Omega_k, k=0..d-2, angular kHz (rad/ms)
    RealVector detunings;   // delta_k, k=0..d-2, angular kHz

    void validate() const;
    static ToneSet ideal(int d, double omega);  // Eq-style flat-top profile, zero detuning
};

struct PulseParams {
    double theta = 0;   // rotation angle, radians
    RealVector phases;  // phi_k, k=0..d-2, radians (never reduced mod 2pi)

    static PulseParams common(int d, double theta, double phi);  // all tones same phase
};

struct PulseSequence {
    int d = 0;
    std::vector<PulseParams> pulses;  // first element applied first
};

// Omega * sqrt(k(d-k)) for k=1..d-1: the per-coupling amplitudes that make the
// multi-tone Hamiltonian proportional to Jx.
RealVector ideal_amplitudes(int d, double omega);

// Tridiagonal rotating-frame Hamiltonian: (k,k+1) = Omega_k e^{i phi_k},
// diagonal = cumulative detuning sums (entry 0 is 0). Units: angular kHz.
Matrix rotating_hamiltonian(const ToneSet& tones, const RealVector& phases);

// Displacement D(phi, theta) = exp(-i theta G(phi)) with the generator
// normalized so G(0) = Jx exactly (theta = pi is a full spin flip).
Matrix displacement(int d, const PulseParams& p);

// Virtual SNAP gate: diag(e^{i Phi_k}) with Phi_0 = 0, Phi_{k+1} = Phi_k + phi_k.
Matrix snap(int d, const RealVector& phases);

// Product D_n ... D_2 D_1 (first pulse applied first). Empty sequence -> identity.
Matrix compose(const PulseSequence& seq);

// Product of exp(-i H_rot(tones, phi_n) t_n) with t_n = theta_n / (2 * nominal_omega):
// the duration a pulse of angle theta_n takes when the nominal drive scale is
// nominal_omega (ideal amplitudes at that scale give H_rot = 2*omega*Jx, so
// this reproduces compose() exactly when tones are ideal and detunings vanish).
Matrix evolve_nonideal(const PulseSequence& seq, const ToneSet& tones, double nominal_omega);

// Pulse-table CSV: columns operation,pulse,theta,phi_1,..,phi_{d-1}.
// Parsing preserves the full printed precision and row order per operation.
struct PulseTable {
    int d = 0;
    std::vector<std::pair<std::string, PulseSequence>> operations;  // insertion order

    const PulseSequence* find(const std::string& op) const;
};

PulseTable parse_pulse_table(const std::string& csv_text);
std::string pulse_table_csv(const PulseTable& table);

}  // namespace qdsim
