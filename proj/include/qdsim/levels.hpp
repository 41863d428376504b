#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qdsim/types.hpp"

namespace qdsim {

// Bohr magneton in MHz per gauss (universal constant, not an ion parameter).
inline constexpr double kMuBMHzPerGauss = 1.3996245;

struct HyperfineConstants {
    double I = 0;   // nuclear spin (half-integer)
    double J = 0;   // electronic angular momentum (half-integer)
    double A = 0;   // magnetic-dipole constant, MHz
    double B = 0;   // electric-quadrupole constant, MHz
    double gJ = 0;  // Lande g-factor
    double gI = 0;  // nuclear g-factor

    void validate() const;
    int dim() const { return int((2 * I + 1) * (2 * J + 1) + 0.5); }
};

struct FieldConfig {
    double Bz = 0;                   // static field along quantization axis, gauss
    double muB = kMuBMHzPerGauss;    // MHz/gauss
};

struct Level {
    int index = 0;       // position in energy-sorted order
    double energy = 0;   // MHz
    double mF = 0;       // good quantum number (Fz eigenvalue)
    Vector composition;  // weights over the uncoupled |mI,mJ> product basis
};

struct Transition {
    int lower = 0, upper = 0;  // level indices, energy-ordered
    double frequency = 0;      // MHz
    double strength = 0;       // max over requested polarizations of |<f|J_a|i>|
    double sensitivity = 0;    // d(frequency)/dBz, MHz/gauss
};

struct QuditAssignment {
    int d = 0;
    std::vector<int> state_indices;        // d level indices, chain order
    std::vector<double> tone_frequencies;  // d-1 chain transition frequencies, MHz
    std::vector<double> coupling_strengths;
    double score = 0;
};

struct ScoringWeights {
    double strength = 1.0;     // rewards weak link strength (min over chain)
    double sensitivity = 1.0;  // penalizes max |transition sensitivity|
    double separation = 1.0;   // rewards min pairwise spectral separation
};

// Hyperfine + Zeeman Hamiltonian A I.J + quadrupole + muB Bz (gJ mJ + gI mI)
// in the uncoupled |mI,mJ> product basis (mI-major ordering).
Matrix build_hamiltonian(const HyperfineConstants& hc, const FieldConfig& fc);

// Energy-sorted eigenlevels. H commutes with Fz, so the problem is solved
// per-mF block, which keeps every eigenvector supported on a single mF even
// when blocks are degenerate (e.g. Bz = 0). Degenerate ties sort by mF.
std::vector<Level> diagonalize_levels(const HyperfineConstants& hc, const FieldConfig& fc);

// All |dmF| <= 1 pairs with frequency, polarization-maximized |<f|J_a|i>|
// (a in pols, subset of {x,z}), and d(freq)/dBz by central finite difference
// with a 1 mG step (eigenvectors matched across field steps by overlap).
std::vector<Transition> transition_table(const HyperfineConstants& hc, const FieldConfig& fc,
                                         const std::set<char>& pols = {'x', 'z'});

// Chains of d levels connected by allowed transitions, scored by
//   w_strength * min(strength) - w_sensitivity * max|sensitivity|
//     + w_separation * min pairwise |freq_i - freq_j|,
// ranked descending; ties broken by lexicographic state indices.
std::vector<QuditAssignment> score_qudit_candidates(const std::vector<Transition>& table, int d,
                                                    const ScoringWeights& weights = {});

// Off-resonant population error sum_{spectators x tones} (Omega_ik/delta_ik)^2.
// Tones sit at the chain transition frequencies with per-link amplitudes
// omega_scale * sqrt((k+1)(d-1-k)) (the flat-top displacement profile); a
// spectator transition couples with Omega scaled by its tabulated strength
// relative to the driven link's strength. Chain links themselves are not
// spectators. Zero detuning to a spectator throws (degenerate spectrum).
double off_resonant_error(const QuditAssignment& assignment, const std::vector<Transition>& table,
                          double omega_scale_khz);

std::string transition_table_csv(const std::vector<Transition>& table);

}  // namespace qdsim
