#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "qdsim/control.hpp"
#include "qdsim/noise.hpp"
#include "qdsim/types.hpp"

namespace qdsim {

// diag(+1,..,-1 at m,..,+1).
Matrix oracle_matrix(int d, int m);

// c (2|s><s| - I) with c = e^{i pi/d} for even d (det = 1), c = 1 for odd d.
Matrix reflection_matrix(int d);

Vector equal_superposition(int d);

// Algorithm success probability sin^2[(2N+1) arcsin(1/sqrt(d))].
double asp(int d, int n_iterations);

// argmax of asp over N in a window around pi sqrt(d)/4 - 1/2; smaller N wins ties.
int optimal_iterations(int d);

// One circuit element: physical pulses (noise-capable) or an exact matrix.
// pulse_slots is the pulse-count footprint of a matrix stage; with noise, the
// stage dephases freely for pulse_slots * slot_duration before the matrix is
// applied, so analytic circuits expose the same decoherence time as compiled
// ones.
struct Stage {
    std::variant<PulseSequence, Matrix> op;
    int pulse_slots = 0;

    bool is_pulses() const { return op.index() == 0; }
    int n_pulses() const;
};

struct GroverCircuit {
    int d = 0;
    Stage prep;
    std::map<int, Stage> oracles;  // marked level -> oracle stage
    Stage reflection;
    int n_iterations = 1;

    void validate() const;

    // Exact stage matrices with nominal pulse budgets as slot counts
    // (d=5 defaults: prep 2, oracle 2, reflection 4).
    static GroverCircuit analytic(int d, int n_iterations, int prep_slots = 2,
                                  int oracle_slots = 2, int reflection_slots = 4);

    // Stages from a parsed pulse table: equal_sup, markK..., reflection.
    static GroverCircuit from_table(const PulseTable& table, int n_iterations);
};

struct NoiseContext {
    DephasingModel model;
    ToneSet tones;
    PulseTiming timing;
    double slot_duration = 0;  // ms of free dephasing per pulse slot of a matrix stage
};

struct GroverOutcome {
    int marked = 0;
    RealVector distribution;
    double asp_measured = 0;   // distribution[marked]
    double sso_vs_ideal = 0;   // squared statistical overlap vs noiseless analytic run
};

// |0> -> prep -> N x (oracle_m, reflection) -> projective readout.
GroverOutcome run(const GroverCircuit& circuit, int marked, const NoiseContext* noise = nullptr);

// One run per marked level, in order.
std::vector<GroverOutcome> mark_sweep(const GroverCircuit& circuit,
                                      const NoiseContext* noise = nullptr);

// Rows = marked level, columns = measured level.
Eigen::MatrixXd mark_matrix(const std::vector<GroverOutcome>& outcomes);
std::string mark_matrix_csv(const Eigen::MatrixXd& matrix);

struct IterationSweepResult {
    std::vector<int> n;
    std::vector<double> p_measured;
    std::vector<double> p_ideal;
    double intercept = 1;              // a in p_meas = (a + b N) p_ideal
    double slope = 0;                  // b
    double per_iteration_fidelity = 1; // 1 + b

    std::string csv() const;  // N,p_measured,p_ideal
};

// p(N) for N = 1..n_max plus the per-iteration fidelity from a least-squares
// line through the measured/ideal ratio (weighted by p_ideal so the fit stays
// finite where the ideal curve crosses zero).
IterationSweepResult iteration_sweep(const GroverCircuit& circuit, int marked, int n_max,
                                     const NoiseContext* noise = nullptr);

}  // namespace qdsim
