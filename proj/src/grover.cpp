#include "qdsim/grover.hpp"

#include <cmath>
#include <sstream>

#include "qdsim/io.hpp"
#include "qdsim/spin.hpp"

namespace qdsim {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Unitary completion of the equal superposition as first column (Gram-Schmidt
// over identity columns): an exact analytic preparation stage.
Matrix prep_unitary(int d) {
    Matrix u = Matrix::Zero(d, d);
    u.col(0) = equal_superposition(d);
    int filled = 1;
    for (int k = 0; k < d && filled < d; ++k) {
        Vector v = Vector::Zero(d);
        v[k] = 1.0;
        for (int j = 0; j < filled; ++j) v -= u.col(j).dot(v) * u.col(j);
        double n = v.norm();
        if (n > 1e-8) u.col(filled++) = v / n;
    }
    return u;
}

void check_stage(const Stage& st, int d, const char* what) {
    if (st.is_pulses()) {
        const auto& seq = std::get<PulseSequence>(st.op);
        if (seq.d != d) throw std::invalid_argument(std::string(what) + " stage dimension mismatch");
    } else {
        const auto& m = std::get<Matrix>(st.op);
        if (m.rows() != d || m.cols() != d)
            throw std::invalid_argument(std::string(what) + " stage dimension mismatch");
    }
}

void apply_stage(Vector& psi, const Stage& st) {
    if (st.is_pulses())
        psi = compose(std::get<PulseSequence>(st.op)) * psi;
    else
        psi = std::get<Matrix>(st.op) * psi;
}

void apply_stage(Matrix& rho, const Stage& st, const NoiseContext& nc, int d) {
    if (st.is_pulses()) {
        rho = noisy_sequence(rho, std::get<PulseSequence>(st.op), nc.tones, nc.model, nc.timing);
        return;
    }
    double window = st.pulse_slots * nc.slot_duration;
    if (window > 0 && !nc.model.is_trivial()) {
        Matrix h = Matrix::Zero(d, d);
        Matrix l = nc.model.sensitivities.cast<Complex>().asDiagonal();
        rho = lindblad_evolve(rho, h, l, nc.model.resolved_gamma(), window,
                              nc.timing.step_for(window));
    }
    const Matrix& m = std::get<Matrix>(st.op);
    rho = m * rho * m.adjoint();
}

RealVector ideal_distribution(int d, int marked, int n_iterations) {
    Vector psi = equal_superposition(d);
    Matrix o = oracle_matrix(d, marked);
    Matrix r = reflection_matrix(d);
    for (int i = 0; i < n_iterations; ++i) psi = r * (o * psi);
    return psi.cwiseAbs2();
}

}  // namespace

Matrix oracle_matrix(int d, int m) {
    check_dimension(d);
    if (m < 0 || m >= d) throw std::invalid_argument("marked level out of range");
    Matrix o = Matrix::Identity(d, d);
    o(m, m) = -1.0;
    return o;
}

Matrix reflection_matrix(int d) {
    check_dimension(d);
    Vector s = equal_superposition(d);
    Matrix r = 2.0 * (s * s.adjoint()) - Matrix::Identity(d, d);
    if (d % 2 == 0) r *= std::exp(Complex(0, kPi / d));
    return r;
}

Vector equal_superposition(int d) {
    check_dimension(d);
    return Vector::Constant(d, Complex(1.0 / std::sqrt(double(d)), 0));
}

double asp(int d, int n_iterations) {
    check_dimension(d);
    if (n_iterations < 0) throw std::invalid_argument("iteration count must be >= 0");
    double t = (2.0 * n_iterations + 1.0) * std::asin(1.0 / std::sqrt(double(d)));
    double s = std::sin(t);
    return s * s;
}

int optimal_iterations(int d) {
    check_dimension(d);
    double center = kPi * std::sqrt(double(d)) / 4.0 - 0.5;
    int lo = std::max(0, static_cast<int>(std::floor(center)) - 1);
    int hi = static_cast<int>(std::ceil(center)) + 1;
    int best = lo;
    double best_p = asp(d, lo);
    for (int n = lo + 1; n <= hi; ++n) {
        double p = asp(d, n);
        if (p > best_p + 1e-15) {
            best_p = p;
            best = n;
        }
    }
    return best;
}

int Stage::n_pulses() const {
    return is_pulses() ? static_cast<int>(std::get<PulseSequence>(op).pulses.size()) : pulse_slots;
}

void GroverCircuit::validate() const {
    check_dimension(d);
    if (n_iterations < 0) throw std::invalid_argument("iteration count must be >= 0");
    check_stage(prep, d, "prep");
    check_stage(reflection, d, "reflection");
    for (const auto& [m, st] : oracles) {
        if (m < 0 || m >= d) throw std::invalid_argument("oracle marked level out of range");
        check_stage(st, d, "oracle");
    }
}

GroverCircuit GroverCircuit::analytic(int d, int n_iterations, int prep_slots, int oracle_slots,
                                      int reflection_slots) {
    check_dimension(d);
    GroverCircuit c;
    c.d = d;
    c.n_iterations = n_iterations;
    c.prep = Stage{prep_unitary(d), prep_slots};
    for (int m = 0; m < d; ++m) c.oracles[m] = Stage{oracle_matrix(d, m), oracle_slots};
    c.reflection = Stage{reflection_matrix(d), reflection_slots};
    c.validate();
    return c;
}

GroverCircuit GroverCircuit::from_table(const PulseTable& table, int n_iterations) {
    GroverCircuit c;
    c.d = table.d;
    c.n_iterations = n_iterations;

    const PulseSequence* prep = table.find("equal_sup");
    if (!prep) throw std::invalid_argument("pulse table has no equal_sup operation");
    c.prep = Stage{*prep, static_cast<int>(prep->pulses.size())};

    const PulseSequence* refl = table.find("reflection");
    if (!refl) throw std::invalid_argument("pulse table has no reflection operation");
    c.reflection = Stage{*refl, static_cast<int>(refl->pulses.size())};

    for (const auto& [name, seq] : table.operations) {
        if (name.rfind("mark", 0) != 0) continue;
        int m = std::stoi(name.substr(4));
        c.oracles[m] = Stage{seq, static_cast<int>(seq.pulses.size())};
    }
    if (c.oracles.empty()) throw std::invalid_argument("pulse table has no mark operations");
    c.validate();
    return c;
}

GroverOutcome run(const GroverCircuit& circuit, int marked, const NoiseContext* noise) {
    circuit.validate();
    auto it = circuit.oracles.find(marked);
    if (it == circuit.oracles.end())
        throw std::invalid_argument("no oracle for marked level " + std::to_string(marked));
    const Stage& oracle = it->second;

    const int d = circuit.d;
    RealVector dist(d);
    if (noise == nullptr) {
        Vector psi = Vector::Zero(d);
        psi[0] = 1.0;
        apply_stage(psi, circuit.prep);
        for (int i = 0; i < circuit.n_iterations; ++i) {
            apply_stage(psi, oracle);
            apply_stage(psi, circuit.reflection);
        }
        dist = psi.cwiseAbs2();
    } else {
        Matrix rho = Matrix::Zero(d, d);
        rho(0, 0) = 1.0;
        apply_stage(rho, circuit.prep, *noise, d);
        for (int i = 0; i < circuit.n_iterations; ++i) {
            apply_stage(rho, oracle, *noise, d);
            apply_stage(rho, circuit.reflection, *noise, d);
        }
        dist = rho.diagonal().real();
    }

    GroverOutcome out;
    out.marked = marked;
    out.distribution = dist;
    out.asp_measured = dist[marked];
    out.sso_vs_ideal = sso(ideal_distribution(d, marked, circuit.n_iterations), dist);
    return out;
}

std::vector<GroverOutcome> mark_sweep(const GroverCircuit& circuit, const NoiseContext* noise) {
    std::vector<GroverOutcome> out;
    out.reserve(circuit.oracles.size());
    for (const auto& [m, st] : circuit.oracles) out.push_back(run(circuit, m, noise));
    return out;
}

Eigen::MatrixXd mark_matrix(const std::vector<GroverOutcome>& outcomes) {
    if (outcomes.empty()) return {};
    Eigen::MatrixXd m(outcomes.size(), outcomes.front().distribution.size());
    for (size_t i = 0; i < outcomes.size(); ++i) m.row(i) = outcomes[i].distribution.transpose();
    return m;
}

std::string mark_matrix_csv(const Eigen::MatrixXd& matrix) {
    std::ostringstream os;
    os << "marked";
    for (int j = 0; j < matrix.cols(); ++j) os << ",p_" << j;
    os << "\n";
    for (int i = 0; i < matrix.rows(); ++i) {
        os << i;
        for (int j = 0; j < matrix.cols(); ++j) os << "," << format_sig9(matrix(i, j));
        os << "\n";
    }
    return os.str();
}

std::string IterationSweepResult::csv() const {
    std::ostringstream os;
    os << "N,p_measured,p_ideal\n";
    for (size_t i = 0; i < n.size(); ++i)
        os << n[i] << "," << format_sig9(p_measured[i]) << "," << format_sig9(p_ideal[i]) << "\n";
    return os.str();
}

IterationSweepResult iteration_sweep(const GroverCircuit& circuit, int marked, int n_max,
                                     const NoiseContext* noise) {
    if (n_max < 2) throw std::invalid_argument("iteration sweep needs n_max >= 2");
    IterationSweepResult res;
    GroverCircuit c = circuit;
    for (int n = 1; n <= n_max; ++n) {
        c.n_iterations = n;
        res.n.push_back(n);
        res.p_measured.push_back(run(c, marked, noise).asp_measured);
        res.p_ideal.push_back(asp(circuit.d, n));
    }

    // Least squares for p_meas = (a + b N) p_ideal: equivalent to fitting the
    // measured/ideal ratio with weights p_ideal^2, which keeps the fit finite
    // near zeros of the ideal curve.
    Eigen::MatrixXd design(n_max, 2);
    Eigen::VectorXd rhs(n_max);
    for (int i = 0; i < n_max; ++i) {
        design(i, 0) = res.p_ideal[i];
        design(i, 1) = res.n[i] * res.p_ideal[i];
        rhs(i) = res.p_measured[i];
    }
    Eigen::Vector2d ab = design.colPivHouseholderQr().solve(rhs);
    res.intercept = ab[0];
    res.slope = ab[1];
    res.per_iteration_fidelity = 1.0 + ab[1];
    return res;
}

}  // namespace qdsim
