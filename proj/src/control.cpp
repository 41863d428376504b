#include "qdsim/control.hpp"

#include <cmath>
#include <sstream>

#include "qdsim/io.hpp"
#include "qdsim/spin.hpp"

namespace qdsim {

void ToneSet::validate() const {
    check_dimension(d);
    if (amplitudes.size() != d - 1 || detunings.size() != d - 1)
        throw std::invalid_argument("tone set: amplitudes/detunings must have length d-1");
    if (amplitudes.minCoeff() < 0) throw std::invalid_argument("tone set: negative amplitude");
}

ToneSet ToneSet::ideal(int d, double omega) {
    ToneSet t;
    t.d = d;
    t.amplitudes = ideal_amplitudes(d, omega);
    t.detunings = RealVector::Zero(d - 1);
    return t;
}

PulseParams PulseParams::common(int d, double theta, double phi) {
    check_dimension(d);
    PulseParams p;
    p.theta = theta;
    p.phases = RealVector::Constant(d - 1, phi);
    return p;
}

RealVector ideal_amplitudes(int d, double omega) {
    check_dimension(d);
    RealVector a(d - 1);
    for (int k = 1; k < d; ++k) a[k - 1] = omega * std::sqrt(double(k) * double(d - k));
    return a;
}

Matrix rotating_hamiltonian(const ToneSet& tones, const RealVector& phases) {
    tones.validate();
    if (phases.size() != tones.d - 1)
        throw std::invalid_argument("rotating_hamiltonian: phase vector must have length d-1");
    const int d = tones.d;
    Matrix H = Matrix::Zero(d, d);
    double cum = 0;
    for (int k = 0; k + 1 < d; ++k) {
        H(k, k + 1) = tones.amplitudes[k] * std::exp(Complex(0, phases[k]));
        H(k + 1, k) = std::conj(H(k, k + 1));
        cum += tones.detunings[k];
        H(k + 1, k + 1) = cum;
    }
    return H;
}

Matrix displacement(int d, const PulseParams& p) {
    check_dimension(d);
    if (p.phases.size() != d - 1)
        throw std::invalid_argument("displacement: phase vector must have length d-1");
    Matrix G = Matrix::Zero(d, d);
    for (int k = 0; k + 1 < d; ++k) {
        const double g = 0.5 * std::sqrt(double(k + 1) * double(d - 1 - k));  // Jx ladder
        G(k, k + 1) = g * std::exp(Complex(0, p.phases[k]));
        G(k + 1, k) = std::conj(G(k, k + 1));
    }
    return propagate(G, p.theta);
}

Matrix snap(int d, const RealVector& phases) {
    check_dimension(d);
    if (phases.size() != d - 1)
        throw std::invalid_argument("snap: phase vector must have length d-1");
    Matrix S = Matrix::Zero(d, d);
    double cum = 0;
    S(0, 0) = 1;
    for (int k = 0; k + 1 < d; ++k) {
        cum += phases[k];
        S(k + 1, k + 1) = std::exp(Complex(0, cum));
    }
    return S;
}

Matrix compose(const PulseSequence& seq) {
    check_dimension(seq.d);
    Matrix U = Matrix::Identity(seq.d, seq.d);
    for (const auto& p : seq.pulses) U = displacement(seq.d, p) * U;
    return U;
}

Matrix evolve_nonideal(const PulseSequence& seq, const ToneSet& tones, double nominal_omega) {
    check_dimension(seq.d);
    tones.validate();
    if (tones.d != seq.d) throw std::invalid_argument("evolve_nonideal: dimension mismatch");
    if (nominal_omega <= 0) throw std::invalid_argument("evolve_nonideal: nominal omega must be > 0");
    Matrix U = Matrix::Identity(seq.d, seq.d);
    for (const auto& p : seq.pulses) {
        const double t = p.theta / (2.0 * nominal_omega);
        U = propagate(rotating_hamiltonian(tones, p.phases), t) * U;
    }
    return U;
}

const PulseSequence* PulseTable::find(const std::string& op) const {
    for (const auto& [name, seq] : operations)
        if (name == op) return &seq;
    return nullptr;
}

PulseTable parse_pulse_table(const std::string& csv_text) {
    std::istringstream is(csv_text);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("pulse table: empty file");

    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (c == ',') {
                out.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur += c;
            }
        }
        out.push_back(cur);
        return out;
    };

    const auto header = split(line);
    if (header.size() < 4 || header[0] != "operation" || header[1] != "pulse" ||
        header[2] != "theta")
        throw std::runtime_error("pulse table: bad header, expected operation,pulse,theta,phi_1,..");
    const int d = int(header.size()) - 2;  // theta column + d-1 phase columns
    for (int k = 1; k < d; ++k)
        if (header[2 + k] != "phi_" + std::to_string(k))
            throw std::runtime_error("pulse table: bad phase column header at position " +
                                     std::to_string(2 + k));

    PulseTable table;
    table.d = d;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (int(cells.size()) != d + 2)
            throw std::runtime_error("pulse table: line " + std::to_string(lineno) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(d + 2));
        PulseParams p;
        p.phases = RealVector::Zero(d - 1);
        try {
            size_t pos = 0;
            p.theta = std::stod(cells[2], &pos);
            for (int k = 0; k + 1 < d; ++k) p.phases[k] = std::stod(cells[3 + k]);
        } catch (const std::exception&) {
            throw std::runtime_error("pulse table: line " + std::to_string(lineno) +
                                     ": cannot parse numeric cell");
        }
        auto& ops = table.operations;
        if (ops.empty() || ops.back().first != cells[0]) {
            if (table.find(cells[0]) != nullptr)
                throw std::runtime_error("pulse table: line " + std::to_string(lineno) +
                                         ": operation '" + cells[0] + "' rows are not contiguous");
            ops.push_back({cells[0], PulseSequence{d, {}}});
        }
        ops.back().second.pulses.push_back(std::move(p));
    }
    return table;
}

std::string pulse_table_csv(const PulseTable& table) {
    std::ostringstream os;
    os << "operation,pulse,theta";
    for (int k = 1; k < table.d; ++k) os << ",phi_" << k;
    os << '\n';
    for (const auto& [name, seq] : table.operations) {
        int i = 1;
        for (const auto& p : seq.pulses) {
            os << name << ',' << i++ << ',' << format_sig9(p.theta);
            for (int k = 0; k + 1 < table.d; ++k) os << ',' << format_sig9(p.phases[k]);
            os << '\n';
        }
    }
    return os.str();
}

}  // namespace qdsim
