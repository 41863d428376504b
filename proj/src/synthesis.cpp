#include "qdsim/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "qdsim/grover.hpp"
#include "qdsim/rng.hpp"
#include "qdsim/spin.hpp"

namespace qdsim {
namespace {

constexpr double kPi = 3.14159265358979323846;

int param_count(const PulseSequence& seq) { return static_cast<int>(seq.pulses.size()) * seq.d; }

RealVector pack(const PulseSequence& seq) {
    RealVector x(param_count(seq));
    int at = 0;
    for (const auto& p : seq.pulses) {
        x[at++] = p.theta;
        for (int k = 0; k < seq.d - 1; ++k) x[at++] = p.phases[k];
    }
    return x;
}

PulseSequence unpack(int d, const RealVector& x) {
    PulseSequence seq;
    seq.d = d;
    int n = static_cast<int>(x.size()) / d;
    seq.pulses.resize(n);
    int at = 0;
    for (auto& p : seq.pulses) {
        p.theta = x[at++];
        p.phases = x.segment(at, d - 1);
        at += d - 1;
    }
    return seq;
}

struct Convention {
    const char* name;
    double scale;   // theta multiplier
    bool reversed;  // apply listed pulses in reverse order
};

constexpr Convention kConventions[] = {
    {"jx-forward", 1.0, false},
    {"jx-reversed", 1.0, true},
    {"2jx-forward", 2.0, false},
    {"2jx-reversed", 2.0, true},
};

Matrix compose_convention(const PulseSequence& seq, const Convention& conv) {
    PulseSequence s = seq;
    if (conv.reversed) std::reverse(s.pulses.begin(), s.pulses.end());
    for (auto& p : s.pulses) p.theta *= conv.scale;
    return compose(s);
}

// Target for a table row by operation name. Returns false for unknown names.
bool table_target(const std::string& op, int d, TargetSpec& out) {
    if (op == "equal_sup") {
        Vector zero = Vector::Zero(d);
        zero[0] = 1.0;
        out = TargetSpec::state_map(equal_superposition(d), zero);
        return true;
    }
    if (op == "reflection") {
        out = TargetSpec::full_unitary(reflection_matrix(d));
        return true;
    }
    if (op.rfind("mark", 0) == 0 && op.size() > 4) {
        int m = 0;
        for (size_t i = 4; i < op.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(op[i]))) return false;
            m = m * 10 + (op[i] - '0');
        }
        if (m >= d) return false;
        Vector s = equal_superposition(d);
        out = TargetSpec::state_map(oracle_matrix(d, m) * s, s);
        return true;
    }
    return false;
}

double fidelity_to(const Matrix& u, const TargetSpec& target) {
    if (target.kind == TargetKind::StateMap) {
        Complex ov = target.target_state.dot(u * target.input_state);
        return std::norm(ov);
    }
    double f = unitary_fidelity(target.target_unitary, u);
    return f * f;
}

// Optimizer-internal loss: no per-call target validation.
double loss_at(int d, const RealVector& x, const TargetSpec& target) {
    return 1.0 - fidelity_to(compose(unpack(d, x)), target);
}

}  // namespace

void TargetSpec::validate() const {
    check_dimension(d);
    if (kind == TargetKind::StateMap) {
        if (target_state.size() != d || input_state.size() != d)
            throw std::invalid_argument("state-map target/input must have length d");
        if (std::abs(target_state.norm() - 1.0) > 1e-9 || std::abs(input_state.norm() - 1.0) > 1e-9)
            throw std::invalid_argument("state-map states must be normalized");
    } else {
        if (target_unitary.rows() != d || target_unitary.cols() != d)
            throw std::invalid_argument("target unitary must be d x d");
        if (!is_unitary(target_unitary, 1e-8))
            throw std::invalid_argument("target matrix is not unitary");
    }
}

TargetSpec TargetSpec::full_unitary(const Matrix& u) {
    TargetSpec t;
    t.kind = TargetKind::FullUnitary;
    t.d = static_cast<int>(u.rows());
    t.target_unitary = u;
    t.validate();
    return t;
}

TargetSpec TargetSpec::diagonal_up_to_phase(const Matrix& u) {
    TargetSpec t = full_unitary(u);
    t.kind = TargetKind::DiagonalUpToPhase;
    return t;
}

TargetSpec TargetSpec::state_map(const Vector& target) {
    Vector zero = Vector::Zero(target.size());
    zero[0] = 1.0;
    return state_map(target, zero);
}

TargetSpec TargetSpec::state_map(const Vector& target, const Vector& input) {
    TargetSpec t;
    t.kind = TargetKind::StateMap;
    t.d = static_cast<int>(target.size());
    t.target_state = target;
    t.input_state = input;
    t.validate();
    return t;
}

void SynthesisConfig::validate() const {
    if (n_pulses <= 0 || restarts <= 0 || max_iters <= 0)
        throw std::invalid_argument("n_pulses, restarts, max_iters must be positive");
    if (step <= 0 || grad_step <= 0) throw std::invalid_argument("step sizes must be positive");
    if (tol <= 0 || tol >= 1) throw std::invalid_argument("tol must lie in (0,1)");
}

double infidelity(const PulseSequence& seq, const TargetSpec& target) {
    target.validate();
    if (seq.d != target.d) throw std::invalid_argument("sequence/target dimension mismatch");
    return 1.0 - fidelity_to(compose(seq), target);
}

RealVector gradient(const PulseSequence& seq, const TargetSpec& target, double grad_step) {
    if (grad_step <= 0) throw std::invalid_argument("grad_step must be positive");
    if (seq.d != target.d) throw std::invalid_argument("sequence/target dimension mismatch");
    RealVector x = pack(seq);
    RealVector g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        RealVector xp = x, xm = x;
        xp[i] += grad_step;
        xm[i] -= grad_step;
        g[i] = (loss_at(seq.d, xp, target) - loss_at(seq.d, xm, target)) / (2 * grad_step);
    }
    return g;
}

SynthesisResult synthesize(const TargetSpec& target, const SynthesisConfig& cfg) {
    target.validate();
    cfg.validate();
    const int d = target.d;
    const int n_params = cfg.n_pulses * d;

    SynthesisResult best;
    bool have_best = false;

    for (int r = 0; r < cfg.restarts; ++r) {
        auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(r));
        std::uniform_real_distribution<double> utheta(0.0, kPi);
        std::uniform_real_distribution<double> uphase(-kPi, kPi);

        RealVector x(n_params);
        for (int p = 0; p < cfg.n_pulses; ++p) {
            x[p * d] = utheta(rng);
            for (int k = 1; k < d; ++k) x[p * d + k] = uphase(rng);
        }

        double loss = loss_at(d, x, target);
        std::vector<double> trace{loss};
        double step = cfg.step;
        const double step_cap = 8.0 * cfg.step;

        int accepted = 0;
        for (int it = 0; it < cfg.max_iters; ++it) {
            RealVector g = gradient(unpack(d, x), target, cfg.grad_step);
            double g2 = g.squaredNorm();
            if (g2 < 1e-30) break;

            double s = step;
            bool ok = false;
            RealVector xn;
            double ln = loss;
            for (int h = 0; h < 40; ++h) {
                xn = x - s * g;
                ln = loss_at(d, xn, target);
                if (ln < loss - 1e-4 * s * g2) {
                    ok = true;
                    break;
                }
                s *= 0.5;
            }
            if (!ok) break;

            x = xn;
            loss = ln;
            step = std::min(2.0 * s, step_cap);
            trace.push_back(loss);
            ++accepted;
            if (loss <= cfg.tol) break;
            if (trace.size() > 51 && trace[trace.size() - 51] - loss < 1e-12) break;
        }

        if (!have_best || loss < best.infidelity) {
            best.sequence = unpack(d, x);
            best.infidelity = loss;
            best.iterations = accepted;
            best.converged = loss <= cfg.tol;
            best.restart_index = r;
            best.trace = std::move(trace);
            have_best = true;
        }
        if (best.converged) break;  // restarts scanned in index order: deterministic
    }
    return best;
}

const std::vector<std::string>& table_conventions() {
    static const std::vector<std::string> names = {kConventions[0].name, kConventions[1].name,
                                                   kConventions[2].name, kConventions[3].name};
    return names;
}

VerificationReport verify_pulse_table(const PulseTable& table, int d) {
    check_dimension(d);
    if (table.d != d) throw std::invalid_argument("pulse table dimension mismatch");

    VerificationReport report;
    report.d = d;

    int consensus = -1;  // convention index agreed on by recognized rows, -2 = conflict
    for (const auto& [name, seq] : table.operations) {
        VerificationEntry entry;
        entry.operation = name;
        entry.n_pulses = static_cast<int>(seq.pulses.size());

        TargetSpec target;
        if (!table_target(name, d, target)) {
            entry.flagged = true;
            report.entries.push_back(std::move(entry));
            continue;
        }

        int best_conv = 0;
        double best_fid = -1;
        for (int c = 0; c < 4; ++c) {
            double f = fidelity_to(compose_convention(seq, kConventions[c]), target);
            if (f > best_fid) {
                best_fid = f;
                best_conv = c;
            }
        }
        entry.fidelity = best_fid;
        entry.convention = kConventions[best_conv].name;
        report.entries.push_back(std::move(entry));

        if (consensus == -1)
            consensus = best_conv;
        else if (consensus >= 0 && consensus != best_conv)
            consensus = -2;
    }

    report.single_convention = consensus != -2;  // vacuously true when no recognized rows
    if (consensus >= 0) report.winning_convention = kConventions[consensus].name;
    return report;
}

std::string VerificationReport::to_json() const {
    nlohmann::ordered_json j;
    j["d"] = d;
    j["single_convention"] = single_convention;
    j["winning_convention"] = winning_convention;
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : entries) {
        nlohmann::ordered_json je;
        je["operation"] = e.operation;
        je["fidelity"] = e.fidelity;
        je["convention"] = e.convention;
        je["n_pulses"] = e.n_pulses;
        if (e.flagged) je["flagged"] = true;
        j["entries"].push_back(std::move(je));
    }
    return j.dump(2) + "\n";
}

}  // namespace qdsim
