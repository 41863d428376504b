#include "qdsim/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"
#include "qdsim/io.hpp"
#include "qdsim/rng.hpp"
#include "qdsim/spin.hpp"

namespace qdsim {
namespace {

constexpr double kPi = 3.14159265358979323846;

Matrix projector0(int d) {
    Matrix rho = Matrix::Zero(d, d);
    rho(0, 0) = 1.0;
    return rho;
}

// Diagonal free-evolution Hamiltonian: cumulative detuning sums (level 0 at 0).
Matrix detuning_hamiltonian(const ToneSet& tones) {
    Matrix h = Matrix::Zero(tones.d, tones.d);
    double acc = 0;
    for (int k = 1; k < tones.d; ++k) {
        acc += tones.detunings[k - 1];
        h(k, k) = acc;
    }
    return h;
}

}  // namespace

void DephasingModel::validate(int d) const {
    check_dimension(d);
    if (sensitivities.size() != d)
        throw std::invalid_argument("sensitivities must have one entry per level");
    if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
    if (t2_reference && *t2_reference <= 0)
        throw std::invalid_argument("t2_reference must be positive");
}

double DephasingModel::resolved_gamma() const {
    if (!t2_reference) return gamma;
    double min_sq = std::numeric_limits<double>::infinity();
    for (int j = 0; j < sensitivities.size(); ++j)
        for (int k = j + 1; k < sensitivities.size(); ++k) {
            double diff = sensitivities[j] - sensitivities[k];
            if (diff * diff > 1e-24) min_sq = std::min(min_sq, diff * diff);
        }
    if (!std::isfinite(min_sq))
        throw std::invalid_argument("t2 normalization needs two distinct sensitivities");
    // Coherence (j,k) decays as exp(-gamma (s_j-s_k)^2 t / 2); pin the slowest to T2.
    return 2.0 / (*t2_reference * min_sq);
}

bool DephasingModel::is_trivial() const {
    if (sensitivities.size() == 0) return true;
    double spread = sensitivities.maxCoeff() - sensitivities.minCoeff();
    if (spread == 0) return true;  // L proportional to identity: dissipator vanishes
    if (t2_reference) return false;
    return gamma == 0;
}

DephasingModel DephasingModel::none(int d) {
    check_dimension(d);
    DephasingModel m;
    m.sensitivities = RealVector::Zero(d);
    m.gamma = 0;
    return m;
}

Matrix lindblad_evolve(const Matrix& rho, const Matrix& H, const Matrix& L, double gamma,
                       double T, double dt) {
    const int d = static_cast<int>(rho.rows());
    if (rho.cols() != d || H.rows() != d || H.cols() != d || L.rows() != d || L.cols() != d)
        throw std::invalid_argument("lindblad_evolve: dimension mismatch");
    if (!is_hermitian(rho, 1e-8)) throw std::invalid_argument("rho must be Hermitian");
    if (!is_hermitian(H, 1e-8)) throw std::invalid_argument("H must be Hermitian");
    if (!is_diagonal(L, 1e-12)) throw std::invalid_argument("L must be diagonal");
    if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
    if (std::abs(rho.trace().real() - 1.0) > 1e-6 || std::abs(rho.trace().imag()) > 1e-9)
        throw std::invalid_argument("rho must have unit trace");
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()),
                                                 Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-7)
            throw std::invalid_argument("rho must be positive semidefinite");
    }
    if (T < 0) throw std::invalid_argument("duration must be >= 0");
    if (T == 0) return rho;
    if (dt <= 0) throw std::invalid_argument("dt must be positive");

    // Entrywise dissipator for diagonal L: gamma * c_jk * rho_jk with
    // c_jk = l_j conj(l_k) - (|l_j|^2 + |l_k|^2)/2. The diagonal coefficient
    // c_jj is exactly zero in floating point, so pure dephasing (H = 0) leaves
    // populations bit-identical.
    Matrix C = Matrix::Zero(d, d);
    if (gamma > 0) {
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                C(j, k) = L(j, j) * std::conj(L(k, k)) -
                          0.5 * (std::norm(L(j, j)) + std::norm(L(k, k)));
    }
    const bool unitary_only = gamma == 0;
    auto deriv = [&](const Matrix& r) -> Matrix {
        Matrix out = Complex(0, -1) * (H * r - r * H);
        if (!unitary_only) out += gamma * C.cwiseProduct(r);
        return out;
    };

    const int steps = std::max(1, static_cast<int>(std::ceil(T / dt)));
    const double h = T / steps;
    const double tr0 = rho.trace().real();

    Matrix r = rho;
    for (int i = 0; i < steps; ++i) {
        Matrix k1 = deriv(r);
        Matrix k2 = deriv(r + (h / 2) * k1);
        Matrix k3 = deriv(r + (h / 2) * k2);
        Matrix k4 = deriv(r + h * k3);
        r += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
        r = 0.5 * (r + r.adjoint()).eval();
    }
    if (std::abs(r.trace().real() - tr0) > 1e-6)
        throw std::runtime_error("lindblad_evolve: trace drift exceeded 1e-6");
    return r;
}

double PulseTiming::duration(double theta) const {
    if (theta < 0) throw std::invalid_argument("pulse angle must be >= 0 for timed execution");
    if (mode == Mode::FromTheta) {
        if (nominal_omega <= 0) throw std::invalid_argument("nominal omega must be positive");
        return theta / (2.0 * nominal_omega);
    }
    return fixed_duration;
}

double PulseTiming::step_for(double dur) const {
    if (dt > 0) return dt;
    return dur / 200.0;
}

PulseTiming PulseTiming::from_theta(double omega, double dt) {
    if (omega <= 0) throw std::invalid_argument("nominal omega must be positive");
    PulseTiming t;
    t.mode = Mode::FromTheta;
    t.nominal_omega = omega;
    t.dt = dt;
    return t;
}

PulseTiming PulseTiming::fixed(double duration_ms, double dt) {
    if (duration_ms < 0) throw std::invalid_argument("pulse duration must be >= 0");
    PulseTiming t;
    t.mode = Mode::Fixed;
    t.fixed_duration = duration_ms;
    t.dt = dt;
    return t;
}

Matrix noisy_sequence(const Matrix& rho0, const PulseSequence& seq, const ToneSet& tones,
                      const DephasingModel& model, const PulseTiming& timing) {
    if (seq.d != tones.d || rho0.rows() != seq.d || rho0.cols() != seq.d)
        throw std::invalid_argument("noisy_sequence: dimension mismatch");
    tones.validate();
    model.validate(seq.d);

    const bool trivial = model.is_trivial();
    const double gamma = trivial ? 0.0 : model.resolved_gamma();
    Matrix L;
    if (!trivial) L = model.sensitivities.cast<Complex>().asDiagonal();

    Matrix rho = rho0;
    for (const auto& p : seq.pulses) {
        double dur = timing.duration(p.theta);
        if (dur == 0) continue;
        Matrix h = rotating_hamiltonian(tones, p.phases);
        if (trivial) {
            Matrix u = propagate(h, dur);
            rho = u * rho * u.adjoint();
        } else {
            rho = lindblad_evolve(rho, h, L, gamma, dur, timing.step_for(dur));
        }
    }
    return rho;
}

// --- Ramsey --------------------------------------------------------------

std::string RamseyResult::csv() const {
    std::ostringstream os;
    os << "delay_ms,jz\n";
    for (size_t i = 0; i < delays.size(); ++i)
        os << format_sig9(delays[i]) << "," << format_sig9(jz[i]) << "\n";
    return os.str();
}

RamseyResult ramsey(int d, const ToneSet& tones, const DephasingModel& model,
                    const std::vector<double>& delays) {
    check_dimension(d);
    if (tones.d != d) throw std::invalid_argument("tone set dimension mismatch");
    tones.validate();
    model.validate(d);
    if (delays.empty()) throw std::invalid_argument("need at least one delay");
    for (size_t i = 0; i < delays.size(); ++i) {
        if (delays[i] < 0) throw std::invalid_argument("delays must be >= 0");
        if (i > 0 && delays[i] <= delays[i - 1])
            throw std::invalid_argument("delays must be strictly increasing");
    }

    const Matrix u_half = displacement(d, PulseParams::common(d, kPi / 2, 0.0));
    const Matrix h_free = detuning_hamiltonian(tones);
    const SpinOps ops = spin_operators(d);
    const bool trivial = model.is_trivial();
    const double gamma = trivial ? 0.0 : model.resolved_gamma();
    Matrix L;
    if (!trivial) L = model.sensitivities.cast<Complex>().asDiagonal();

    RamseyResult res;
    res.delays = delays;
    for (double t : delays) {
        Matrix rho = u_half * projector0(d) * u_half.adjoint();
        if (t > 0) {
            if (trivial) {
                Matrix u = propagate(h_free, t);
                rho = u * rho * u.adjoint();
            } else {
                rho = lindblad_evolve(rho, h_free, L, gamma, t, t / 200.0);
            }
        }
        rho = u_half * rho * u_half.adjoint();
        res.jz.push_back((rho * ops.Jz).trace().real());
    }

    // Decaying-cosine fit A e^{-t/T2} cos(w t + phi) + C via Nelder-Mead from a
    // few frequency starts.
    double vmax = *std::max_element(res.jz.begin(), res.jz.end());
    double vmin = *std::min_element(res.jz.begin(), res.jz.end());
    double wmax = 0;
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
            wmax = std::max(wmax, std::abs(h_free(j, j).real() - h_free(k, k).real()));

    auto sse = [&](const RealVector& x) {
        double s = 0;
        for (size_t i = 0; i < delays.size(); ++i) {
            double f = x[0] * std::exp(-delays[i] / x[1]) * std::cos(x[2] * delays[i] + x[3]) + x[4];
            double e = f - res.jz[i];
            s += e * e;
        }
        return s;
    };

    double span = d - 1.0;
    RealVector lower(5), upper(5);
    lower << -2 * span, 1e-6, 0.0, -2 * kPi, -2 * span;
    upper << 2 * span, 1e9, std::max(10 * wmax, 1.0), 2 * kPi, 2 * span;

    double t2_init = trivial ? (delays.back() - delays.front() + 1.0)
                             : 2.0 / (gamma * std::max(1e-12, [&] {
                                   double mn = std::numeric_limits<double>::infinity();
                                   for (int j = 0; j < d; ++j)
                                       for (int k = j + 1; k < d; ++k) {
                                           double diff = model.sensitivities[j] -
                                                         model.sensitivities[k];
                                           if (diff * diff > 1e-24)
                                               mn = std::min(mn, diff * diff);
                                       }
                                   return std::isfinite(mn) ? mn : 1.0;
                               }()));

    std::vector<double> w_starts;
    if (wmax > 1e-9)
        w_starts = {wmax, 0.5 * wmax, 2 * wmax};
    else
        w_starts = {0.0};

    NelderMeadOptions opts;
    opts.max_iters = 4000;
    NelderMeadResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (double w0 : w_starts) {
        RealVector x0(5);
        x0 << (vmax - vmin) / 2.0, t2_init, w0, 0.0, (vmax + vmin) / 2.0;
        NelderMeadResult r = nelder_mead(sse, x0, lower, upper, opts);
        if (r.value < best.value) best = r;
    }

    res.amplitude_fit = best.x[0];
    res.t2_fit = best.x[1];
    res.frequency_fit = best.x[2];
    double scale = std::max({std::abs(vmax), std::abs(vmin), 1e-9});
    res.fit_ok = best.converged && std::abs(best.x[0]) > 1e-6 &&
                 best.value < 0.01 * delays.size() * scale * scale;
    return res;
}

// --- Cliffords ------------------------------------------------------------

namespace {

Eigen::Matrix2cd canonical2(Eigen::Matrix2cd u) {
    for (int i = 0; i < 4; ++i) {
        Complex v = u(i / 2, i % 2);
        if (std::abs(v) > 1e-8) {
            u *= std::conj(v) / std::abs(v);
            break;
        }
    }
    return u;
}

std::string key2(const Eigen::Matrix2cd& u) {
    std::ostringstream os;
    for (int i = 0; i < 4; ++i) {
        Complex v = u(i / 2, i % 2);
        os << std::llround(v.real() * 1e6) << "," << std::llround(v.imag() * 1e6) << ";";
    }
    return os.str();
}

std::vector<CliffordElement> build_clifford_table() {
    using M2 = Eigen::Matrix2cd;
    const Complex i1(0, 1);
    std::vector<M2> gens;
    M2 m;
    m << 1, 0, 0, 1;
    gens.push_back(m);  // I
    m << 0, 1, 1, 0;
    gens.push_back(m);  // X
    m << 0, -i1, i1, 0;
    gens.push_back(m);  // Y
    m << 1, 0, 0, -1;
    gens.push_back(m);  // Z
    m << 1, 1, 1, -1;
    gens.push_back(m / std::sqrt(2.0));  // H
    m << 1, 0, 0, i1;
    gens.push_back(m);  // S

    std::vector<M2> elements;
    std::map<std::string, int> seen;
    auto add = [&](const M2& u) {
        M2 c = canonical2(u);
        std::string k = key2(c);
        if (seen.count(k)) return;
        seen[k] = static_cast<int>(elements.size());
        elements.push_back(c);
    };
    for (const auto& g : gens) add(g);
    for (size_t at = 0; at < elements.size(); ++at) {
        for (const auto& g : gens) {
            add(g * elements[at]);
            add(elements[at] * g);
        }
    }
    if (elements.size() != 24) throw std::logic_error("Clifford closure did not yield 24 elements");

    std::vector<CliffordElement> table;
    for (const auto& u : elements) {
        // SU(2)-ize, then read Euler angles in the lift convention
        //   rz(a) exp(-i b Jy) rz(c),  rz(x) = exp(-i x Jz),  Jz = diag(-1/2, 1/2),
        // whose 2x2 product is [[cB e^{i(a+c)/2}, sB e^{i(a-c)/2}],
        //                       [-sB e^{-i(a-c)/2}, cB e^{-i(a+c)/2}]].
        M2 s = u / std::sqrt(u.determinant());
        double b = 2.0 * std::atan2(std::abs(s(1, 0)), std::abs(s(0, 0)));
        double a, c;
        if (std::abs(s(1, 0)) < 1e-9) {
            a = 2.0 * std::arg(s(0, 0));
            c = 0.0;
        } else if (std::abs(s(0, 0)) < 1e-9) {
            a = 2.0 * std::arg(s(0, 1));
            c = 0.0;
        } else {
            a = std::arg(s(0, 0)) + std::arg(s(0, 1));
            c = std::arg(s(0, 0)) - std::arg(s(0, 1));
        }
        table.push_back(CliffordElement{Matrix(u), a, b, c});
    }
    return table;
}

}  // namespace

const std::vector<CliffordElement>& clifford_table() {
    static const std::vector<CliffordElement> table = build_clifford_table();
    return table;
}

Matrix rz_rotation(int d, double chi) {
    check_dimension(d);
    Matrix u = Matrix::Zero(d, d);
    double j = (d - 1) / 2.0;
    for (int k = 0; k < d; ++k) u(k, k) = std::exp(Complex(0, -chi * (-j + k)));
    return u;
}

std::vector<Matrix> clifford_su2_embedded(int d) {
    check_dimension(d);
    const SpinOps ops = spin_operators(d);
    std::vector<Matrix> out;
    out.reserve(24);
    for (const auto& e : clifford_table())
        out.push_back(rz_rotation(d, e.alpha) * propagate(ops.Jy, e.beta) *
                      rz_rotation(d, e.gamma));
    return out;
}

CliffordDecomposition decompose_clifford(int index, int d) {
    check_dimension(d);
    if (index < 0 || index >= 24) throw std::invalid_argument("Clifford index out of range");
    const CliffordElement& e = clifford_table()[index];
    CliffordDecomposition dec;
    dec.z_pre = e.gamma;
    dec.z_post = e.alpha;
    dec.pulses.d = d;
    if (e.beta > 1e-12)
        dec.pulses.pulses.push_back(PulseParams::common(d, e.beta, kPi / 2));
    return dec;
}

Matrix recompose(const CliffordDecomposition& dec, int d) {
    return rz_rotation(d, dec.z_post) * compose(dec.pulses) * rz_rotation(d, dec.z_pre);
}

CompiledSequence compile_clifford_sequence(const std::vector<int>& indices, int d) {
    check_dimension(d);
    CompiledSequence out;
    out.pulses.d = d;
    double frame = 0;
    for (int idx : indices) {
        if (idx < 0 || idx >= 24) throw std::invalid_argument("Clifford index out of range");
        const CliffordElement& e = clifford_table()[idx];
        if (e.beta > 1e-12)
            out.pulses.pulses.push_back(
                PulseParams::common(d, e.beta, kPi / 2 - e.gamma - frame));
        frame += e.alpha + e.gamma;
    }
    out.final_frame = frame;
    return out;
}

double mean_pulses_per_clifford() {
    int n = 0;
    for (const auto& e : clifford_table())
        if (e.beta > 1e-12) ++n;
    return static_cast<double>(n) / 24.0;
}

// --- Randomized benchmarking ----------------------------------------------

void RBConfig::validate() const {
    if (lengths.empty()) throw std::invalid_argument("lengths must be non-empty");
    for (size_t i = 0; i < lengths.size(); ++i) {
        if (lengths[i] <= 0) throw std::invalid_argument("lengths must be positive");
        if (i > 0 && lengths[i] <= lengths[i - 1])
            throw std::invalid_argument("lengths must be increasing");
    }
    if (n_sequences < 1) throw std::invalid_argument("n_sequences must be >= 1");
}

std::string RBResult::csv() const {
    std::ostringstream os;
    os << "m,mean_survival,stderr\n";
    for (const auto& p : points)
        os << p.m << "," << format_sig9(p.mean_survival) << ","
           << format_sig9(p.stderr_survival) << "\n";
    return os.str();
}

namespace {

// Linear least squares for (A, B) in A p^m + B at fixed p; returns SSE.
double fit_ab(const std::vector<int>& ms, const std::vector<double>& ys, double p, double& A,
              double& B) {
    const int n = static_cast<int>(ms.size());
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
        design(i, 0) = std::pow(p, ms[i]);
        design(i, 1) = 1.0;
        rhs(i) = ys[i];
    }
    Eigen::Vector2d ab = design.colPivHouseholderQr().solve(rhs);
    A = ab[0];
    B = ab[1];
    return (design * ab - rhs).squaredNorm();
}

}  // namespace

RBResult rb_run(const RBConfig& cfg, int d, const ToneSet& tones, const DephasingModel& model,
                const PulseTiming& timing) {
    cfg.validate();
    check_dimension(d);
    if (cfg.lengths.size() < 3)
        throw std::invalid_argument("rb fit needs at least 3 sequence lengths");

    const std::vector<Matrix> lifted = clifford_su2_embedded(d);
    std::uniform_int_distribution<int> pick(0, 23);

    RBResult res;
    std::vector<int> ms;
    std::vector<double> ys;
    for (size_t li = 0; li < cfg.lengths.size(); ++li) {
        const int m = cfg.lengths[li];
        std::vector<double> survivals;
        for (int si = 0; si < cfg.n_sequences; ++si) {
            auto rng = make_stream(cfg.seed,
                                   static_cast<std::uint64_t>(li) * cfg.n_sequences + si);
            std::vector<int> word(m);
            for (int& w : word) w = pick(rng);
            if (cfg.include_inverse) {
                Matrix net = Matrix::Identity(d, d);
                for (int w : word) net = lifted[w] * net;
                Matrix inv = net.adjoint();
                int best = 0;
                double best_f = -1;
                for (int j = 0; j < 24; ++j) {
                    double f = unitary_fidelity(lifted[j], inv);
                    if (f > best_f) {
                        best_f = f;
                        best = j;
                    }
                }
                word.push_back(best);
            }
            CompiledSequence comp = compile_clifford_sequence(word, d);
            Matrix rho = noisy_sequence(projector0(d), comp.pulses, tones, model, timing);
            survivals.push_back(rho(0, 0).real());
        }
        double mean = 0;
        for (double s : survivals) mean += s;
        mean /= survivals.size();
        double var = 0;
        for (double s : survivals) var += (s - mean) * (s - mean);
        double se = survivals.size() > 1
                        ? std::sqrt(var / (survivals.size() - 1.0) / survivals.size())
                        : 0.0;
        res.points.push_back(RBPoint{m, mean, se});
        ms.push_back(m);
        ys.push_back(mean);
    }

    double ymin = *std::min_element(ys.begin(), ys.end());
    double ymax = *std::max_element(ys.begin(), ys.end());
    if (ymax - ymin < 1e-12) {
        res.p = 1.0;
        res.amplitude = 0.0;
        res.offset = ys.front();
    } else {
        // Dense scan + local refinement over the decay base.
        double best_p = 1.0, best_sse = std::numeric_limits<double>::infinity();
        double A = 0, B = 0;
        for (int i = 0; i <= 2000; ++i) {
            double p = i / 2000.0;
            double a, b;
            double sse = fit_ab(ms, ys, p, a, b);
            if (sse < best_sse) {
                best_sse = sse;
                best_p = p;
            }
        }
        double lo = std::max(0.0, best_p - 1e-3), hi = std::min(1.0, best_p + 1e-3);
        for (int it = 0; it < 60; ++it) {
            double p1 = lo + (hi - lo) / 3, p2 = hi - (hi - lo) / 3;
            double a, b;
            if (fit_ab(ms, ys, p1, a, b) < fit_ab(ms, ys, p2, a, b))
                hi = p2;
            else
                lo = p1;
        }
        best_p = 0.5 * (lo + hi);
        fit_ab(ms, ys, best_p, A, B);
        res.p = best_p;
        res.amplitude = A;
        res.offset = B;
    }
    res.n_bar = mean_pulses_per_clifford();
    res.per_pulse_fidelity = std::pow(res.p, 1.0 / res.n_bar);
    return res;
}

// --- Calibration ------------------------------------------------------------

void CalibrationProblem::validate() const {
    check_dimension(d);
    if (nominal_omega <= 0) throw std::invalid_argument("nominal omega must be positive");
    if (true_amplitudes.size() != d - 1 || start_amplitudes.size() != d - 1 ||
        lower_bounds.size() != d - 1 || upper_bounds.size() != d - 1)
        throw std::invalid_argument("amplitude vectors must have length d-1");
    for (int k = 0; k < d - 1; ++k) {
        if (lower_bounds[k] > upper_bounds[k])
            throw std::invalid_argument("lower bound exceeds upper bound");
        if (start_amplitudes[k] < lower_bounds[k] || start_amplitudes[k] > upper_bounds[k])
            throw std::invalid_argument("start amplitudes must lie within bounds");
    }
    if (sequences.empty()) throw std::invalid_argument("need at least one RB sequence");
    for (const auto& word : sequences)
        for (int idx : word)
            if (idx < 0 || idx >= 24) throw std::invalid_argument("Clifford index out of range");
}

CalibrationProblem CalibrationProblem::make(int d, double omega, int n_sequences, int length,
                                            double perturbation, std::uint64_t seed) {
    check_dimension(d);
    if (omega <= 0) throw std::invalid_argument("omega must be positive");
    if (n_sequences < 1 || length < 1)
        throw std::invalid_argument("need at least one sequence of positive length");

    CalibrationProblem prob;
    prob.d = d;
    prob.nominal_omega = omega;
    prob.true_amplitudes = ideal_amplitudes(d, omega);
    prob.start_amplitudes = prob.true_amplitudes * (1.0 + perturbation);
    double box = std::max(0.2, 3.0 * std::abs(perturbation));
    prob.lower_bounds = prob.true_amplitudes * (1.0 - box);
    prob.upper_bounds = prob.true_amplitudes * (1.0 + box);

    const std::vector<Matrix> lifted = clifford_su2_embedded(d);
    std::uniform_int_distribution<int> pick(0, 23);
    for (int i = 0; i < n_sequences; ++i) {
        auto rng = make_stream(seed, static_cast<std::uint64_t>(i));
        std::vector<int> word(length);
        for (int& w : word) w = pick(rng);
        Matrix net = Matrix::Identity(d, d);
        for (int w : word) net = lifted[w] * net;
        Matrix inv = net.adjoint();
        int best = 0;
        double best_f = -1;
        for (int j = 0; j < 24; ++j) {
            double f = unitary_fidelity(lifted[j], inv);
            if (f > best_f) {
                best_f = f;
                best = j;
            }
        }
        word.push_back(best);
        prob.sequences.push_back(std::move(word));
    }
    prob.validate();
    return prob;
}

double calibration_objective(const CalibrationProblem& prob, const RealVector& amplitudes) {
    prob.validate();
    if (amplitudes.size() != prob.d - 1)
        throw std::invalid_argument("amplitude vector must have length d-1");

    ToneSet actual;
    actual.d = prob.d;
    actual.amplitudes = amplitudes;
    actual.detunings = RealVector::Zero(prob.d - 1);
    ToneSet truth = actual;
    truth.amplitudes = prob.true_amplitudes;

    Vector zero = Vector::Zero(prob.d);
    zero[0] = 1.0;
    double acc = 0;
    for (const auto& word : prob.sequences) {
        CompiledSequence comp = compile_clifford_sequence(word, prob.d);
        Vector ideal = evolve_nonideal(comp.pulses, truth, prob.nominal_omega) * zero;
        Vector got = evolve_nonideal(comp.pulses, actual, prob.nominal_omega) * zero;
        acc += std::norm(ideal.dot(got));
    }
    return acc / prob.sequences.size();
}

std::string LandscapeResult::csv() const {
    std::ostringstream os;
    os << "amp_i\\amp_j";
    for (int j = 0; j < grid_j.size(); ++j) os << "," << format_sig9(grid_j[j]);
    os << "\n";
    for (int i = 0; i < grid_i.size(); ++i) {
        os << format_sig9(grid_i[i]);
        for (int j = 0; j < grid_j.size(); ++j) os << "," << format_sig9(averaged(i, j));
        os << "\n";
    }
    return os.str();
}

LandscapeResult calibration_landscape(const CalibrationProblem& prob, int axis_i, int axis_j,
                                      const RealVector& grid_i, const RealVector& grid_j) {
    prob.validate();
    if (axis_i == axis_j || axis_i < 0 || axis_j < 0 || axis_i >= prob.d - 1 ||
        axis_j >= prob.d - 1)
        throw std::invalid_argument("landscape axes must be two distinct tone indices");

    LandscapeResult res;
    res.axis_i = axis_i;
    res.axis_j = axis_j;
    res.grid_i = grid_i;
    res.grid_j = grid_j;
    if (grid_i.size() == 0 || grid_j.size() == 0) {
        res.averaged.resize(grid_i.size(), grid_j.size());
        return res;
    }

    ToneSet truth;
    truth.d = prob.d;
    truth.amplitudes = prob.true_amplitudes;
    truth.detunings = RealVector::Zero(prob.d - 1);
    Vector zero = Vector::Zero(prob.d);
    zero[0] = 1.0;

    std::vector<CompiledSequence> comps;
    std::vector<Vector> ideals;
    for (const auto& word : prob.sequences) {
        comps.push_back(compile_clifford_sequence(word, prob.d));
        ideals.push_back(evolve_nonideal(comps.back().pulses, truth, prob.nominal_omega) * zero);
    }

    res.per_sequence.assign(prob.sequences.size(),
                            Eigen::MatrixXd(grid_i.size(), grid_j.size()));
    res.averaged = Eigen::MatrixXd::Zero(grid_i.size(), grid_j.size());
    ToneSet scan = truth;
    for (int a = 0; a < grid_i.size(); ++a) {
        for (int b = 0; b < grid_j.size(); ++b) {
            scan.amplitudes = prob.true_amplitudes;
            scan.amplitudes[axis_i] = grid_i[a];
            scan.amplitudes[axis_j] = grid_j[b];
            double acc = 0;
            for (size_t s = 0; s < comps.size(); ++s) {
                Vector got = evolve_nonideal(comps[s].pulses, scan, prob.nominal_omega) * zero;
                double f = std::norm(ideals[s].dot(got));
                res.per_sequence[s](a, b) = f;
                acc += f;
            }
            res.averaged(a, b) = acc / comps.size();
        }
    }
    return res;
}

NelderMeadResult nelder_mead(const std::function<double(const RealVector&)>& objective,
                             const RealVector& x0, const RealVector& lower,
                             const RealVector& upper, const NelderMeadOptions& opts) {
    const int n = static_cast<int>(x0.size());
    if (n < 1) throw std::invalid_argument("empty start point");
    if (lower.size() != n || upper.size() != n)
        throw std::invalid_argument("bound vectors must match the start point");
    for (int k = 0; k < n; ++k)
        if (lower[k] > upper[k]) throw std::invalid_argument("lower bound exceeds upper bound");

    auto clamp = [&](RealVector v) {
        for (int k = 0; k < n; ++k) v[k] = std::min(std::max(v[k], lower[k]), upper[k]);
        return v;
    };

    std::vector<RealVector> xs;
    xs.push_back(clamp(x0));
    for (int k = 0; k < n; ++k) {
        RealVector v = xs[0];
        double off = opts.initial_step * std::max(std::abs(v[k]), 1.0);
        v[k] = (v[k] + off <= upper[k]) ? v[k] + off : v[k] - off;
        xs.push_back(clamp(v));
    }
    std::vector<double> fs(n + 1);
    for (int k = 0; k <= n; ++k) fs[k] = objective(xs[k]);

    NelderMeadResult res;
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        std::vector<int> order(n + 1);
        for (int k = 0; k <= n; ++k) order[k] = k;
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::vector<RealVector> sx(n + 1);
        std::vector<double> sf(n + 1);
        for (int k = 0; k <= n; ++k) {
            sx[k] = xs[order[k]];
            sf[k] = fs[order[k]];
        }
        xs = std::move(sx);
        fs = std::move(sf);
        res.trace.push_back(fs[0]);

        double diameter = 0;
        for (int k = 1; k <= n; ++k) diameter = std::max(diameter, (xs[k] - xs[0]).norm());
        if (diameter < opts.simplex_tol || fs[n] - fs[0] < opts.spread_tol) {
            res.converged = true;
            break;
        }

        RealVector centroid = RealVector::Zero(n);
        for (int k = 0; k < n; ++k) centroid += xs[k];
        centroid /= n;

        RealVector xr = clamp(centroid + 1.0 * (centroid - xs[n]));
        double fr = objective(xr);
        if (fr < fs[0]) {
            RealVector xe = clamp(centroid + 2.0 * (centroid - xs[n]));
            double fe = objective(xe);
            if (fe < fr) {
                xs[n] = xe;
                fs[n] = fe;
            } else {
                xs[n] = xr;
                fs[n] = fr;
            }
        } else if (fr < fs[n - 1]) {
            xs[n] = xr;
            fs[n] = fr;
        } else {
            RealVector xc;
            if (fr < fs[n])
                xc = clamp(centroid + 0.5 * (xr - centroid));  // outside contraction
            else
                xc = clamp(centroid + 0.5 * (xs[n] - centroid));  // inside contraction
            double fc = objective(xc);
            if (fc < std::min(fr, fs[n])) {
                xs[n] = xc;
                fs[n] = fc;
            } else {
                for (int k = 1; k <= n; ++k) {
                    xs[k] = clamp(xs[0] + 0.5 * (xs[k] - xs[0]));
                    fs[k] = objective(xs[k]);
                }
            }
        }
    }
    res.iterations = it;
    int best = 0;
    for (int k = 1; k <= n; ++k)
        if (fs[k] < fs[best]) best = k;
    res.x = xs[best];
    res.value = fs[best];
    return res;
}

std::string CalibrationResult::to_json() const {
    nlohmann::ordered_json j;
    j["recovered"] = std::vector<double>(recovered.data(), recovered.data() + recovered.size());
    j["true"] = std::vector<double>(true_amplitudes.data(),
                                    true_amplitudes.data() + true_amplitudes.size());
    j["rel_error"] = rel_error;
    j["iterations"] = iterations;
    j["converged"] = converged;
    return j.dump(2) + "\n";
}

CalibrationResult nelder_mead_calibrate(const CalibrationProblem& prob,
                                        const NelderMeadOptions& opts) {
    prob.validate();
    auto objective = [&](const RealVector& amps) { return -calibration_objective(prob, amps); };
    NelderMeadResult nm =
        nelder_mead(objective, prob.start_amplitudes, prob.lower_bounds, prob.upper_bounds, opts);

    CalibrationResult res;
    res.recovered = nm.x;
    res.true_amplitudes = prob.true_amplitudes;
    res.rel_error = 0;
    for (int k = 0; k < prob.true_amplitudes.size(); ++k)
        res.rel_error = std::max(res.rel_error, std::abs(nm.x[k] - prob.true_amplitudes[k]) /
                                                    std::abs(prob.true_amplitudes[k]));
    res.iterations = nm.iterations;
    res.converged = nm.converged;
    res.trace = nm.trace;
    return res;
}

}  // namespace qdsim
