#include "qdsim/levels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "qdsim/io.hpp"
#include "qdsim/spin.hpp"

namespace qdsim {
namespace {

bool half_integer(double x) { return std::abs(2 * x - std::round(2 * x)) < 1e-9; }

// Ladder element <m+1|J+|m> for angular momentum q.
double ladder(double q, double m) { return std::sqrt(q * (q + 1) - m * (m + 1)); }

struct Basis {
    double I, J;
    int nI, nJ;
    double mI(int idx) const { return -I + idx / nJ; }
    double mJ(int idx) const { return -J + idx % nJ; }
    int dim() const { return nI * nJ; }
};

Basis make_basis(const HyperfineConstants& hc) {
    return {hc.I, hc.J, int(2 * hc.I + 1.5), int(2 * hc.J + 1.5)};
}

// I.J = Iz Jz + (I+ J- + I- J+)/2 in the product basis (mI-major).
Matrix dot_IJ(const Basis& b) {
    Matrix K = Matrix::Zero(b.dim(), b.dim());
    for (int p = 0; p < b.dim(); ++p) {
        K(p, p) = b.mI(p) * b.mJ(p);
        // I+ J-: (mI, mJ) -> (mI+1, mJ-1)
        if (b.mI(p) < b.I - 0.5 && b.mJ(p) > -b.J + 0.5) {
            int q = p + b.nJ - 1;
            K(q, p) += 0.5 * ladder(b.I, b.mI(p)) * ladder(b.J, b.mJ(p) - 1);
        }
        // I- J+: (mI, mJ) -> (mI-1, mJ+1)
        if (b.mI(p) > -b.I + 0.5 && b.mJ(p) < b.J - 0.5) {
            int q = p - b.nJ + 1;
            K(q, p) += 0.5 * ladder(b.I, b.mI(p) - 1) * ladder(b.J, b.mJ(p));
        }
    }
    return K;
}

// Electronic J_a lifted to the product basis.
Matrix electronic_operator(const Basis& b, char pol) {
    Matrix JJ = Matrix::Zero(b.dim(), b.dim());
    for (int p = 0; p < b.dim(); ++p) {
        if (pol == 'z') {
            JJ(p, p) = b.mJ(p);
        } else {  // 'x'
            if (b.mJ(p) < b.J - 0.5) {
                int q = p + 1;
                double g = 0.5 * ladder(b.J, b.mJ(p));
                JJ(q, p) += g;
                JJ(p, q) += g;
            }
        }
    }
    return JJ;
}

std::vector<Level> solve_levels(const HyperfineConstants& hc, const FieldConfig& fc) {
    const Basis b = make_basis(hc);
    const Matrix H = build_hamiltonian(hc, fc);
    // Group basis indices by mF; H is block diagonal in this grouping, and
    // solving per block keeps eigenvectors on a single mF even at Bz = 0
    // where whole blocks are mutually degenerate.
    std::map<double, std::vector<int>> blocks;
    for (int p = 0; p < b.dim(); ++p) blocks[b.mI(p) + b.mJ(p)].push_back(p);

    std::vector<Level> levels;
    for (const auto& [mF, idx] : blocks) {
        Matrix sub(idx.size(), idx.size());
        for (size_t r = 0; r < idx.size(); ++r)
            for (size_t c = 0; c < idx.size(); ++c) sub(r, c) = H(idx[r], idx[c]);
        Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
        for (size_t k = 0; k < idx.size(); ++k) {
            Level lv;
            lv.energy = es.eigenvalues()[k];
            lv.mF = mF;
            lv.composition = Vector::Zero(b.dim());
            for (size_t r = 0; r < idx.size(); ++r) lv.composition[idx[r]] = es.eigenvectors()(r, k);
            levels.push_back(std::move(lv));
        }
    }
    std::sort(levels.begin(), levels.end(), [](const Level& a, const Level& c) {
        if (a.energy != c.energy) return a.energy < c.energy;
        return a.mF < c.mF;  // documented degenerate tie-break
    });
    for (size_t i = 0; i < levels.size(); ++i) levels[i].index = int(i);
    return levels;
}

// dE/dBz for each level at fc.Bz by central difference, matching levels
// across field steps by eigenvector overlap within the same mF block.
std::vector<double> level_slopes(const HyperfineConstants& hc, const FieldConfig& fc,
                                 const std::vector<Level>& at_B, double h_gauss) {
    FieldConfig up = fc, dn = fc;
    up.Bz += h_gauss;
    dn.Bz -= h_gauss;
    const auto plus = solve_levels(hc, up);
    const auto minus = solve_levels(hc, dn);
    auto match_energy = [](const std::vector<Level>& set, const Level& ref) {
        double best = -1, e = 0;
        for (const auto& lv : set) {
            if (lv.mF != ref.mF) continue;
            double ov = std::abs(ref.composition.dot(lv.composition.conjugate()));
            if (ov > best) {
                best = ov;
                e = lv.energy;
            }
        }
        return e;
    };
    std::vector<double> slope(at_B.size());
    for (size_t i = 0; i < at_B.size(); ++i)
        slope[i] = (match_energy(plus, at_B[i]) - match_energy(minus, at_B[i])) / (2 * h_gauss);
    return slope;
}

}  // namespace

void HyperfineConstants::validate() const {
    if (I < 0 || J < 0 || !half_integer(I) || !half_integer(J))
        throw std::invalid_argument("hyperfine constants: I, J must be non-negative half-integers");
    for (double v : {A, B, gJ, gI})
        if (!std::isfinite(v)) throw std::invalid_argument("hyperfine constants must be finite");
}

Matrix build_hamiltonian(const HyperfineConstants& hc, const FieldConfig& fc) {
    hc.validate();
    if (fc.Bz < 0) throw std::invalid_argument("field config: Bz must be >= 0");
    const Basis b = make_basis(hc);
    const Matrix K = dot_IJ(b);
    Matrix H = hc.A * K;
    if (hc.B != 0.0) {
        const double denom = 2 * hc.I * (2 * hc.I - 1) * hc.J * (2 * hc.J - 1);
        if (denom <= 0)
            throw std::invalid_argument("quadrupole term requires I >= 1 and J >= 1");
        const double IJ = hc.I * (hc.I + 1) * hc.J * (hc.J + 1);
        H += (hc.B / denom) *
             (3.0 * K * K + 1.5 * K - IJ * Matrix::Identity(b.dim(), b.dim()));
    }
    for (int p = 0; p < b.dim(); ++p)
        H(p, p) += fc.muB * fc.Bz * (hc.gJ * b.mJ(p) + hc.gI * b.mI(p));
    return H;
}

std::vector<Level> diagonalize_levels(const HyperfineConstants& hc, const FieldConfig& fc) {
    return solve_levels(hc, fc);
}

std::vector<Transition> transition_table(const HyperfineConstants& hc, const FieldConfig& fc,
                                         const std::set<char>& pols) {
    for (char p : pols)
        if (p != 'x' && p != 'z') throw std::invalid_argument("polarizations must be subset of {x,z}");
    const Basis b = make_basis(hc);
    const auto levels = solve_levels(hc, fc);
    const auto slopes = level_slopes(hc, fc, levels, 1e-3);  // 1 mG step

    std::vector<Matrix> ops;
    for (char p : pols) ops.push_back(electronic_operator(b, p));

    std::vector<Transition> table;
    for (size_t i = 0; i < levels.size(); ++i) {
        for (size_t k = i + 1; k < levels.size(); ++k) {
            if (std::abs(levels[i].mF - levels[k].mF) > 1.5) continue;
            if (std::abs(std::abs(levels[i].mF - levels[k].mF) - 1.0) > 1e-9 &&
                std::abs(levels[i].mF - levels[k].mF) > 1e-9)
                continue;  // |dmF| <= 1 only
            Transition t;
            t.lower = levels[i].index;
            t.upper = levels[k].index;
            t.frequency = levels[k].energy - levels[i].energy;
            double s = 0;
            for (const auto& op : ops)
                s = std::max(s, std::abs(Complex(levels[k].composition.adjoint() * op *
                                                 levels[i].composition)));
            t.strength = s;
            t.sensitivity = slopes[k] - slopes[i];
            table.push_back(t);
        }
    }
    return table;
}

std::vector<QuditAssignment> score_qudit_candidates(const std::vector<Transition>& table, int d,
                                                    const ScoringWeights& weights) {
    check_dimension(d);
    if (table.empty()) throw std::invalid_argument("score_qudit_candidates: empty table");

    // adjacency over levels via strength > 0 transitions
    std::map<std::pair<int, int>, const Transition*> edge;
    std::map<int, std::vector<int>> adj;
    for (const auto& t : table) {
        if (t.strength <= 0) continue;
        edge[{std::min(t.lower, t.upper), std::max(t.lower, t.upper)}] = &t;
        adj[t.lower].push_back(t.upper);
        adj[t.upper].push_back(t.lower);
    }
    for (auto& [n, v] : adj) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }

    std::vector<QuditAssignment> out;
    std::vector<int> path;
    std::set<int> used;
    auto link = [&](int a, int c) { return edge.at({std::min(a, c), std::max(a, c)}); };

    auto emit = [&]() {
        // chains are undirected; keep the orientation with smaller first index
        if (path.front() > path.back()) return;
        QuditAssignment qa;
        qa.d = d;
        qa.state_indices = path;
        double min_s = 1e300, max_sens = 0;
        std::vector<double> freqs;
        for (int i = 0; i + 1 < d; ++i) {
            const Transition* t = link(path[i], path[i + 1]);
            qa.tone_frequencies.push_back(t->frequency);
            qa.coupling_strengths.push_back(t->strength);
            min_s = std::min(min_s, t->strength);
            max_sens = std::max(max_sens, std::abs(t->sensitivity));
            freqs.push_back(t->frequency);
        }
        double min_sep = 0;
        if (freqs.size() > 1) {
            min_sep = 1e300;
            for (size_t i = 0; i < freqs.size(); ++i)
                for (size_t k = i + 1; k < freqs.size(); ++k)
                    min_sep = std::min(min_sep, std::abs(freqs[i] - freqs[k]));
        }
        qa.score = weights.strength * min_s - weights.sensitivity * max_sens +
                   weights.separation * min_sep;
        out.push_back(std::move(qa));
    };

    std::function<void(int)> dfs = [&](int node) {
        path.push_back(node);
        used.insert(node);
        if (int(path.size()) == d) {
            emit();
        } else {
            auto it = adj.find(node);
            if (it != adj.end())
                for (int nxt : it->second)
                    if (!used.count(nxt)) dfs(nxt);
        }
        used.erase(node);
        path.pop_back();
    };
    for (const auto& [n, _] : adj) dfs(n);

    std::sort(out.begin(), out.end(), [](const QuditAssignment& a, const QuditAssignment& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.state_indices < b.state_indices;
    });
    return out;
}

double off_resonant_error(const QuditAssignment& assignment, const std::vector<Transition>& table,
                          double omega_scale_khz) {
    const int d = assignment.d;
    std::set<int> chain(assignment.state_indices.begin(), assignment.state_indices.end());
    std::set<std::pair<int, int>> links;
    for (int i = 0; i + 1 < d; ++i) {
        int a = assignment.state_indices[i], b = assignment.state_indices[i + 1];
        links.insert({std::min(a, b), std::max(a, b)});
    }
    // Spectators: transitions touching at least one chain level that are not
    // chain links themselves (no population sits on fully external pairs).
    std::vector<const Transition*> spectators;
    for (const auto& t : table) {
        bool touches = chain.count(t.lower) || chain.count(t.upper);
        bool is_link = links.count({std::min(t.lower, t.upper), std::max(t.lower, t.upper)});
        if (touches && !is_link) spectators.push_back(&t);
    }
    double err = 0;
    for (int k = 0; k + 1 < d; ++k) {
        // tone k drives link k at the flat-top displacement amplitude
        const double omega_k = omega_scale_khz * std::sqrt(double(k + 1) * double(d - 1 - k));
        const double field_scale = omega_k / assignment.coupling_strengths[k];
        for (const Transition* t : spectators) {
            const double omega_ik = field_scale * t->strength;             // kHz
            const double delta_mhz = t->frequency - assignment.tone_frequencies[k];
            if (delta_mhz == 0.0)
                throw std::runtime_error(
                    "off_resonant_error: zero detuning to a spectator transition "
                    "(degenerate spectrum; bad state selection)");
            const double delta_khz = 1e3 * std::abs(delta_mhz);
            err += (omega_ik / delta_khz) * (omega_ik / delta_khz);
        }
    }
    return err;
}

std::string transition_table_csv(const std::vector<Transition>& table) {
    std::ostringstream os;
    os << "lower,upper,freq_mhz,strength,sensitivity_mhz_per_g\n";
    for (const auto& t : table)
        os << t.lower << ',' << t.upper << ',' << format_sig9(t.frequency) << ','
           << format_sig9(t.strength) << ',' << format_sig9(t.sensitivity) << '\n';
    return os.str();
}

}  // namespace qdsim
