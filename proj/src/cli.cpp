#include "qdsim/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qdsim/control.hpp"
#include "qdsim/grover.hpp"
#include "qdsim/io.hpp"
#include "qdsim/levels.hpp"
#include "qdsim/noise.hpp"
#include "qdsim/spin.hpp"
#include "qdsim/synthesis.hpp"

namespace qdsim {
namespace {

namespace fs = std::filesystem;
using njson = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;
// Drive scale giving a 33 us pi/2 pulse under t = theta/(2 omega).
const double kDefaultOmega = kPi / (4.0 * 0.033);

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// One command's validated slice of the config file. Reads are recorded (with
// applied defaults) so the run record can snapshot the effective parameters.
class Section {
  public:
    Section(const njson& obj, std::string dotted, std::set<std::string> allowed)
        : j_(obj), name_(std::move(dotted)), allowed_(std::move(allowed)) {
        if (!j_.is_object())
            throw std::runtime_error("config section '" + name_ + "' must be an object");
        for (const auto& item : j_.items())
            if (!allowed_.count(item.key()))
                throw std::runtime_error("unknown configuration key '" + name_ + "." +
                                         item.key() + "'");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    T require(const std::string& key) {
        if (!j_.contains(key))
            throw std::runtime_error("missing configuration key '" + name_ + "." + key + "'");
        return read<T>(key);
    }

    template <typename T>
    T get(const std::string& key, T def) {
        if (!j_.contains(key)) {
            effective_[key] = def;
            return def;
        }
        return read<T>(key);
    }

    // Nested object (empty when absent); caller wraps it in its own Section.
    njson object(const std::string& key) {
        if (!j_.contains(key)) return njson::object();
        if (!j_.at(key).is_object())
            throw std::runtime_error("configuration key '" + name_ + "." + key +
                                     "' must be an object");
        return j_.at(key);
    }

    void note(const std::string& key, const njson& value) { effective_[key] = value; }
    const njson& effective() const { return effective_; }
    const std::string& name() const { return name_; }

  private:
    template <typename T>
    T read(const std::string& key) {
        try {
            T v = j_.at(key).get<T>();
            effective_[key] = v;
            return v;
        } catch (const njson::exception&) {
            throw std::runtime_error("configuration key '" + name_ + "." + key +
                                     "' has the wrong type");
        }
    }

    njson j_;
    std::string name_;
    std::set<std::string> allowed_;
    njson effective_ = njson::object();
};

RealVector to_real_vector(const std::vector<double>& v) {
    RealVector out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
}

std::vector<double> to_std_vector(const RealVector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

struct RunContext {
    fs::path out;
    std::uint64_t seed = 12345;
    int threads = 1;
    njson fixture_hashes = njson::object();
    std::vector<std::string> outputs;
    njson metrics = njson::object();

    void emit(const std::string& filename, const std::string& content) {
        atomic_write(out / filename, content);
        outputs.push_back(filename);
    }
};

void write_record(const std::string& command, const RunContext& ctx, const njson& config) {
    njson rec;
    rec["command"] = command;
    rec["version"] = kVersion;
    rec["timestamp_utc"] = now_iso8601();
    rec["seed"] = ctx.seed;
    rec["threads"] = ctx.threads;
    rec["config"] = config;
    rec["fixture_hashes"] = ctx.fixture_hashes;
    rec["outputs"] = ctx.outputs;
    rec["metrics"] = ctx.metrics;
    atomic_write(ctx.out / (command + "_record.json"), rec.dump(2) + "\n");
}

// Shared noise sub-section: sensitivities plus either t2_ms or gamma.
struct NoiseSettings {
    bool present = false;
    DephasingModel model;
    double omega = kDefaultOmega;
    double pulse_duration = 0.033;
    double dt = 0;
};

NoiseSettings parse_noise(Section& parent, int d, njson obj) {
    NoiseSettings ns;
    if (obj.empty()) {
        ns.model = DephasingModel::none(d);
        return ns;
    }
    Section s(obj, parent.name() + ".noise",
              {"sensitivities", "t2_ms", "gamma", "omega_khz", "pulse_duration_ms", "dt_ms"});
    ns.present = true;
    auto sens = s.require<std::vector<double>>("sensitivities");
    if (static_cast<int>(sens.size()) != d)
        throw std::runtime_error("noise.sensitivities must have one entry per level");
    ns.model.sensitivities = to_real_vector(sens);
    if (s.has("t2_ms") && s.has("gamma"))
        throw std::runtime_error("set either noise.t2_ms or noise.gamma, not both");
    if (s.has("t2_ms"))
        ns.model.t2_reference = s.require<double>("t2_ms");
    else if (s.has("gamma"))
        ns.model.gamma = s.require<double>("gamma");
    else
        throw std::runtime_error("missing configuration key '" + parent.name() +
                                 ".noise.t2_ms' (or gamma)");
    ns.pulse_duration = s.get<double>("pulse_duration_ms", 0.033);
    ns.omega = s.get<double>("omega_khz", kPi / (4.0 * ns.pulse_duration));
    ns.dt = s.get<double>("dt_ms", 0.0);
    ns.model.validate(d);
    parent.note("noise", s.effective());
    return ns;
}

// --- commands -------------------------------------------------------------

void cmd_levels(Section& s, RunContext& ctx) {
    HyperfineConstants hc;
    hc.I = s.require<double>("I");
    hc.J = s.require<double>("J");
    hc.A = s.require<double>("A_mhz");
    hc.B = s.require<double>("B_mhz");
    hc.gJ = s.require<double>("gJ");
    hc.gI = s.require<double>("gI");
    hc.validate();
    FieldConfig fc;
    fc.Bz = s.require<double>("bz_gauss");

    std::set<char> pols;
    for (const auto& p : s.get<std::vector<std::string>>("pols", {"x", "z"})) {
        if (p != "x" && p != "z")
            throw std::runtime_error("levels.pols entries must be \"x\" or \"z\"");
        pols.insert(p[0]);
    }

    auto transitions = transition_table(hc, fc, pols);
    ctx.emit("transitions.csv", transition_table_csv(transitions));

    const int d = s.get<int>("d", 0);
    njson ranking = njson::array();
    if (d > 0) {
        ScoringWeights w;
        njson wobj = s.object("weights");
        if (!wobj.empty()) {
            Section ws(wobj, "levels.weights", {"strength", "sensitivity", "separation"});
            w.strength = ws.get<double>("strength", 1.0);
            w.sensitivity = ws.get<double>("sensitivity", 1.0);
            w.separation = ws.get<double>("separation", 1.0);
            s.note("weights", ws.effective());
        }
        auto candidates = score_qudit_candidates(transitions, d, w);
        if (candidates.empty())
            std::cerr << "warning: no " << d << "-level chains found in this manifold\n";
        const int keep = s.get<int>("max_assignments", 10);
        const bool score_offres = s.has("omega_khz");
        const double omega = s.get<double>("omega_khz", 0.0);
        for (size_t i = 0; i < candidates.size() && i < static_cast<size_t>(keep); ++i) {
            const auto& c = candidates[i];
            njson jc;
            jc["state_indices"] = c.state_indices;
            jc["tone_frequencies_mhz"] = c.tone_frequencies;
            jc["coupling_strengths"] = c.coupling_strengths;
            jc["score"] = c.score;
            if (score_offres) jc["off_resonant_error"] = off_resonant_error(c, transitions, omega);
            ranking.push_back(std::move(jc));
        }
        ctx.metrics["n_assignments"] = candidates.size();
    }
    njson out;
    out["d"] = d;
    out["assignments"] = ranking;
    ctx.emit("assignments.json", out.dump(2) + "\n");
    ctx.metrics["n_levels"] = hc.dim();
    ctx.metrics["n_transitions"] = transitions.size();
}

void cmd_synth(Section& s, RunContext& ctx) {
    const int d = s.require<int>("d");
    const std::string target_name = s.require<std::string>("target");

    int default_pulses = 2;
    TargetSpec target;
    std::string op_name = target_name;
    std::string default_kind;
    if (target_name == "oracle") {
        const int m = s.require<int>("m");
        default_kind = "state-map";
        op_name = "mark" + std::to_string(m);
        std::string kind = s.get<std::string>("kind", default_kind);
        Vector sup = equal_superposition(d);
        if (kind == "state-map")
            target = TargetSpec::state_map(oracle_matrix(d, m) * sup, sup);
        else if (kind == "full-unitary")
            target = TargetSpec::full_unitary(oracle_matrix(d, m));
        else if (kind == "diagonal-up-to-phase")
            target = TargetSpec::diagonal_up_to_phase(oracle_matrix(d, m));
        else
            throw std::runtime_error("unknown synth.kind '" + kind + "'");
        default_pulses = 2;
    } else if (target_name == "equal_sup") {
        std::string kind = s.get<std::string>("kind", "state-map");
        if (kind != "state-map")
            throw std::runtime_error("equal_sup is only defined as a state map");
        target = TargetSpec::state_map(equal_superposition(d));
        default_pulses = 3;
    } else if (target_name == "reflection") {
        std::string kind = s.get<std::string>("kind", "full-unitary");
        if (kind == "full-unitary")
            target = TargetSpec::full_unitary(reflection_matrix(d));
        else if (kind == "diagonal-up-to-phase")
            target = TargetSpec::diagonal_up_to_phase(reflection_matrix(d));
        else
            throw std::runtime_error("reflection is a unitary target");
        default_pulses = 8;
    } else if (target_name == "identity") {
        std::string kind = s.get<std::string>("kind", "full-unitary");
        if (kind != "full-unitary")
            throw std::runtime_error("identity is a unitary target");
        target = TargetSpec::full_unitary(Matrix::Identity(d, d));
        default_pulses = 1;
    } else {
        throw std::runtime_error("unknown synth.target '" + target_name + "'");
    }

    SynthesisConfig cfg;
    cfg.n_pulses = s.get<int>("n_pulses", default_pulses);
    cfg.restarts = s.get<int>("restarts", 20);
    cfg.max_iters = s.get<int>("max_iters", 2000);
    cfg.step = s.get<double>("step", 0.5);
    cfg.grad_step = s.get<double>("grad_step", 1e-6);
    cfg.tol = s.get<double>("tol", 1e-6);
    cfg.seed = ctx.seed;

    SynthesisResult res = synthesize(target, cfg);

    PulseTable table;
    table.d = d;
    table.operations.push_back({op_name, res.sequence});
    ctx.emit("pulses.csv", pulse_table_csv(table));

    njson j;
    j["target"] = target_name;
    j["operation"] = op_name;
    j["d"] = d;
    j["n_pulses"] = cfg.n_pulses;
    j["infidelity"] = res.infidelity;
    j["iterations"] = res.iterations;
    j["converged"] = res.converged;
    j["restart_index"] = res.restart_index;
    j["trace"] = res.trace;
    ctx.emit("synth_result.json", j.dump(2) + "\n");

    ctx.metrics["infidelity"] = res.infidelity;
    ctx.metrics["converged"] = res.converged;
}

void cmd_verify_tables(Section& s, RunContext& ctx) {
    std::vector<std::string> fixtures;
    if (s.has("fixtures")) {
        fixtures = s.require<std::vector<std::string>>("fixtures");
    } else {
        fs::path dir = default_fixture_dir();
        fixtures = {(dir / "table1_d5.csv").string(), (dir / "table2_d8.csv").string()};
        s.note("fixtures", fixtures);
    }

    njson out;
    out["tables"] = njson::array();
    std::vector<std::string> failures;
    bool all_single = true;
    for (const auto& f : fixtures) {
        try {
            std::string text = read_file(f);
            ctx.fixture_hashes[f] = fnv1a64_hex(text);
            PulseTable table = parse_pulse_table(text);
            VerificationReport rep = verify_pulse_table(table, table.d);
            njson jt = njson::parse(rep.to_json());
            jt["file"] = f;
            out["tables"].push_back(std::move(jt));
            if (!rep.single_convention) {
                all_single = false;
                failures.push_back(f + ": no single winning convention");
            }
        } catch (const std::exception& e) {
            failures.push_back(f + ": " + e.what());
        }
    }
    ctx.emit("verification.json", out.dump(2) + "\n");
    ctx.metrics["n_tables"] = out["tables"].size();
    ctx.metrics["single_convention"] = all_single;
    if (!failures.empty()) {
        std::ostringstream os;
        os << "verify-tables sub-tasks failed:";
        for (const auto& f : failures) os << "\n  " << f;
        throw std::runtime_error(os.str());
    }
}

void cmd_grover(Section& s, RunContext& ctx) {
    const int d = s.require<int>("d");
    const std::string source = s.get<std::string>("source", "analytic");
    const std::string mode = s.get<std::string>("mode", "marks");
    const int n_iter = s.get<int>("n_iterations", optimal_iterations(d));

    GroverCircuit circuit;
    if (source == "analytic") {
        circuit = GroverCircuit::analytic(d, n_iter, s.get<int>("prep_slots", 2),
                                          s.get<int>("oracle_slots", 2),
                                          s.get<int>("reflection_slots", 4));
    } else if (source == "table") {
        std::string path = s.require<std::string>("table");
        std::string text = read_file(path);
        ctx.fixture_hashes[path] = fnv1a64_hex(text);
        PulseTable table = parse_pulse_table(text);
        if (table.d != d) throw std::runtime_error("pulse table dimension does not match d");
        circuit = GroverCircuit::from_table(table, n_iter);
    } else {
        throw std::runtime_error("unknown grover.source '" + source + "'");
    }

    NoiseSettings ns = parse_noise(s, d, s.object("noise"));
    NoiseContext nc;
    const NoiseContext* noise = nullptr;
    if (ns.present) {
        nc.model = ns.model;
        nc.tones = ToneSet::ideal(d, ns.omega);
        nc.timing = PulseTiming::from_theta(ns.omega, ns.dt);
        nc.slot_duration = ns.pulse_duration;
        noise = &nc;
    }

    if (mode == "marks") {
        auto outcomes = mark_sweep(circuit, noise);
        ctx.emit("grover_marks.csv", mark_matrix_csv(mark_matrix(outcomes)));
        double min_diag = 1.0, min_sso = 1.0;
        for (const auto& o : outcomes) {
            min_diag = std::min(min_diag, o.asp_measured);
            min_sso = std::min(min_sso, o.sso_vs_ideal);
        }
        ctx.metrics["min_asp_measured"] = min_diag;
        ctx.metrics["min_sso_vs_ideal"] = min_sso;
    } else if (mode == "iterations") {
        const int marked = s.require<int>("marked");
        const int n_max = s.get<int>("n_max", 4);
        IterationSweepResult res = iteration_sweep(circuit, marked, n_max, noise);
        ctx.emit("grover_iterations.csv", res.csv());
        njson j;
        j["marked"] = marked;
        j["n_max"] = n_max;
        j["intercept"] = res.intercept;
        j["slope"] = res.slope;
        j["per_iteration_fidelity"] = res.per_iteration_fidelity;
        ctx.emit("grover_fit.json", j.dump(2) + "\n");
        ctx.metrics["per_iteration_fidelity"] = res.per_iteration_fidelity;
    } else {
        throw std::runtime_error("unknown grover.mode '" + mode + "'");
    }
    ctx.metrics["n_iterations"] = n_iter;
}

void cmd_rb(Section& s, RunContext& ctx) {
    const int d = s.require<int>("d");
    RBConfig cfg;
    cfg.lengths = s.require<std::vector<int>>("lengths");
    cfg.n_sequences = s.get<int>("n_sequences", 8);
    cfg.include_inverse = s.get<bool>("include_inverse", true);
    cfg.seed = ctx.seed;

    NoiseSettings ns = parse_noise(s, d, s.object("noise"));
    double omega = s.get<double>("omega_khz", ns.present ? ns.omega : kDefaultOmega);
    ToneSet tones = ToneSet::ideal(d, omega);
    PulseTiming timing = PulseTiming::from_theta(omega, ns.dt);

    RBResult res = rb_run(cfg, d, tones, ns.model, timing);
    ctx.emit("rb.csv", res.csv());
    njson j;
    j["amplitude"] = res.amplitude;
    j["offset"] = res.offset;
    j["p"] = res.p;
    j["per_pulse_fidelity"] = res.per_pulse_fidelity;
    j["n_bar"] = res.n_bar;
    ctx.emit("rb_fit.json", j.dump(2) + "\n");
    ctx.metrics["p"] = res.p;
    ctx.metrics["per_pulse_fidelity"] = res.per_pulse_fidelity;
}

void cmd_ramsey(Section& s, RunContext& ctx) {
    const int d = s.require<int>("d");
    auto detunings = s.require<std::vector<double>>("detunings_khz");
    if (static_cast<int>(detunings.size()) != d - 1)
        throw std::runtime_error("ramsey.detunings_khz must have length d-1");
    auto delays = s.require<std::vector<double>>("delays_ms");

    NoiseSettings ns = parse_noise(s, d, s.object("noise"));
    ToneSet tones = ToneSet::ideal(d, 1.0);
    tones.detunings = to_real_vector(detunings);

    RamseyResult res = ramsey(d, tones, ns.model, delays);
    ctx.emit("ramsey.csv", res.csv());
    njson j;
    j["t2_ms"] = res.t2_fit;
    j["frequency_khz"] = res.frequency_fit;
    j["amplitude"] = res.amplitude_fit;
    j["fit_ok"] = res.fit_ok;
    ctx.emit("ramsey_fit.json", j.dump(2) + "\n");
    ctx.metrics["t2_ms"] = res.t2_fit;
    ctx.metrics["fit_ok"] = res.fit_ok;
}

void cmd_calibrate(Section& s, RunContext& ctx) {
    const int d = s.require<int>("d");
    const double omega = s.get<double>("omega_khz", kDefaultOmega);
    const int n_sequences = s.get<int>("n_sequences", 4);
    const int length = s.get<int>("length", 10);
    const double perturbation = s.get<double>("perturbation", 0.10);

    CalibrationProblem prob =
        CalibrationProblem::make(d, omega, n_sequences, length, perturbation, ctx.seed);
    NelderMeadOptions opts;
    opts.max_iters = s.get<int>("max_iters", 5000);
    CalibrationResult res = nelder_mead_calibrate(prob, opts);
    ctx.emit("calibration.json", res.to_json());

    njson lobj = s.object("landscape");
    if (!lobj.empty()) {
        Section ls(lobj, "calibrate.landscape", {"axis_i", "axis_j", "span", "points"});
        int ai = ls.get<int>("axis_i", 0);
        int aj = ls.get<int>("axis_j", 1);
        double span = ls.get<double>("span", 0.1);
        int points = ls.get<int>("points", 21);
        s.note("landscape", ls.effective());
        RealVector gi(points), gj(points);
        for (int k = 0; k < points; ++k) {
            double f = points == 1 ? 0.0 : -span + 2.0 * span * k / (points - 1);
            gi[k] = prob.true_amplitudes[ai] * (1.0 + f);
            gj[k] = prob.true_amplitudes[aj] * (1.0 + f);
        }
        LandscapeResult land = calibration_landscape(prob, ai, aj, gi, gj);
        ctx.emit("landscape.csv", land.csv());
    }

    ctx.metrics["rel_error"] = res.rel_error;
    ctx.metrics["iterations"] = res.iterations;
    ctx.metrics["converged"] = res.converged;
}

njson load_config(const std::string& path) {
    if (path.empty()) return njson::object();
    njson j;
    try {
        j = njson::parse(read_file(path));
    } catch (const njson::exception& e) {
        throw std::runtime_error(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config root must be a JSON object");
    static const std::set<std::string> known = {"levels", "synth",  "verify-tables", "grover",
                                                "rb",     "ramsey", "calibrate"};
    for (const auto& item : j.items())
        if (!known.count(item.key()))
            throw std::runtime_error("unknown config section '" + item.key() + "'");
    return j;
}

const std::set<std::string>& allowed_keys(const std::string& cmd) {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"levels",
         {"I", "J", "A_mhz", "B_mhz", "gJ", "gI", "bz_gauss", "d", "pols", "weights",
          "max_assignments", "omega_khz", "seed"}},
        {"synth",
         {"d", "target", "m", "kind", "n_pulses", "restarts", "max_iters", "step", "grad_step",
          "tol", "seed"}},
        {"verify-tables", {"fixtures", "seed"}},
        {"grover",
         {"d", "source", "table", "n_iterations", "mode", "marked", "n_max", "prep_slots",
          "oracle_slots", "reflection_slots", "noise", "seed"}},
        {"rb",
         {"d", "lengths", "n_sequences", "include_inverse", "omega_khz", "noise", "seed"}},
        {"ramsey", {"d", "detunings_khz", "delays_ms", "noise", "seed"}},
        {"calibrate",
         {"d", "omega_khz", "n_sequences", "length", "perturbation", "max_iters", "landscape",
          "seed"}},
    };
    return keys.at(cmd);
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"single-qudit multi-tone control simulator and optimizer"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed_flag = 0;
    int threads = 1;
    app.add_option("--config", config_path, "JSON config file");
    auto* seed_opt = app.add_option("--seed", seed_flag, "RNG seed (overrides config)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads for independent sub-tasks");

    for (const char* name : {"levels", "synth", "verify-tables", "grover", "rb", "ramsey",
                             "calibrate"})
        app.add_subcommand(name);

    std::vector<const char*> argv;
    argv.push_back("qdsim");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        njson config = load_config(config_path);
        Section section(config.contains(cmd) ? config.at(cmd) : njson::object(), cmd,
                        allowed_keys(cmd));

        RunContext ctx;
        ctx.out = out_dir;
        ctx.threads = threads;
        ctx.seed = section.get<std::uint64_t>("seed", 12345);
        if (seed_opt->count() > 0) {
            ctx.seed = seed_flag;
            section.note("seed", seed_flag);
        }
        fs::create_directories(ctx.out);

        if (cmd == "levels")
            cmd_levels(section, ctx);
        else if (cmd == "synth")
            cmd_synth(section, ctx);
        else if (cmd == "verify-tables")
            cmd_verify_tables(section, ctx);
        else if (cmd == "grover")
            cmd_grover(section, ctx);
        else if (cmd == "rb")
            cmd_rb(section, ctx);
        else if (cmd == "ramsey")
            cmd_ramsey(section, ctx);
        else if (cmd == "calibrate")
            cmd_calibrate(section, ctx);

        write_record(cmd, ctx, section.effective());
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << cmd << ": " << e.what() << "\n";
        return 1;
    }
}

}  // namespace qdsim
