#include <cmath>
#include <set>

#include "doctest.h"
#include "qdsim/levels.hpp"
#include "qdsim/types.hpp"

using namespace qdsim;

namespace {

HyperfineConstants big_manifold() {
    HyperfineConstants hc;
    hc.I = 1.5;
    hc.J = 2.5;
    hc.A = -16.0;
    hc.B = 40.0;
    hc.gJ = 1.2;
    hc.gI = -0.0002;
    return hc;
}

}  // namespace

TEST_CASE("HyperfineConstants: dimension and validation") {
    HyperfineConstants hc = big_manifold();
    CHECK(hc.dim() == 24);
    CHECK_NOTHROW(hc.validate());

    HyperfineConstants bad = hc;
    bad.I = 0.3;  // not half-integer
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = hc;
    bad.J = -0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("build_hamiltonian: quadrupole term requires I >= 1 and J >= 1") {
    HyperfineConstants hc;
    hc.I = 0.5;
    hc.J = 0.5;
    hc.A = 1.0;
    hc.B = 2.0;  // undefined for I = 1/2
    hc.gJ = 2.0;
    FieldConfig fc;
    fc.Bz = 1.0;
    CHECK_THROWS_AS(build_hamiltonian(hc, fc), std::invalid_argument);

    hc.B = 0.0;
    CHECK_NOTHROW(build_hamiltonian(hc, fc));

    FieldConfig neg;
    neg.Bz = -1.0;
    CHECK_THROWS_AS(build_hamiltonian(hc, neg), std::invalid_argument);
}

TEST_CASE("diagonalize_levels: hyperfine-only I=J=1/2 gives the F=0/F=1 split") {
    HyperfineConstants hc;
    hc.I = 0.5;
    hc.J = 0.5;
    hc.A = 10.0;
    hc.gJ = 2.0;
    FieldConfig fc;
    fc.Bz = 0.0;

    const auto levels = diagonalize_levels(hc, fc);
    REQUIRE(levels.size() == 4);
    // A I.J has eigenvalues A/4 (F=1, triply degenerate) and -3A/4 (F=0).
    CHECK(levels[0].energy == doctest::Approx(-7.5).epsilon(1e-12));
    for (int k = 1; k < 4; ++k) CHECK(levels[k].energy == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(levels[0].mF == doctest::Approx(0.0));
    // The triplet covers mF = -1, 0, +1. Its internal order is not pinned down:
    // the mF = 0 member comes from a different diagonalization block and its
    // energy can differ from the exact 2.5 by a few ulps, perturbing the
    // energy-then-mF sort.
    std::multiset<int> triplet_mf;
    for (int k = 1; k < 4; ++k) triplet_mf.insert(int(std::lround(levels[k].mF)));
    CHECK(triplet_mf == std::multiset<int>({-1, 0, 1}));
}

TEST_CASE("diagonalize_levels: pure Zeeman splitting is linear in mJ") {
    HyperfineConstants hc;
    hc.I = 0.0;
    hc.J = 0.5;
    hc.A = 0.0;
    hc.gJ = 2.0023;
    FieldConfig fc;
    fc.Bz = 5.0;

    const auto levels = diagonalize_levels(hc, fc);
    REQUIRE(levels.size() == 2);
    const double split = hc.gJ * kMuBMHzPerGauss * fc.Bz;
    CHECK(levels[1].energy - levels[0].energy == doctest::Approx(split).epsilon(1e-12));
    CHECK(levels[0].index == 0);
    CHECK(levels[1].index == 1);
}

TEST_CASE("diagonalize_levels: every eigenvector lives on a single mF") {
    const HyperfineConstants hc = big_manifold();
    FieldConfig fc;
    fc.Bz = 4.0;
    const auto levels = diagonalize_levels(hc, fc);
    REQUIRE(levels.size() == 24);

    const int nJ = int(2 * hc.J + 1.5);
    std::set<int> seen;
    for (const auto& lv : levels) {
        seen.insert(lv.index);
        for (int p = 0; p < lv.composition.size(); ++p) {
            if (std::abs(lv.composition[p]) < 1e-10) continue;
            const double mI = -hc.I + p / nJ;
            const double mJ = -hc.J + p % nJ;
            CHECK(mI + mJ == doctest::Approx(lv.mF).epsilon(1e-12));
        }
        CHECK(std::abs(lv.composition.norm() - 1.0) < 1e-10);
    }
    CHECK(seen.size() == 24);  // indices are a permutation of 0..23
}

TEST_CASE("transition_table: two-level Zeeman case has the textbook line") {
    HyperfineConstants hc;
    hc.I = 0.0;
    hc.J = 0.5;
    hc.gJ = 2.0;
    FieldConfig fc;
    fc.Bz = 5.0;

    const auto table = transition_table(hc, fc);
    REQUIRE(table.size() == 1);
    const Transition& t = table[0];
    CHECK(t.lower == 0);
    CHECK(t.upper == 1);
    CHECK(t.frequency == doctest::Approx(hc.gJ * kMuBMHzPerGauss * fc.Bz).epsilon(1e-9));
    CHECK(t.strength == doctest::Approx(0.5).epsilon(1e-9));  // |<mJ=+1/2|Jx|mJ=-1/2>|
    // d(freq)/dBz = gJ muB, via the central difference
    CHECK(t.sensitivity == doctest::Approx(hc.gJ * kMuBMHzPerGauss).epsilon(1e-6));
}

TEST_CASE("transition_table: only |dmF| <= 1 pairs appear, polarization subset honored") {
    const HyperfineConstants hc = big_manifold();
    FieldConfig fc;
    fc.Bz = 4.0;
    const auto levels = diagonalize_levels(hc, fc);
    const auto table = transition_table(hc, fc);
    CHECK(!table.empty());
    for (const auto& t : table) {
        const double dmF = std::abs(levels[t.upper].mF - levels[t.lower].mF);
        CHECK(dmF <= 1.0 + 1e-9);
        CHECK(t.frequency >= -1e-12);  // energy-ordered pairs
        CHECK(t.strength >= 0.0);
    }

    // z-polarization only drives dmF = 0 (Jz is diagonal in mJ)
    const auto ztable = transition_table(hc, fc, {'z'});
    for (const auto& t : ztable) {
        if (t.strength <= 1e-12) continue;
        CHECK(std::abs(levels[t.upper].mF - levels[t.lower].mF) == doctest::Approx(0.0));
    }

    CHECK_THROWS_AS(transition_table(hc, fc, {'y'}), std::invalid_argument);
}

TEST_CASE("transition_table_csv: header and row count") {
    HyperfineConstants hc;
    hc.I = 0.0;
    hc.J = 0.5;
    hc.gJ = 2.0;
    FieldConfig fc;
    fc.Bz = 5.0;
    const auto table = transition_table(hc, fc);
    const std::string csv = transition_table_csv(table);
    CHECK(csv.rfind("lower,upper,freq_mhz,strength,sensitivity_mhz_per_g\n", 0) == 0);
    size_t lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == table.size() + 1);
}

TEST_CASE("score_qudit_candidates: synthetic chain graph is scored by the documented formula") {
    std::vector<Transition> table;
    Transition t01;
    t01.lower = 0;
    t01.upper = 1;
    t01.frequency = 10.0;
    t01.strength = 1.0;
    t01.sensitivity = 0.2;
    Transition t12;
    t12.lower = 1;
    t12.upper = 2;
    t12.frequency = 11.5;
    t12.strength = 0.8;
    t12.sensitivity = -0.3;
    table = {t01, t12};

    const auto ranked = score_qudit_candidates(table, 3);
    REQUIRE(ranked.size() == 1);  // undirected chain reported once
    const QuditAssignment& qa = ranked[0];
    CHECK(qa.d == 3);
    CHECK(qa.state_indices == std::vector<int>{0, 1, 2});
    REQUIRE(qa.tone_frequencies.size() == 2);
    CHECK(qa.tone_frequencies[0] == doctest::Approx(10.0));
    CHECK(qa.tone_frequencies[1] == doctest::Approx(11.5));
    // score = min strength - max |sensitivity| + min pairwise separation
    CHECK(qa.score == doctest::Approx(0.8 - 0.3 + 1.5).epsilon(1e-12));

    // weights scale each term
    ScoringWeights w;
    w.strength = 2.0;
    w.sensitivity = 10.0;
    w.separation = 0.0;
    const auto reweighted = score_qudit_candidates(table, 3, w);
    REQUIRE(reweighted.size() == 1);
    CHECK(reweighted[0].score == doctest::Approx(2.0 * 0.8 - 10.0 * 0.3).epsilon(1e-12));

    // not enough connected levels for d=4
    CHECK(score_qudit_candidates(table, 4).empty());
    CHECK_THROWS_AS(score_qudit_candidates({}, 3), std::invalid_argument);
}

TEST_CASE("score_qudit_candidates: ranking is descending with lexicographic tie-break") {
    // star-free graph with two disjoint chains of different quality
    std::vector<Transition> table(2);
    table[0].lower = 0;
    table[0].upper = 1;
    table[0].frequency = 5.0;
    table[0].strength = 0.9;
    table[0].sensitivity = 0.0;
    table[1].lower = 2;
    table[1].upper = 3;
    table[1].frequency = 7.0;
    table[1].strength = 0.4;
    table[1].sensitivity = 0.0;

    const auto ranked = score_qudit_candidates(table, 2);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].state_indices == std::vector<int>{0, 1});
    CHECK(ranked[1].state_indices == std::vector<int>{2, 3});
    CHECK(ranked[0].score > ranked[1].score);
    // single-link chains have no pairwise separation term
    CHECK(ranked[0].score == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("off_resonant_error: single spectator matches the hand formula") {
    // chain 0-1 driven at f = 10 MHz; spectator 1-2 at 10.004 MHz, weaker dipole
    std::vector<Transition> table(2);
    table[0].lower = 0;
    table[0].upper = 1;
    table[0].frequency = 10.0;
    table[0].strength = 0.5;
    table[0].sensitivity = 0.0;
    table[1].lower = 1;
    table[1].upper = 2;
    table[1].frequency = 10.004;
    table[1].strength = 0.25;
    table[1].sensitivity = 0.0;

    const auto ranked = score_qudit_candidates(table, 2);
    REQUIRE(!ranked.empty());
    const QuditAssignment& qa = ranked[0];  // chain [0,1]
    REQUIRE(qa.state_indices == std::vector<int>{0, 1});

    const double omega = 2.0;  // kHz drive scale; d=2 has a single unit-weight tone
    // Omega_spectator = omega * (0.25 / 0.5), detuning 0.004 MHz = 4 kHz
    const double expect = std::pow((omega * 0.5) / 4.0, 2);
    CHECK(off_resonant_error(qa, table, omega) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("off_resonant_error: degenerate spectator throws") {
    std::vector<Transition> table(2);
    table[0].lower = 0;
    table[0].upper = 1;
    table[0].frequency = 10.0;
    table[0].strength = 0.5;
    table[1].lower = 1;
    table[1].upper = 2;
    table[1].frequency = 10.0;  // exactly on the drive tone
    table[1].strength = 0.25;

    const auto ranked = score_qudit_candidates(table, 2);
    REQUIRE(!ranked.empty());
    CHECK_THROWS_AS(off_resonant_error(ranked[0], table, 1.0), std::runtime_error);
}

TEST_CASE("levels end-to-end: 24-level manifold yields connected d=5 chains") {
    const HyperfineConstants hc = big_manifold();
    FieldConfig fc;
    fc.Bz = 4.0;
    const auto table = transition_table(hc, fc);
    const auto ranked = score_qudit_candidates(table, 5);
    REQUIRE(!ranked.empty());
    for (size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].score >= ranked[i].score);

    const QuditAssignment& top = ranked[0];
    CHECK(top.state_indices.size() == 5);
    CHECK(top.tone_frequencies.size() == 4);
    CHECK(top.coupling_strengths.size() == 4);
    for (double s : top.coupling_strengths) CHECK(s > 0.0);

    const double err = off_resonant_error(top, table, 2.0);
    CHECK(err > 0.0);
    CHECK(std::isfinite(err));
    // quadratic in the drive scale by construction
    CHECK(off_resonant_error(top, table, 4.0) == doctest::Approx(4.0 * err).epsilon(1e-9));
}
