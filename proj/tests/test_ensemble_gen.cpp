#include <gtest/gtest.h>

#include "spinlind/ensemble_gen.hpp"
#include "spinlind/synth.hpp"
#include "support.hpp"

using namespace spinlind;

namespace {

NormalMode unit_mode(int index, Eigen::Index n, double freq = 1000.0) {
    NormalMode m;
    m.index = index;
    m.frequency_cm1 = freq;
    m.reduced_mass_amu = 1.0;
    m.displacement = Displacement::Zero(n, 3);
    m.displacement(index % n, index % 3) = 1.0;
    return m;
}

SpinSystem small_system() {
    return synth::proton_system("small", {{3, 0, 1}, {4, 1, 0}, {0, 5, 2}});
}

} // namespace

TEST(ZeroPoint, FrozenAmplitude) {
    // 1000 cm^-1, 1 amu
    EXPECT_NEAR(zero_point_amplitude(unit_mode(0, 3)), 0.1298369330402994, 1e-12);
}

TEST(ZeroPoint, ScalesAsInverseRootFrequency) {
    const double a = zero_point_amplitude(unit_mode(0, 3, 1000.0));
    const double b = zero_point_amplitude(unit_mode(0, 3, 4000.0));
    EXPECT_NEAR(a / b, 2.0, 1e-12);
}

TEST(Generate, TwoGeometriesPerModeInOrder) {
    const auto s = small_system();
    const std::vector<NormalMode> modes{unit_mode(0, 3), unit_mode(1, 3), unit_mode(2, 3)};
    const auto g = generate_ensemble(s, modes, FixedAmplitude{0.05});
    ASSERT_EQ(g.ensemble.geometries.size(), 6u);
    EXPECT_EQ(g.ensemble.geometries[0].name, "mode0+");
    EXPECT_EQ(g.ensemble.geometries[1].name, "mode0-");
    EXPECT_EQ(g.ensemble.geometries[5].name, "mode2-");
    const Vec3 plus = g.ensemble.geometries[2].nuclei[1].position;
    const Vec3 minus = g.ensemble.geometries[3].nuclei[1].position;
    EXPECT_NEAR((plus - s.nuclei[1].position).y(), 0.05, 1e-15);
    EXPECT_EQ(plus + minus, 2.0 * s.nuclei[1].position);
    EXPECT_TRUE(g.warnings.empty()); // 3N-6 = 3
    // without a provider the hyperfine values are copied
    EXPECT_EQ(g.ensemble.geometries[0].nuclei[0].hyperfine, s.nuclei[0].hyperfine);
}

TEST(Generate, ProviderRecomputesHyperfine) {
    const auto s = small_system();
    const std::vector<NormalMode> modes{unit_mode(0, 3)};
    const auto g = generate_ensemble(s, modes, FixedAmplitude{0.2}, point_dipole_provider());
    const auto& moved = g.ensemble.geometries[0];
    const double expect = units::mhz_to_rad_s(
        point_dipole_hyperfine(moved.nuclei[0], Vec3::Zero(), moved.electron_g, moved.field_direction));
    EXPECT_DOUBLE_EQ(moved.nuclei[0].hyperfine, expect);
    EXPECT_NE(moved.nuclei[0].hyperfine, s.nuclei[0].hyperfine);
}

TEST(Generate, WarnsOnUnexpectedModeCount) {
    const auto g = generate_ensemble(small_system(), std::vector<NormalMode>{unit_mode(0, 3)}, ZeroPointAmplitude{});
    ASSERT_EQ(g.warnings.size(), 1u);
    EXPECT_NE(g.warnings[0].find("3N-6"), std::string::npos);
}

TEST(Generate, Rejections) {
    const auto s = small_system();
    EXPECT_THROW(generate_ensemble(s, std::vector<NormalMode>{}, ZeroPointAmplitude{}), ValidationError);
    EXPECT_THROW(generate_ensemble(s, std::vector<NormalMode>{unit_mode(0, 4)}, ZeroPointAmplitude{}),
                 ValidationError);
    auto m = unit_mode(0, 3);
    m.displacement *= 2.0;
    EXPECT_THROW(generate_ensemble(s, std::vector<NormalMode>{m}, ZeroPointAmplitude{}), ValidationError);
    m = unit_mode(0, 3, -300.0);
    EXPECT_THROW(generate_ensemble(s, std::vector<NormalMode>{m}, ZeroPointAmplitude{}), ValidationError);
}

TEST(Modes, JsonRoundtrip) {
    const auto s = small_system();
    const auto modes = synth::synthetic_modes(s);
    ASSERT_EQ(modes.size(), 3u);
    const auto back = modes_from_json(modes_to_json(modes));
    ASSERT_EQ(back.size(), modes.size());
    for (std::size_t k = 0; k < modes.size(); ++k) {
        EXPECT_EQ(back[k].displacement, modes[k].displacement);
        EXPECT_EQ(back[k].frequency_cm1, modes[k].frequency_cm1);
    }
}

TEST(Synthetic, ModesAreInternalAndOrthonormal) {
    const auto s = synth::rung_system("r", {5.0, 1.0});
    const auto modes = synth::synthetic_modes(s);
    ASSERT_EQ(modes.size(), 3 * s.size() - 6);
    for (std::size_t a = 0; a < modes.size(); ++a) {
        // no net translation
        EXPECT_LT(modes[a].displacement.colwise().sum().norm(), 1e-12);
        for (std::size_t b = 0; b < modes.size(); ++b) {
            const double dot = (modes[a].displacement.array() * modes[b].displacement.array()).sum();
            EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-12);
        }
    }
}

TEST(Synthetic, LadderDistancesIncrease) {
    const auto l = synth::ladder(3);
    ASSERT_EQ(l.size(), 3u);
    double prev = 0.0;
    for (const auto& e : l) {
        double nearest = 1e9;
        for (const auto& n : e.equilibrium.nuclei) nearest = std::min(nearest, n.position.norm());
        EXPECT_GT(nearest, prev);
        prev = nearest;
        EXPECT_EQ(e.geometries.size(), 2 * (3 * e.equilibrium.size() - 6));
    }
    EXPECT_EQ(l[0].equilibrium.name, "ladder_1");
}

TEST(Synthetic, BarrierDemoHasBlockedPair) {
    const auto e = synth::barrier_demo();
    ASSERT_EQ(e.equilibrium.size(), 4u);
    const auto t = pair_table(e.equilibrium, DeltaMode::ab_initio);
    bool blocked = false;
    for (const auto& p : t.pairs) blocked = blocked || p.delta > 10.0 * p.kappa;
    EXPECT_TRUE(blocked);
}

TEST(Synthetic, DeterministicForSeed) {
    const auto a = synth::cluster(6, 99), b = synth::cluster(6, 99);
    EXPECT_EQ(ensemble_to_json(a).dump(), ensemble_to_json(b).dump());
    EXPECT_NE(ensemble_to_json(a).dump(), ensemble_to_json(synth::cluster(6, 100)).dump());
}
