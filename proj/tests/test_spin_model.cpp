#include <gtest/gtest.h>

#include <fstream>

#include "spinlind/constants.hpp"
#include "spinlind/spin_model.hpp"
#include "spinlind/synth.hpp"
#include "support.hpp"

using namespace spinlind;
using spinlind::testing::protons;

namespace {

nlohmann::json three_proton_json() {
    return nlohmann::json::parse(R"({
        "name": "tri",
        "field": {"magnitude_T": 0.35, "direction": [0, 0, 1]},
        "electron": {"g": 2.0, "position_angstrom": [0, 0, 0]},
        "nuclei": [
            {"id": 1, "isotope": "1H", "spin": 0.5, "position_angstrom": [3, 0, 1], "hyperfine_MHz": 0.8},
            {"id": 0, "isotope": "1H", "spin": 0.5, "position_angstrom": [4, 1, 0], "hyperfine_MHz": -1.25},
            {"id": 2, "isotope": "51V", "spin": 0.5, "position_angstrom": [0, 5, 2], "hyperfine_MHz": 0.0}
        ]
    })");
}

} // namespace

TEST(Constants, IsotopeTable) {
    EXPECT_DOUBLE_EQ(*PhysicalConstants::gyromagnetic_ratio("1H"), 2.6752218744e8);
    EXPECT_FALSE(PhysicalConstants::gyromagnetic_ratio("2H").has_value());
    EXPECT_NEAR(units::mhz_to_rad_s(1.0), 6283185.307179586, 1e-6);
    EXPECT_DOUBLE_EQ(units::rad_s_to_mhz(units::mhz_to_rad_s(3.7)), 3.7);
}

TEST(SpinModel, ParsesAndSortsById) {
    const auto s = system_from_json(three_proton_json());
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.nuclei[0].id, 0);
    EXPECT_DOUBLE_EQ(s.nuclei[0].position.x(), 4.0);
    EXPECT_NEAR(s.nuclei[0].hyperfine, -1.25 * 2 * M_PI * 1e6, 1e-6);
    EXPECT_DOUBLE_EQ(s.nuclei[2].gamma, 7.0455e7);
    EXPECT_EQ(s.pair_count(), 3u);
    ASSERT_TRUE(s.electron_position.has_value());
}

TEST(SpinModel, RejectsNonUnitField) {
    auto j = three_proton_json();
    j["field"]["direction"] = {0, 0, 2};
    EXPECT_THROW(system_from_json(j), ValidationError);
}

TEST(SpinModel, RejectsDuplicateIds) {
    auto j = three_proton_json();
    j["nuclei"][1]["id"] = 1;
    EXPECT_THROW(system_from_json(j), ValidationError);
}

TEST(SpinModel, RejectsGapInIds) {
    auto j = three_proton_json();
    j["nuclei"][2]["id"] = 5;
    EXPECT_THROW(system_from_json(j), ValidationError);
}

TEST(SpinModel, RejectsSpinOtherThanHalf) {
    auto j = three_proton_json();
    j["nuclei"][0]["spin"] = 1.0;
    EXPECT_THROW(system_from_json(j), ValidationError);
}

TEST(SpinModel, UnknownIsotopeNeedsGamma) {
    auto j = three_proton_json();
    j["nuclei"][0]["isotope"] = "13C";
    EXPECT_THROW(system_from_json(j), ValidationError);
    j["nuclei"][0]["gamma_rad_per_s_T"] = 6.728284e7;
    EXPECT_NO_THROW(system_from_json(j));
}

TEST(SpinModel, MissingKeyIsParseError) {
    auto j = three_proton_json();
    j["nuclei"][0].erase("hyperfine_MHz");
    EXPECT_THROW(system_from_json(j), ParseError);
}

TEST(SpinModel, SystemJsonRoundtrip) {
    const auto s = system_from_json(three_proton_json());
    const auto back = system_from_json(system_to_json(s));
    ASSERT_EQ(back.size(), s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        EXPECT_EQ(back.nuclei[k].isotope, s.nuclei[k].isotope);
        EXPECT_EQ(back.nuclei[k].position, s.nuclei[k].position);
        EXPECT_NEAR(back.nuclei[k].hyperfine, s.nuclei[k].hyperfine, 1e-9);
    }
}

TEST(SpinModel, EnsembleFileRoundtrip) {
    const auto dir = spinlind::testing::scratch_dir("ensemble_roundtrip");
    const auto e = synth::barrier_demo();
    save_ensemble(dir / "e.json", e);
    const auto back = load_ensemble(dir / "e.json");
    ASSERT_EQ(back.geometries.size(), e.geometries.size());
    EXPECT_EQ(back.geometries.front().name, "mode0+");
    for (std::size_t g = 0; g < e.geometries.size(); ++g) {
        for (std::size_t k = 0; k < e.equilibrium.size(); ++k) {
            EXPECT_EQ(back.geometries[g].nuclei[k].position, e.geometries[g].nuclei[k].position);
            EXPECT_NEAR(back.geometries[g].nuclei[k].hyperfine, e.geometries[g].nuclei[k].hyperfine,
                        1e-9 * std::abs(e.geometries[g].nuclei[k].hyperfine) + 1e-9);
        }
    }
}

TEST(SpinModel, EnsembleGeometryCountMismatch) {
    const auto e = synth::barrier_demo();
    auto j = ensemble_to_json(e);
    j["geometries"][0]["hyperfine_MHz"].erase(0);
    EXPECT_THROW(ensemble_from_json(j), ValidationError);
}

TEST(SpinModel, EnsembleNeedsGeometries) {
    EnsembleInput e;
    e.equilibrium = protons({{0, 0, 0}, {2, 0, 0}});
    EXPECT_THROW(validate(e), ValidationError);
}

TEST(SpinModel, MissingFile) {
    EXPECT_THROW(load_system("/nonexistent/spinlind.json"), ValidationError);
}

TEST(SpinModel, MalformedJsonIsParseError) {
    const auto dir = spinlind::testing::scratch_dir("malformed");
    std::ofstream(dir / "bad.json") << "{ not json";
    EXPECT_THROW(load_system(dir / "bad.json"), ParseError);
}
