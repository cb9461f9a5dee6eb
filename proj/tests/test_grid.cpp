#include <doctest.h>

#include <set>

#include "nwp/error.hpp"
#include "nwp/grid.hpp"
#include "nwp/synthetic.hpp"
#include "support.hpp"

using namespace nwp;

TEST_SUITE("grid") {

TEST_CASE("channel index examples") {
    CHECK(state_channel_index(Variable::MSLP, PressureLevel::surface()) == ChannelIndex{Block::Surface, 0});
    CHECK(state_channel_index(Variable::Q, {1000}) == ChannelIndex{Block::Upper, 13});
    CHECK(state_channel_index(Variable::V, {50}) == ChannelIndex{Block::Upper, 64});
    CHECK(state_channel_index(Variable::T2, PressureLevel::surface()).flat() == 3);
    CHECK(state_channel_index(Variable::Z, {1000}).flat() == 4);
    CHECK(state_channel_index(Variable::V, {50}).flat() == 68);
}

TEST_CASE("channel index rejects illegal pairs") {
    CHECK_THROWS_AS(state_channel_index(Variable::T2, {500}), InvalidChannelError);
    CHECK_THROWS_AS(state_channel_index(Variable::Z, PressureLevel::surface()), InvalidChannelError);
    CHECK_THROWS_AS(state_channel_index(Variable::T, {550}), InvalidChannelError);
    CHECK_THROWS_AS(channel_at(69), IndexError);
}

TEST_CASE("channel index is a bijection over all legal pairs") {
    // Enumerate every (variable, level) candidate, including illegal ones.
    std::vector<PressureLevel> levels{PressureLevel::surface()};
    levels.insert(levels.end(), kPressureLevels.begin(), kPressureLevels.end());
    std::set<std::pair<int, std::size_t>> seen;
    std::size_t legal = 0;
    for (std::uint16_t code = 0; code < kVariableCount; ++code) {
        const auto v = *variable_from_code(code);
        for (auto lev : levels) {
            const bool ok = is_surface(v) == lev.is_surface();
            if (!ok) {
                CHECK_THROWS_AS(state_channel_index(v, lev), InvalidChannelError);
                continue;
            }
            ++legal;
            const auto idx = state_channel_index(v, lev);
            CHECK(seen.insert({static_cast<int>(idx.block), idx.index}).second);
            CHECK(idx.index < (idx.block == Block::Surface ? 4u : 65u));
            CHECK(channel_at(idx.flat()) == ChannelId{v, lev});
        }
    }
    CHECK(legal == 69);
    CHECK(seen.size() == 69);
}

TEST_CASE("canonical order: surface block then variable-major, descending pressure") {
    const auto& c = canonical_channels();
    CHECK(channel_name(c[0]) == "MSLP");
    CHECK(channel_name(c[1]) == "U10");
    CHECK(channel_name(c[2]) == "V10");
    CHECK(channel_name(c[3]) == "T2");
    CHECK(channel_name(c[4]) == "Z1000");
    CHECK(channel_name(c[16]) == "Z50");
    CHECK(channel_name(c[17]) == "Q1000");
    CHECK(channel_name(c[68]) == "V50");
    for (std::size_t k = 4; k + 1 < c.size(); ++k)
        if (c[k].variable == c[k + 1].variable) CHECK(c[k].level.hpa > c[k + 1].level.hpa);
}

TEST_CASE("channel names round-trip") {
    for (const auto& c : canonical_channels()) CHECK(parse_channel(channel_name(c)) == c);
    CHECK_THROWS_AS(parse_channel("Z501"), InvalidChannelError);
    CHECK_THROWS_AS(parse_channel("W500"), InvalidChannelError);
    CHECK_THROWS_AS(parse_channel(""), InvalidChannelError);
    CHECK_THROWS_AS(parse_channel("Z"), InvalidChannelError);
    CHECK(default_report_channels().size() == 9);
}

TEST_CASE("grid coordinates") {
    const auto g = GridSpec::canonical();
    CHECK(g.nlat == 721);
    CHECK(g.nlon == 1440);
    auto c = grid_coords(g, 0, 0);
    CHECK(c.lat == 90.0);
    CHECK(c.lon == 0.0);
    c = grid_coords(g, 720, 0);
    CHECK(c.lat == -90.0);
    c = grid_coords(g, 360, 240);
    CHECK(c.lat == 0.0);
    CHECK(c.lon == 60.0);
    CHECK_THROWS_AS(grid_coords(g, 721, 0), IndexError);
    CHECK_THROWS_AS(grid_coords(g, 0, 1440), IndexError);
}

TEST_CASE("grid coordinates invert exactly on the canonical grid") {
    const auto g = GridSpec::canonical();
    for (std::size_t i = 0; i < g.nlat; ++i)
        for (std::size_t j = 0; j < g.nlon; j += 7) {
            const auto c = grid_coords(g, i, j);
            const double fi = (g.lat_start - c.lat) / g.dlat;
            const double fj = (c.lon - g.lon_start) / g.dlon;
            REQUIRE(fi == static_cast<double>(i));
            REQUIRE(fj == static_cast<double>(j));
        }
}

TEST_CASE("grid validation") {
    CHECK_NOTHROW(GridSpec::canonical().validate());
    CHECK(GridSpec::canonical().is_global_in_lon());
    GridSpec g = GridSpec::canonical();
    g.dlat = 0.3;
    CHECK_THROWS_AS(g.validate(), InvalidGridError);
    g = GridSpec::canonical();
    g.nlon = 1441;
    CHECK_THROWS_AS(g.validate(), InvalidGridError);
    g = GridSpec::canonical();
    g.lon_start = 360.0;
    CHECK_THROWS_AS(g.validate(), InvalidGridError);
    g = GridSpec::canonical();
    g.nlat = 0;
    CHECK_THROWS_AS(g.validate(), InvalidGridError);
    GridSpec regional{10, 10, 50.0, 1.0, 100.0, 1.0};
    CHECK_NOTHROW(regional.validate());
    CHECK_FALSE(regional.is_global_in_lon());
}

TEST_CASE("times") {
    const auto t = parse_time("2023-06-06T12:34:56Z");
    CHECK(format_time(t) == "2023-06-06T12:34:56Z");
    CHECK(parse_time("2023-06-06T12:00") == parse_time("2023-06-06T12:00:00Z"));
    CHECK(format_time(TimePoint{}) == "1970-01-01T00:00:00Z");
    CHECK_THROWS_AS(parse_time("2023-13-01T00:00:00Z"), Error);
    CHECK_THROWS_AS(parse_time("yesterday"), Error);
}

TEST_CASE("fields and states") {
    const auto g = test::tiny_grid();
    CHECK_THROWS_AS(Field(channel_at(0), g, std::vector<float>(g.size() - 1)), Error);
    const auto s = test::constant_state(g, 1.0f);
    CHECK(s.is_canonical());
    CHECK(s.surface().size() == 4);
    CHECK(s.upper().size() == 65);
    CHECK(s.channel(Variable::Z, {500}).channel() == ChannelId{Variable::Z, {500}});

    SUBCASE("a field on a different grid is rejected") {
        std::vector<Field> fields(s.fields().begin(), s.fields().end());
        auto other = g;
        other.lon_start = 5.0;
        fields[7] = Field(fields[7].channel(), other, std::vector<float>(other.size()));
        CHECK_THROWS_AS(StateSet(test::t0(), "x", g, fields), GridMismatchError);
    }
    SUBCASE("value buffers are shared between copies") {
        const StateSet copy = s.with_source_label("y");
        CHECK(copy.fields()[0].values().data() == s.fields()[0].values().data());
        CHECK(bitwise_equal(copy.fields()[0], s.fields()[0]));
        CHECK_FALSE(bitwise_equal(copy, s));
        CHECK(bitwise_equal(copy.with_source_label("const"), s));
    }
    SUBCASE("68 channels cannot be required canonical") {
        std::vector<Field> fields(s.fields().begin(), s.fields().end() - 1);
        StateSet short_state(test::t0(), "x", g, fields);
        CHECK_FALSE(short_state.is_canonical());
        CHECK_THROWS_AS(short_state.require_canonical(), InvalidStateError);
    }
}

TEST_CASE("validation report") {
    const auto g = test::tiny_grid();
    SUBCASE("synthetic states are clean") {
        CHECK(validate_state(synthetic_climatology(g, test::t0())).clean());
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto r = validate_state(add_noise(synthetic_state(g, test::t0(), "s", seed), seed, 1.0));
            CHECK_MESSAGE(r.clean(), r.summary());
        }
        const auto canon = synthetic_state(GridSpec::canonical(), test::t0(), "c", 7);
        CHECK(validate_state(canon).clean());
    }
    SUBCASE("zero temperature violates the T2 range") {
        const auto clim = synthetic_climatology(g, test::t0());
        const auto s = test::map_state(clim, [](std::size_t k, std::size_t, std::size_t, float v) {
            return k == 3 ? 0.0f : v;
        });
        const auto r = validate_state(s);
        CHECK(r.count(ViolationKind::Range) == 1);
        CHECK(r.summary().find("T2") != std::string::npos);
        CHECK_FALSE(r.has_hard_errors());
        RangeLimits off;
        off.enabled = false;
        CHECK(validate_state(s, off).clean());
    }
    SUBCASE("68 channels") {
        const auto clim = synthetic_climatology(g, test::t0());
        StateSet s(test::t0(), "x", g, std::vector<Field>(clim.fields().begin(), clim.fields().end() - 1));
        const auto r = validate_state(s);
        CHECK(r.count(ViolationKind::ChannelCount) == 1);
        CHECK(r.has_hard_errors());
    }
    SUBCASE("swapped channels") {
        const auto clim = synthetic_climatology(g, test::t0());
        std::vector<Field> f(clim.fields().begin(), clim.fields().end());
        std::swap(f[5], f[6]);
        const auto r = validate_state(StateSet(test::t0(), "x", g, f));
        CHECK(r.count(ViolationKind::ChannelOrder) >= 1);
    }
    SUBCASE("non-finite values") {
        const auto s = test::map_state(synthetic_climatology(g, test::t0()),
                                       [](std::size_t k, std::size_t i, std::size_t j, float v) {
                                           return k == 20 && i == 3 && j == 4 ? std::numeric_limits<float>::infinity() : v;
                                       });
        const auto r = validate_state(s);
        CHECK(r.count(ViolationKind::NonFinite) == 1);
        CHECK(r.has_hard_errors());
    }
}

TEST_CASE("region boxes") {
    CHECK(parse_box("-10,60,60,150") == RegionBox::east_asia());
    CHECK(parse_box(" -90, 90 ,0,360") == RegionBox::global());
    CHECK_THROWS_AS(parse_box("10,0,0,10"), Error);
    CHECK_THROWS_AS(parse_box("0,10,200,100"), Error);
    CHECK_THROWS_AS(parse_box("0,10,0"), Error);
    CHECK_THROWS_AS(parse_box("-91,10,0,10"), Error);
    CHECK_THROWS_AS(parse_box("a,b,c,d"), Error);
}

}  // TEST_SUITE
