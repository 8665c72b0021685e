#include <doctest.h>

#include <poledyn/map_io.hpp>
#include <poledyn/orbit.hpp>
#include <poledyn/report_io.hpp>

#include <sstream>

using namespace poledyn;

TEST_CASE("map json accepts the canonical files") {
    MapSpec<Rational> g = map_from_json(R"({"alphas": ["1"], "betas": ["0"]})");
    CHECK(g.m() == 1);
    CHECK(g.alphas[0] == Rational(1));
    CHECK(g.betas[0] == Rational(0));

    MapSpec<Rational> tp =
        map_from_json(R"({"alphas": ["0.5", "2.25"], "betas": ["-1.5", "4e-1"]})");
    CHECK(tp.m() == 2);
    CHECK(tp.alphas[0] == Rational(1, 2));
    CHECK(tp.betas[1] == Rational(2, 5));
    CHECK(tp.alpha_sum == Rational(11, 4));
}

TEST_CASE("map json rejects invalid content with diagnostics") {
    // negative alpha: the x + 1/x family is excluded
    CHECK_THROWS_WITH_AS(map_from_json(R"({"alphas": ["-1"], "betas": ["0"]})"),
                         doctest::Contains("alphas[0] must be > 0"), InvariantViolationError);
    // duplicate poles
    CHECK_THROWS_WITH_AS(map_from_json(R"({"alphas": ["1", "1"], "betas": ["1", "1"]})"),
                         doctest::Contains("sort them ascending"), InvariantViolationError);
    // unsorted poles get the same sort hint
    CHECK_THROWS_WITH_AS(map_from_json(R"({"alphas": ["1", "1"], "betas": ["2", "-2"]})"),
                         doctest::Contains("sort them ascending"), InvariantViolationError);
    // JSON numbers are not accepted: precision must not be capped by a double parse
    CHECK_THROWS_WITH_AS(map_from_json(R"({"alphas": [1], "betas": [0]})"),
                         doctest::Contains("decimal strings"), InvariantViolationError);
    CHECK_THROWS_AS(map_from_json("not json at all"), InvariantViolationError);
    CHECK_THROWS_AS(map_from_json(R"({"alphas": ["1"]})"), InvariantViolationError);
    CHECK_THROWS_AS(load_map_file("/nonexistent/poledyn-map.json"), InvariantViolationError);
}

TEST_CASE("map json round trip") {
    MapSpec<Rational> tp = MapSpec<Rational>::create({Rational(1, 2), Rational(9, 4)},
                                                     {Rational(-3, 2), Rational(2, 5)});
    MapSpec<Rational> back = map_from_json(map_to_json(tp));
    CHECK(back.alphas[0] == tp.alphas[0]);
    CHECK(back.alphas[1] == tp.alphas[1]);
    CHECK(back.betas[0] == tp.betas[0]);
    CHECK(back.betas[1] == tp.betas[1]);
}

TEST_CASE("orbit csv golden rows") {
    MapSpec<Rational> g = map_from_json(R"({"alphas": ["1"], "betas": ["0"]})");
    PrecisionPolicy p;
    p.mode = NumberMode::exact_rational;
    Orbit<Rational> orbit = iterate<Rational>(g, Rational(2), 3, p);
    std::ostringstream csv;
    write_orbit_csv(csv, orbit);
    CHECK(csv.str() == "step,value\n0,2\n1,3/2\n2,5/6\n3,-11/30\n");

    PrecisionPolicy pb;
    pb.bits = 128;
    Orbit<BigFloat> ob = iterate<BigFloat>(g, Rational(2), 1, pb);
    std::ostringstream csv2;
    write_orbit_csv(csv2, ob);
    CHECK(csv2.str() == "step,value\n0,2\n1,1.5\n");
}

TEST_CASE("orbit and hit summaries carry status and verification") {
    MapSpec<Rational> g = map_from_json(R"({"alphas": ["1"], "betas": ["0"]})");
    PrecisionPolicy p;
    p.mode = NumberMode::exact_rational;
    Orbit<Rational> pole_orbit = iterate<Rational>(g, Rational(1), 2, p);
    nlohmann::json j = orbit_summary_json(pole_orbit);
    CHECK(j["status"] == "pole_hit");
    CHECK(j["pole_step"] == 1);
    CHECK(j["x0"] == "1");

    HitRecord<Rational> rec = first_hit<Rational>(g, Rational(2), Rational(1, 2), 10, p);
    nlohmann::json h = hit_record_json(rec);
    CHECK(h["outcome"] == "hit");
    CHECK(h["n_hit"] == 3);
    CHECK(h["distance"] == "11/30");

    HitRecord<Rational> none = first_hit<Rational>(g, Rational(2), Rational(1, 100), 1, p);
    nlohmann::json hn = hit_record_json(none);
    CHECK(hn["outcome"] == "none");
    CHECK(hn["n_hit"].is_null());
    CHECK(hn["distance"].is_null());
}

TEST_CASE("interval csv covers all levels") {
    MapSpec<Rational> g = map_from_json(R"({"alphas": ["1"], "betas": ["0"]})");
    MapSpec<BigFloat> gb = materialize<BigFloat>(g, 128);
    PrecisionPolicy p;
    p.bits = 128;
    auto levels = pullback(gb, BigFloat::parse("0.1", 128), 2, p);
    std::string csv = intervals_csv(levels);
    CHECK(csv.rfind("level,index,a,b\n", 0) == 0);
    // 1 + 2 + 4 rows plus header
    long lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 8);
}
