#include <doctest.h>

#include <cmath>
#include <set>

#include "bmnn/errors.hpp"
#include "bmnn/geometry.hpp"

using namespace bmnn;

namespace {

// Independent angle oracle: signed atan2 of the two rays.
double angle_oracle_deg(Vec2 apex, Vec2 tip1, Vec2 tip2) {
    Vec2 u = tip1 - apex, w = tip2 - apex;
    double a = std::atan2(cross(u, w), dot(u, w));
    return std::abs(a) * 180.0 / M_PI;
}

bool has_violation(const ConstraintReport& rep, const std::string& name) {
    for (const auto& v : rep.violations)
        if (v.constraint == name) return true;
    return false;
}

SceneSpec blunt_scene(double deg, double arm = 13.5) {
    const double rad = deg * M_PI / 180.0;
    Vec2 apex{14.0, 14.0};
    Vec2 p{apex.x + arm, apex.y};
    Vec2 q{apex.x + arm * std::cos(rad), apex.y + arm * std::sin(rad)};
    SceneSpec sc;
    sc.task = Task::BlntShrp;
    sc.label = 0;
    sc.segments = {{apex, p}, {apex, q}};
    sc.shared_vertices = {{{0, 0}, {1, 0}}};
    return sc;
}

}  // namespace

TEST_CASE("segment_intersection solves the two-parameter system") {
    Segment a{{0, 0}, {10, 0}};
    Segment b{{5, -5}, {5, 5}};
    auto r = segment_intersection(a, b);
    REQUIRE(r.has_value());
    CHECK(r->t_a == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r->t_b == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r->point.x == doctest::Approx(5.0));
    CHECK(r->point.y == doctest::Approx(0.0));
}

TEST_CASE("segment_intersection returns absent for parallel and out-of-range") {
    Segment a{{0, 0}, {10, 0}};
    CHECK_FALSE(segment_intersection(a, {{0, 1}, {10, 1}}).has_value());
    CHECK_FALSE(segment_intersection(a, {{20, -1}, {20, 1}}).has_value());
    // Collinear overlap is treated as absent.
    CHECK_FALSE(segment_intersection(a, {{3, 0}, {7, 0}}).has_value());
}

TEST_CASE("segment_intersection rejects degenerate segments") {
    Segment a{{0, 0}, {10, 0}};
    Segment degen{{1, 1}, {1, 1}};
    CHECK_THROWS_AS(segment_intersection(a, degen), InvalidInput);
    CHECK_THROWS_AS(segment_intersection(degen, a), InvalidInput);
}

TEST_CASE("segment_intersection symmetry under argument swap") {
    Rng rng(11);
    int found = 0;
    for (int i = 0; i < 2000; ++i) {
        Segment a{{rng.uniform(0, 32), rng.uniform(0, 32)}, {rng.uniform(0, 32), rng.uniform(0, 32)}};
        Segment b{{rng.uniform(0, 32), rng.uniform(0, 32)}, {rng.uniform(0, 32), rng.uniform(0, 32)}};
        if (a.length() == 0.0 || b.length() == 0.0) continue;
        auto ab = segment_intersection(a, b);
        auto ba = segment_intersection(b, a);
        CHECK(ab.has_value() == ba.has_value());
        if (!ab) continue;
        ++found;
        CHECK(ab->t_a == doctest::Approx(ba->t_b).epsilon(1e-9));
        CHECK(ab->t_b == doctest::Approx(ba->t_a).epsilon(1e-9));
        CHECK(norm(ab->point - ba->point) < 1e-9);
    }
    CHECK(found > 100);  // the sweep actually exercised intersections
}

TEST_CASE("angle_between on known configurations") {
    CHECK(angle_between({{0, 0}, {1, 0}}, {{0, 0}, {0, 1}}, 0, 0) == doctest::Approx(90.0));
    CHECK(angle_between({{0, 0}, {1, 0}}, {{0, 0}, {1, 1}}, 0, 0) == doctest::Approx(45.0));
    double nearly_flat = angle_between({{0, 0}, {1, 0}}, {{0, 0}, {-1, 0.001}}, 0, 0);
    CHECK(nearly_flat == doctest::Approx(angle_oracle_deg({0, 0}, {1, 0}, {-1, 0.001})).epsilon(1e-12));
    CHECK(nearly_flat == doctest::Approx(179.9427).epsilon(1e-5));
    CHECK(nearly_flat > kAngleMaxDeg);  // sampler would reject this scene
}

TEST_CASE("angle_between requires coinciding endpoints") {
    CHECK_THROWS_AS(angle_between({{0, 0}, {1, 0}}, {{0.5, 0}, {0, 1}}, 0, 0), InvalidInput);
}

TEST_CASE("angle_between is symmetric and rotation invariant") {
    Rng rng(22);
    for (int i = 0; i < 500; ++i) {
        Vec2 apex{rng.uniform(5, 27), rng.uniform(5, 27)};
        Vec2 p{rng.uniform(0, 32), rng.uniform(0, 32)};
        Vec2 q{rng.uniform(0, 32), rng.uniform(0, 32)};
        if (norm(p - apex) == 0.0 || norm(q - apex) == 0.0) continue;
        Segment s1{apex, p}, s2{apex, q};
        double a12 = angle_between(s1, s2, 0, 0);
        double a21 = angle_between(s2, s1, 0, 0);
        CHECK(a12 == doctest::Approx(a21).epsilon(1e-12));
        // acos is ill-conditioned near 0/180 degrees; compare absolutely.
        CHECK(std::abs(a12 - angle_oracle_deg(apex, p, q)) < 1e-9);

        double th = rng.uniform(0, 2 * M_PI);
        double c = std::cos(th), s = std::sin(th);
        auto rot = [&](Vec2 v) { return Vec2{c * v.x - s * v.y, s * v.x + c * v.y}; };
        double rotated = angle_between({rot(apex), rot(p)}, {rot(apex), rot(q)}, 0, 0);
        CHECK(std::abs(rotated - a12) < 1e-9);
    }
}

TEST_CASE("point_segment_distance") {
    Segment s{{0, 0}, {10, 0}};
    CHECK(point_segment_distance({5, 3}, s) == doctest::Approx(3.0));
    CHECK(point_segment_distance({-3, 4}, s) == doctest::Approx(5.0));
    CHECK(point_segment_distance({5, 0}, s) == doctest::Approx(0.0));
}

TEST_CASE("validate_scene accepts a blunt angle scene") {
    CHECK(validate_scene(blunt_scene(120.0)).ok());
}

TEST_CASE("validate_scene rejects angle outside the blunt range") {
    CHECK(has_violation(validate_scene(blunt_scene(95.0)), "angle-range"));
    CHECK(has_violation(validate_scene(blunt_scene(170.0)), "angle-range"));
}

TEST_CASE("validate_scene flags a crossing parameter outside [0.2, 0.8]") {
    SceneSpec sc;
    sc.task = Task::AngCrs;
    sc.label = 1;
    // Crossing at 10% along segment 0.
    sc.segments = {{{2, 16}, {22, 16}}, {{4, 6}, {4, 26}}};
    auto rep = validate_scene(sc);
    CHECK(has_violation(rep, "crossing-parameter"));
}

TEST_CASE("validate_scene flags short segments") {
    SceneSpec sc = blunt_scene(120.0, 10.0);  // arms 10 px < 13
    CHECK(has_violation(validate_scene(sc), "segment-length"));
}

TEST_CASE("validate_scene flags a missing required crossing") {
    SceneSpec sc;
    sc.task = Task::CrsNcrs;
    sc.label = 0;
    sc.segments = {{{2, 10}, {20, 10}}, {{2, 20}, {20, 20}}};
    CHECK(has_violation(validate_scene(sc), "crossing-missing"));
}

TEST_CASE("validate_scene flags endpoints leaving the frame") {
    SceneSpec sc = blunt_scene(120.0);
    sc.segments[0].p1.x = 33.0;
    CHECK(has_violation(validate_scene(sc), "out-of-frame"));
}

TEST_CASE("sample_scene blnt_shrp blunt class") {
    Rng rng(7);
    SceneSpec sc = sample_scene(Task::BlntShrp, 0, rng);
    REQUIRE(sc.segments.size() == 2);
    REQUIRE(sc.shared_vertices.size() == 1);
    const auto& sv = sc.shared_vertices[0];
    double deg = angle_between(sc.segments[sv.a.seg], sc.segments[sv.b.seg], sv.a.end, sv.b.end);
    CHECK(deg >= kBluntMinDeg);
    CHECK(deg <= kBluntMaxDeg);
}

TEST_CASE("sample_scene crs_ncrs non-crossing class never intersects") {
    for (uint64_t seed : {1ull, 2ull, 3ull, 99ull}) {
        Rng rng(seed);
        SceneSpec sc = sample_scene(Task::CrsNcrs, 1, rng);
        REQUIRE(sc.segments.size() == 2);
        CHECK_FALSE(segment_intersection(sc.segments[0], sc.segments[1]).has_value());
    }
}

TEST_CASE("sample_scene is deterministic for a fixed seed") {
    Rng r1(1234), r2(1234);
    SceneSpec a = sample_scene(Task::AngTriLn, 1, r1);
    SceneSpec b = sample_scene(Task::AngTriLn, 1, r2);
    CHECK(serialize_scene(a) == serialize_scene(b));
}

TEST_CASE("sampled scenes pass the validator for every task and class") {
    for (int t = 0; t < kNumTasks; ++t) {
        for (int cls = 0; cls < 2; ++cls) {
            Rng rng(mix_seed(99, static_cast<uint64_t>(t * 2 + cls)));
            for (int i = 0; i < 300; ++i) {
                SceneSpec sc = sample_scene(static_cast<Task>(t), cls, rng);
                auto rep = validate_scene(sc);
                if (!rep.ok()) {
                    CAPTURE(task_name(static_cast<Task>(t)));
                    CAPTURE(cls);
                    CAPTURE(rep.violations[0].constraint);
                }
                REQUIRE(rep.ok());
            }
        }
    }
}

TEST_CASE("task names round-trip") {
    for (int t = 0; t < kNumTasks; ++t) {
        Task task = static_cast<Task>(t);
        auto back = task_from_name(task_name(task));
        REQUIRE(back.has_value());
        CHECK(*back == task);
    }
    CHECK_FALSE(task_from_name("no_such_task").has_value());
}
