#include "bmnn/geometry.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>

#include "bmnn/errors.hpp"

namespace bmnn {

namespace {

constexpr std::array<const char*, kNumTasks> kTaskNames = {
    "ang_crs", "ang_crs_line", "ang_tri_ln", "blnt_shrp", "blnt_shrp_ln", "crs_ncrs"};

void require_nondegenerate(const Segment& s, const char* what) {
    if (s.length() <= 0.0) throw InvalidInput(std::string("degenerate segment passed to ") + what);
}

void append_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }

void append_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void append_f64(std::vector<uint8_t>& out, double v) {
    uint64_t bits = std::bit_cast<uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(bits >> (8 * i)));
}

}  // namespace

const char* task_name(Task t) { return kTaskNames[static_cast<size_t>(t)]; }

std::optional<Task> task_from_name(std::string_view name) {
    for (int i = 0; i < kNumTasks; ++i)
        if (name == kTaskNames[i]) return static_cast<Task>(i);
    return std::nullopt;
}

const char* class_name(Task t, int cls) {
    switch (t) {
        case Task::AngCrs:
        case Task::AngCrsLine: return cls == 0 ? "angle" : "crossing";
        case Task::AngTriLn: return cls == 0 ? "angle" : "triangle";
        case Task::BlntShrp:
        case Task::BlntShrpLn: return cls == 0 ? "blunt" : "sharp";
        case Task::CrsNcrs: return cls == 0 ? "crossing" : "non-crossing";
    }
    return "?";
}

std::optional<Intersection> segment_intersection(const Segment& a, const Segment& b) {
    require_nondegenerate(a, "segment_intersection");
    require_nondegenerate(b, "segment_intersection");
    Vec2 da = a.p1 - a.p0;
    Vec2 db = b.p1 - b.p0;
    double denom = cross(da, db);
    if (denom == 0.0) return std::nullopt;  // parallel or collinear
    Vec2 r = b.p0 - a.p0;
    double t_a = cross(r, db) / denom;
    double t_b = cross(r, da) / denom;
    if (t_a < 0.0 || t_a > 1.0 || t_b < 0.0 || t_b > 1.0) return std::nullopt;
    return Intersection{t_a, t_b, a.at(t_a)};
}

double angle_between(const Segment& s1, const Segment& s2, int end1, int end2) {
    if (end1 < 0 || end1 > 1 || end2 < 0 || end2 > 1)
        throw InvalidInput("angle_between: endpoint index must be 0 or 1");
    Vec2 v = s1.endpoint(end1);
    if (!same_point(v, s2.endpoint(end2)))
        throw InvalidInput("angle_between: named endpoints do not coincide");
    Vec2 u = s1.endpoint(1 - end1) - v;
    Vec2 w = s2.endpoint(1 - end2) - v;
    double nu = norm(u), nw = norm(w);
    if (nu == 0.0 || nw == 0.0) throw InvalidInput("angle_between: degenerate segment");
    double c = std::clamp(dot(u, w) / (nu * nw), -1.0, 1.0);
    return std::acos(c) * 180.0 / M_PI;
}

double point_segment_distance(Vec2 p, const Segment& s) {
    require_nondegenerate(s, "point_segment_distance");
    Vec2 d = s.p1 - s.p0;
    double t = std::clamp(dot(p - s.p0, d) / dot(d, d), 0.0, 1.0);
    return norm(p - s.at(t));
}

namespace {

// Static description of one (task, class) condition.
struct SceneShape {
    int n_segments;
    bool has_angle;        // segments 0,1 share a vertex forming an angle
    bool is_triangle;      // segments 0,1,2 form a closed loop
    bool needs_crossing;   // segments 0,1 must cross with params in range
    bool forbids_crossing; // segments 0,1 must not intersect at all (crs_ncrs negative)
    int free_line;         // index of the segment that must cross nothing, or -1
    double angle_min, angle_max;
};

SceneShape scene_shape(Task task, int label) {
    switch (task) {
        case Task::AngCrs:
            if (label == 0) return {2, true, false, false, false, -1, kAngleMinDeg, kAngleMaxDeg};
            return {2, false, false, true, false, -1, 0, 0};
        case Task::AngCrsLine:
            if (label == 0) return {3, true, false, false, false, 2, kAngleMinDeg, kAngleMaxDeg};
            return {3, false, false, true, false, 2, 0, 0};
        case Task::AngTriLn:
            if (label == 0) return {3, true, false, false, false, 2, kAngleMinDeg, kAngleMaxDeg};
            return {4, false, true, false, false, 3, kAngleMinDeg, kAngleMaxDeg};
        case Task::BlntShrp:
            if (label == 0) return {2, true, false, false, false, -1, kBluntMinDeg, kBluntMaxDeg};
            return {2, true, false, false, false, -1, kSharpMinDeg, kSharpMaxDeg};
        case Task::BlntShrpLn:
            if (label == 0) return {3, true, false, false, false, 2, kBluntMinDeg, kBluntMaxDeg};
            return {3, true, false, false, false, 2, kSharpMinDeg, kSharpMaxDeg};
        case Task::CrsNcrs:
            if (label == 0) return {2, false, false, true, false, -1, 0, 0};
            return {2, false, false, false, true, -1, 0, 0};
    }
    throw InvalidInput("unknown task");
}

bool valid_ref(const VertexRef& r, int n_segments) {
    return r.seg >= 0 && r.seg < n_segments && (r.end == 0 || r.end == 1);
}

// True when endpoint `end` of segment `seg` is declared shared with `other`.
bool is_exempt(const SceneSpec& sc, int seg, int end, int other) {
    for (const auto& sv : sc.shared_vertices) {
        if (sv.a.seg == seg && sv.a.end == end && sv.b.seg == other) return true;
        if (sv.b.seg == seg && sv.b.end == end && sv.a.seg == other) return true;
    }
    return false;
}

// Checks that shared_vertices matches the expected topology and that the
// named endpoints actually coincide. Returns false when downstream angle
// checks cannot be evaluated.
bool check_shared_structure(const SceneSpec& sc, const SceneShape& shape, ConstraintReport& rep) {
    const int n = static_cast<int>(sc.segments.size());
    for (const auto& sv : sc.shared_vertices) {
        if (!valid_ref(sv.a, n) || !valid_ref(sv.b, n) || sv.a.seg == sv.b.seg) {
            rep.violations.push_back({"shared-vertex-structure", {sv.a.seg, sv.b.seg}, 0.0});
            return false;
        }
        Vec2 pa = sc.segments[sv.a.seg].endpoint(sv.a.end);
        Vec2 pb = sc.segments[sv.b.seg].endpoint(sv.b.end);
        if (!same_point(pa, pb)) {
            rep.violations.push_back({"shared-vertex-mismatch", {sv.a.seg, sv.b.seg}, norm(pa - pb)});
            return false;
        }
    }
    size_t expected = shape.is_triangle ? 3 : (shape.has_angle ? 1 : 0);
    if (sc.shared_vertices.size() != expected) {
        rep.violations.push_back(
            {"shared-vertex-structure", {}, static_cast<double>(sc.shared_vertices.size())});
        return false;
    }
    if (shape.has_angle) {
        const auto& sv = sc.shared_vertices[0];
        if (!((sv.a.seg == 0 && sv.b.seg == 1) || (sv.a.seg == 1 && sv.b.seg == 0))) {
            rep.violations.push_back({"shared-vertex-structure", {sv.a.seg, sv.b.seg}, 0.0});
            return false;
        }
    }
    if (shape.is_triangle) {
        // The loop must use each endpoint of segments 0..2 exactly once and
        // link all three segment pairs.
        std::array<int, 6> used{};
        std::array<bool, 3> pair_seen{};  // {0,1}, {1,2}, {0,2}
        for (const auto& sv : sc.shared_vertices) {
            if (sv.a.seg > 2 || sv.b.seg > 2) {
                rep.violations.push_back({"shared-vertex-structure", {sv.a.seg, sv.b.seg}, 0.0});
                return false;
            }
            used[sv.a.seg * 2 + sv.a.end]++;
            used[sv.b.seg * 2 + sv.b.end]++;
            int lo = std::min(sv.a.seg, sv.b.seg), hi = std::max(sv.a.seg, sv.b.seg);
            pair_seen[lo == 0 ? (hi == 1 ? 0 : 2) : 1] = true;
        }
        bool ok = pair_seen[0] && pair_seen[1] && pair_seen[2];
        for (int u : used) ok = ok && u == 1;
        if (!ok) {
            rep.violations.push_back({"shared-vertex-structure", {0, 1, 2}, 0.0});
            return false;
        }
    }
    return true;
}

void check_angle_range(double deg, double lo, double hi, std::vector<int> segs,
                       ConstraintReport& rep) {
    if (deg < lo || deg > hi) rep.violations.push_back({"angle-range", std::move(segs), deg});
}

}  // namespace

ConstraintReport validate_scene(const SceneSpec& scene) {
    ConstraintReport rep;
    const SceneShape shape = scene_shape(scene.task, scene.label);
    const int n = static_cast<int>(scene.segments.size());

    if (n != shape.n_segments) {
        rep.violations.push_back({"segment-count", {}, static_cast<double>(n)});
        return rep;
    }
    for (int i = 0; i < n; ++i) {
        if (scene.segments[i].length() == 0.0) {
            rep.violations.push_back({"degenerate-segment", {i}, 0.0});
            return rep;
        }
    }

    for (int i = 0; i < n; ++i) {
        for (int e = 0; e < 2; ++e) {
            Vec2 p = scene.segments[i].endpoint(e);
            if (p.x < 0.0 || p.x >= kFrameSize || p.y < 0.0 || p.y >= kFrameSize)
                rep.violations.push_back({"out-of-frame", {i}, std::max(p.x, p.y)});
        }
        double len = scene.segments[i].length();
        if (len < kMinSegmentLength) rep.violations.push_back({"segment-length", {i}, len});
    }

    const bool structure_ok = check_shared_structure(scene, shape, rep);

    // Endpoint-to-other-segment clearance; shared vertices are exempt.
    for (int i = 0; i < n; ++i) {
        for (int e = 0; e < 2; ++e) {
            for (int j = 0; j < n; ++j) {
                if (j == i || is_exempt(scene, i, e, j)) continue;
                double d = point_segment_distance(scene.segments[i].endpoint(e), scene.segments[j]);
                if (d < kMinEndpointDistance)
                    rep.violations.push_back({"endpoint-distance", {i, j}, d});
            }
        }
    }

    if (!structure_ok) return rep;

    if (shape.has_angle) {
        const auto& sv = scene.shared_vertices[0];
        const auto& sa = scene.segments[sv.a.seg];
        const auto& sb = scene.segments[sv.b.seg];
        check_angle_range(angle_between(sa, sb, sv.a.end, sv.b.end), shape.angle_min,
                          shape.angle_max, {sv.a.seg, sv.b.seg}, rep);
    }
    if (shape.is_triangle) {
        for (const auto& sv : scene.shared_vertices) {
            const auto& sa = scene.segments[sv.a.seg];
            const auto& sb = scene.segments[sv.b.seg];
            check_angle_range(angle_between(sa, sb, sv.a.end, sv.b.end), shape.angle_min,
                              shape.angle_max, {sv.a.seg, sv.b.seg}, rep);
        }
    }
    if (shape.needs_crossing) {
        auto isect = segment_intersection(scene.segments[0], scene.segments[1]);
        if (!isect) {
            rep.violations.push_back({"crossing-missing", {0, 1}, 0.0});
        } else if (isect->t_a < kCrossMin || isect->t_a > kCrossMax || isect->t_b < kCrossMin ||
                   isect->t_b > kCrossMax) {
            rep.violations.push_back(
                {"crossing-parameter", {0, 1}, std::min(isect->t_a, isect->t_b)});
        }
    }
    if (shape.forbids_crossing) {
        if (segment_intersection(scene.segments[0], scene.segments[1]))
            rep.violations.push_back({"crossing-forbidden", {0, 1}, 0.0});
    }
    if (shape.free_line >= 0) {
        for (int j = 0; j < n; ++j) {
            if (j == shape.free_line) continue;
            if (segment_intersection(scene.segments[shape.free_line], scene.segments[j]))
                rep.violations.push_back({"crossing-forbidden", {shape.free_line, j}, 0.0});
        }
    }
    return rep;
}

namespace {

Vec2 propose_point(Rng& rng) {
    double x = rng.uniform(kProposalLo, kProposalHi);
    double y = rng.uniform(kProposalLo, kProposalHi);
    return {x, y};
}

SceneSpec propose_scene(Task task, int label, Rng& rng) {
    const SceneShape shape = scene_shape(task, label);
    SceneSpec sc;
    sc.task = task;
    sc.label = static_cast<uint8_t>(label);
    if (shape.is_triangle) {
        Vec2 v1 = propose_point(rng), v2 = propose_point(rng), v3 = propose_point(rng);
        sc.segments = {{v1, v2}, {v2, v3}, {v3, v1}};
        sc.shared_vertices = {{{0, 1}, {1, 0}}, {{1, 1}, {2, 0}}, {{2, 1}, {0, 0}}};
    } else if (shape.has_angle) {
        Vec2 apex = propose_point(rng);
        sc.segments = {{apex, propose_point(rng)}, {apex, propose_point(rng)}};
        sc.shared_vertices = {{{0, 0}, {1, 0}}};
    } else {
        sc.segments = {{propose_point(rng), propose_point(rng)},
                       {propose_point(rng), propose_point(rng)}};
    }
    if (shape.free_line >= 0) sc.segments.push_back({propose_point(rng), propose_point(rng)});
    return sc;
}

}  // namespace

SceneSpec sample_scene(Task task, int class_label, Rng& rng) {
    if (class_label < 0 || class_label > 1) throw InvalidInput("class label must be 0 or 1");
    for (int attempt = 0; attempt < kSampleRetryBudget; ++attempt) {
        SceneSpec candidate = propose_scene(task, class_label, rng);
        if (validate_scene(candidate).ok()) return candidate;
    }
    throw SamplingError(std::string("sample_scene: retry budget exhausted for ") +
                        task_name(task) + "/" + class_name(task, class_label));
}

std::vector<uint8_t> serialize_scene(const SceneSpec& scene) {
    std::vector<uint8_t> out;
    append_u16(out, static_cast<uint16_t>(scene.task));
    append_u8(out, scene.label);
    append_u8(out, static_cast<uint8_t>(scene.segments.size()));
    for (const auto& s : scene.segments) {
        append_f64(out, s.p0.x);
        append_f64(out, s.p0.y);
        append_f64(out, s.p1.x);
        append_f64(out, s.p1.y);
    }
    append_u8(out, static_cast<uint8_t>(scene.shared_vertices.size()));
    for (const auto& sv : scene.shared_vertices) {
        append_u8(out, static_cast<uint8_t>(sv.a.seg));
        append_u8(out, static_cast<uint8_t>(sv.a.end));
        append_u8(out, static_cast<uint8_t>(sv.b.seg));
        append_u8(out, static_cast<uint8_t>(sv.b.end));
    }
    return out;
}

}  // namespace bmnn
