#ifndef BMNN_GEOMETRY_HPP
#define BMNN_GEOMETRY_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bmnn/rng.hpp"

namespace bmnn {

// Scene coordinates live in the final 32x32 image frame (continuous values).
constexpr int kFinalSize = 32;  // published stimulus resolution
constexpr double kFrameSize = kFinalSize;
constexpr double kMinSegmentLength = 13.0;   // px
constexpr double kMinEndpointDistance = 4.0; // px, endpoint to other segment
constexpr double kCrossMin = 0.2;            // crossing parameter range, both segments
constexpr double kCrossMax = 0.8;
constexpr double kAngleMinDeg = 20.0;        // generic angle / triangle corners
constexpr double kAngleMaxDeg = 160.0;
constexpr double kBluntMinDeg = 100.0;
constexpr double kBluntMaxDeg = 160.0;
constexpr double kSharpMinDeg = 20.0;
constexpr double kSharpMaxDeg = 80.0;
// Proposal margin: endpoints drawn in [2, 30)^2 so blurred strokes stay in frame.
constexpr double kProposalLo = 2.0;
constexpr double kProposalHi = 30.0;
constexpr int kSampleRetryBudget = 10000;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline bool same_point(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }

struct Segment {
    Vec2 p0, p1;

    Vec2 endpoint(int i) const { return i == 0 ? p0 : p1; }
    double length() const { return norm(p1 - p0); }
    Vec2 at(double t) const { return {p0.x + t * (p1.x - p0.x), p0.y + t * (p1.y - p0.y)}; }
};

// The six task conditions. The enumerator values double as the wire ids in
// the dataset file format.
enum class Task : uint16_t {
    AngCrs = 0,      // class 0: angle,    class 1: crossing pair
    AngCrsLine = 1,  // same, plus a free line crossing nothing
    AngTriLn = 2,    // class 0: angle,    class 1: triangle; free line in both
    BlntShrp = 3,    // class 0: blunt,    class 1: sharp angle
    BlntShrpLn = 4,  // same, plus a free line
    CrsNcrs = 5,     // class 0: crossing, class 1: non-crossing pair
};

constexpr int kNumTasks = 6;
const char* task_name(Task t);
std::optional<Task> task_from_name(std::string_view name);
const char* class_name(Task t, int cls);

// Endpoint identity: endpoint `end` (0 or 1) of segment `seg`.
struct VertexRef {
    int seg = 0;
    int end = 0;
};

// Two endpoints that intentionally coincide (angle apex, triangle corner).
struct SharedVertex {
    VertexRef a, b;
};

struct SceneSpec {
    Task task = Task::AngCrs;
    uint8_t label = 0;  // binary class index
    std::vector<Segment> segments;
    std::vector<SharedVertex> shared_vertices;
};

struct Violation {
    std::string constraint;      // stable name, e.g. "segment-length"
    std::vector<int> segments;   // offending segment indices
    double measured = 0.0;
};

struct ConstraintReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

struct Intersection {
    double t_a = 0.0;  // parameter along a, in [0,1]
    double t_b = 0.0;  // parameter along b
    Vec2 point;
};

// Intersection of two closed segments. Returns the parameters and the point
// when the segments meet within both parameter ranges; nullopt for parallel,
// collinear-overlap and out-of-range cases. Throws InvalidInput on a
// degenerate (zero-length) segment.
std::optional<Intersection> segment_intersection(const Segment& a, const Segment& b);

// Interior angle in degrees at the shared vertex between the rays of s1 and
// s2. end1/end2 name which endpoint of each segment is the shared vertex;
// those endpoints must coincide exactly.
double angle_between(const Segment& s1, const Segment& s2, int end1, int end2);

// Euclidean distance from p to the nearest point of the closed segment s.
double point_segment_distance(Vec2 p, const Segment& s);

// Checks every constraint of the scene's task condition. Violations are
// data, not errors; an empty report means the scene is valid.
ConstraintReport validate_scene(const SceneSpec& scene);

// Rejection-samples uniform endpoint proposals until validate_scene accepts.
// Deterministic for a given rng state. Throws SamplingError after
// kSampleRetryBudget rejected candidates.
SceneSpec sample_scene(Task task, int class_label, Rng& rng);

// Canonical little-endian byte serialization; reproducibility checks compare
// these bytes across runs.
std::vector<uint8_t> serialize_scene(const SceneSpec& scene);

}  // namespace bmnn

#endif
