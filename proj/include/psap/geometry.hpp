// Planar geometry for potential search areas (PSA).
//
// All coordinates are planar kilometres. A PSA is the rectangle that
// circumscribes a focal ellipse {x : |f1 x| + |x f2| <= sum_bound}; the
// scheduler tests membership against the rectangle only, the ellipse is kept
// for the analysis oracles.
#pragma once

#include <optional>
#include <variant>

namespace psap {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double euclid(Point a, Point b);

// Slack applied to closed-region membership tests, in km. Points within this
// distance of a rectangle edge are members.
inline constexpr double kMembershipEpsKm = 1e-7;

struct PsaRect {
  Point center;
  Point axis{1.0, 0.0};  // unit vector focus1 -> focus2
  double half_len = 0.0;
  double half_wid = 0.0;
  double area = 0.0;
};

// Empty (nullopt) when sum_bound is below the focal distance.
std::optional<PsaRect> make_psa_rect(Point f1, Point f2, double sum_bound);

bool rect_contains(const PsaRect& r, Point p);

bool ellipse_contains(Point f1, Point f2, double sum_bound, Point p);

// Area of the focal ellipse, zero when infeasible.
double ellipse_area(Point f1, Point f2, double sum_bound);

using RequestId = int;

// PSA of a vehicle, determined by its furthest request.
//   Empty  - idle vehicle.
//   Single - furthest request already on board: beta only.
//   Union  - furthest request still waiting: alpha (schedule position to
//            origin, bounded by the buffer threshold) or beta.
struct EmptyPsa {};
struct SinglePsa {
  PsaRect beta;
};
struct UnionPsa {
  std::optional<PsaRect> alpha;  // empty when the buffer bound is infeasible
  PsaRect beta;
};

struct VehiclePsa {
  std::variant<EmptyPsa, SinglePsa, UnionPsa> region;
  std::optional<RequestId> furthest;

  bool empty() const { return std::holds_alternative<EmptyPsa>(region); }
};

bool psa_contains(const VehiclePsa& psa, Point p);

}  // namespace psap
