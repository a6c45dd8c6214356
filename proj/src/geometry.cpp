#include "psap/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace psap {

double euclid(Point a, Point b) { return std::hypot(b.x - a.x, b.y - a.y); }

std::optional<PsaRect> make_psa_rect(Point f1, Point f2, double sum_bound) {
  const double focal = euclid(f1, f2);
  if (sum_bound < focal) return std::nullopt;

  PsaRect r;
  r.center = {(f1.x + f2.x) / 2.0, (f1.y + f2.y) / 2.0};
  if (focal > 0.0) r.axis = {(f2.x - f1.x) / focal, (f2.y - f1.y) / focal};
  r.half_len = sum_bound / 2.0;
  const double minor = std::sqrt(std::max(0.0, sum_bound * sum_bound - focal * focal));
  r.half_wid = minor / 2.0;
  r.area = sum_bound * minor;
  return r;
}

bool rect_contains(const PsaRect& r, Point p) {
  const double dx = p.x - r.center.x;
  const double dy = p.y - r.center.y;
  const double u = dx * r.axis.x + dy * r.axis.y;
  const double v = -dx * r.axis.y + dy * r.axis.x;
  return std::abs(u) <= r.half_len + kMembershipEpsKm &&
         std::abs(v) <= r.half_wid + kMembershipEpsKm;
}

bool ellipse_contains(Point f1, Point f2, double sum_bound, Point p) {
  return euclid(f1, p) + euclid(p, f2) <= sum_bound;
}

double ellipse_area(Point f1, Point f2, double sum_bound) {
  const double focal = euclid(f1, f2);
  if (sum_bound < focal) return 0.0;
  return M_PI / 4.0 * sum_bound * std::sqrt(sum_bound * sum_bound - focal * focal);
}

bool psa_contains(const VehiclePsa& psa, Point p) {
  struct Visitor {
    Point p;
    bool operator()(const EmptyPsa&) const { return false; }
    bool operator()(const SinglePsa& s) const { return rect_contains(s.beta, p); }
    bool operator()(const UnionPsa& u) const {
      return (u.alpha && rect_contains(*u.alpha, p)) || rect_contains(u.beta, p);
    }
  };
  return std::visit(Visitor{p}, psa.region);
}

}  // namespace psap
