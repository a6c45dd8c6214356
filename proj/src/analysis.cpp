#include "psap/analysis.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "psap/errors.hpp"
#include "psap/rng.hpp"
#include "psap/scheduler.hpp"

namespace psap {

namespace {

constexpr long long kShardSize = 1 << 16;

// Runs `shard_fn(shard_index, shard_samples)` over fixed-size shards on all
// hardware threads; results land in shard order.
template <typename Tally, typename Fn>
std::vector<Tally> run_shards(long long samples, Fn shard_fn) {
  const long long shards = (samples + kShardSize - 1) / kShardSize;
  std::vector<Tally> out(static_cast<std::size_t>(shards));
  std::atomic<long long> next{0};
  const auto worker = [&] {
    for (long long s = next++; s < shards; s = next++) {
      const long long n = std::min(kShardSize, samples - s * kShardSize);
      out[static_cast<std::size_t>(s)] = shard_fn(static_cast<std::uint64_t>(s), n);
    }
  };
  const unsigned threads =
      std::max(1U, std::min(std::thread::hardware_concurrency(), static_cast<unsigned>(shards)));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  return out;
}

std::array<Point, 4> corners(const PsaRect& r) {
  const Point u{r.axis.x * r.half_len, r.axis.y * r.half_len};
  const Point v{-r.axis.y * r.half_wid, r.axis.x * r.half_wid};
  return {Point{r.center.x + u.x + v.x, r.center.y + u.y + v.y},
          Point{r.center.x + u.x - v.x, r.center.y + u.y - v.y},
          Point{r.center.x - u.x + v.x, r.center.y - u.y + v.y},
          Point{r.center.x - u.x - v.x, r.center.y - u.y - v.y}};
}

}  // namespace

CandidateCounts candidate_counts(int path_points) {
  if (path_points < 1) throw DomainError("path must contain at least the vehicle position");
  const long long k = path_points;
  return {k * (k - 1) / 2, k - 1, 1};
}

EtaBounds eta_closed(double alpha, double beta, double alpha_opt, double beta_opt, double mu,
                     double nu) {
  const double opt = alpha_opt + beta_opt;
  if (!(opt > 0.0) || !(opt - nu > 0.0)) {
    throw DomainError(fmt::format("non-positive optimal area (alpha_opt + beta_opt = {}, nu = {})",
                                  opt, nu));
  }
  EtaBounds b;
  b.eta = (alpha + beta - mu) / (opt - nu);
  b.lo = std::max(1.0, 4.0 / M_PI + (4.0 * nu - M_PI * mu) / (M_PI * opt));
  b.hi = 4.0 / M_PI + (4.0 - M_PI) * mu / (M_PI * (opt - nu));
  return b;
}

EtaEstimate eta_monte_carlo(const std::optional<FocalRegion>& alpha, const FocalRegion& beta,
                            long long samples, std::uint64_t seed) {
  if (samples < 1) throw DomainError("need at least one sample");
  const auto rb = make_psa_rect(beta.f1, beta.f2, beta.sum_bound);
  if (!rb) throw DomainError("beta region is empty");
  std::optional<PsaRect> ra;
  if (alpha) ra = make_psa_rect(alpha->f1, alpha->f2, alpha->sum_bound);

  Point lo{INFINITY, INFINITY};
  Point hi{-INFINITY, -INFINITY};
  const auto grow = [&](const PsaRect& r) {
    for (const auto& c : corners(r)) {
      lo = {std::min(lo.x, c.x), std::min(lo.y, c.y)};
      hi = {std::max(hi.x, c.x), std::max(hi.y, c.y)};
    }
  };
  grow(*rb);
  if (ra) grow(*ra);
  const double box = (hi.x - lo.x) * (hi.y - lo.y);

  struct Tally {
    long long mu = 0, nu = 0, rect_union = 0, ellipse_union = 0;
  };
  const auto tallies = run_shards<Tally>(samples, [&](std::uint64_t shard, long long n) {
    auto gen = make_stream(seed, "eta", shard);
    std::uniform_real_distribution<double> ux(lo.x, hi.x);
    std::uniform_real_distribution<double> uy(lo.y, hi.y);
    Tally t;
    for (long long s = 0; s < n; ++s) {
      const Point p{ux(gen), uy(gen)};
      const bool in_rb = rect_contains(*rb, p);
      const bool in_ra = ra && rect_contains(*ra, p);
      const bool in_eb = ellipse_contains(beta.f1, beta.f2, beta.sum_bound, p);
      const bool in_ea = ra && ellipse_contains(alpha->f1, alpha->f2, alpha->sum_bound, p);
      t.mu += in_ra && in_rb;
      t.nu += in_ea && in_eb;
      t.rect_union += in_ra || in_rb;
      t.ellipse_union += in_ea || in_eb;
    }
    return t;
  });
  Tally sum;
  for (const auto& t : tallies) {
    sum.mu += t.mu;
    sum.nu += t.nu;
    sum.rect_union += t.rect_union;
    sum.ellipse_union += t.ellipse_union;
  }

  EtaEstimate e;
  e.samples = samples;
  e.box = box;
  const double n = static_cast<double>(samples);
  e.beta = rb->area;
  e.beta_opt = ellipse_area(beta.f1, beta.f2, beta.sum_bound);
  if (ra) {
    e.alpha = ra->area;
    e.alpha_opt = ellipse_area(alpha->f1, alpha->f2, alpha->sum_bound);
  }
  e.mu = box * static_cast<double>(sum.mu) / n;
  e.nu = box * static_cast<double>(sum.nu) / n;

  const double ea = static_cast<double>(sum.rect_union) / n;
  const double eb = static_cast<double>(sum.ellipse_union) / n;
  e.eta = eb > 0.0 ? ea / eb : INFINITY;
  if (eb > 0.0) {
    // Delta-method variance of the ratio of two correlated proportions; the
    // ellipse union lies inside the rectangle union.
    const double var_a = ea * (1.0 - ea);
    const double var_b = eb * (1.0 - eb);
    const double cov = eb - ea * eb;
    const double var = var_a / (eb * eb) - 2.0 * ea * cov / (eb * eb * eb) +
                       ea * ea * var_b / (eb * eb * eb * eb);
    e.eta_stderr = std::sqrt(std::max(0.0, var) / n);
  }
  const auto closed = eta_closed(e.alpha, e.beta, e.alpha_opt, e.beta_opt, e.mu, e.nu);
  e.eta_closed = closed.eta;
  e.lo = closed.lo;
  e.hi = closed.hi;
  return e;
}

AreaRatio rect_ellipse_ratio_mc(const FocalRegion& region, long long samples, std::uint64_t seed) {
  const auto r = make_psa_rect(region.f1, region.f2, region.sum_bound);
  if (!r || r->area <= 0.0) throw DomainError("region has no area");
  const auto hits = run_shards<long long>(samples, [&](std::uint64_t shard, long long n) {
    auto gen = make_stream(seed, "rect_ratio", shard);
    std::uniform_real_distribution<double> uu(-r->half_len, r->half_len);
    std::uniform_real_distribution<double> uv(-r->half_wid, r->half_wid);
    long long inside = 0;
    for (long long s = 0; s < n; ++s) {
      const double u = uu(gen);
      const double v = uv(gen);
      const Point p{r->center.x + u * r->axis.x - v * r->axis.y,
                    r->center.y + u * r->axis.y + v * r->axis.x};
      inside += ellipse_contains(region.f1, region.f2, region.sum_bound, p);
    }
    return inside;
  });
  long long inside = 0;
  for (auto h : hits) inside += h;
  const double p = static_cast<double>(inside) / static_cast<double>(samples);
  return {1.0 / p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples)) / (p * p)};
}

RrccExpectation expected_rrcc(double psa_area, double city_area) {
  if (!(city_area > 0.0)) throw DomainError("city area must be positive");
  if (psa_area < 0.0 || psa_area > city_area) {
    throw DomainError(fmt::format("PSA area {} outside [0, {}]", psa_area, city_area));
  }
  const double f = psa_area / city_area;
  return {1.0 - f * f, 1.0 - f};
}

double expected_reduction(int path_points, double psa_area, double city_area) {
  const auto n = candidate_counts(path_points);
  const auto e = expected_rrcc(psa_area, city_area);
  return static_cast<double>(n.a) * e.psi_a + static_cast<double>(n.b) * e.psi_b;
}

RrccHarnessResult rrcc_harness(Point lo, Point hi, double area_fraction, long long trials,
                               GatingMode mode, std::uint64_t seed) {
  const double w = hi.x - lo.x;
  const double h = hi.y - lo.y;
  if (!(w > 0.0 && h > 0.0)) throw DomainError("city box must have positive extent");
  if (area_fraction < 0.0 || area_fraction > 1.0) throw DomainError("area fraction outside [0, 1]");

  const double scale = std::sqrt(area_fraction);
  PsaRect frozen;
  frozen.center = {(lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0};
  frozen.axis = w >= h ? Point{1.0, 0.0} : Point{0.0, 1.0};
  frozen.half_len = scale * std::max(w, h) / 2.0;
  frozen.half_wid = scale * std::min(w, h) / 2.0;
  frozen.area = 4.0 * frozen.half_len * frozen.half_wid;
  VehiclePsa psa{SinglePsa{frozen}, 0};

  auto gen = make_stream(seed, "rrcc");
  std::uniform_real_distribution<double> ux(lo.x, hi.x);
  std::uniform_real_distribution<double> uy(lo.y, hi.y);
  const std::array<Point, 1> path{frozen.center};
  long long pass_a = 0;
  long long pass_b = 0;
  for (long long t = 0; t < trials; ++t) {
    const Point o{ux(gen), uy(gen)};
    const Point d{ux(gen), uy(gen)};
    pass_a += gate(psa, InsertionCase::A, o, d, path, frozen.center, 0.0, mode);
    pass_b += gate(psa, InsertionCase::B, o, d, path, frozen.center, 0.0, mode);
  }
  RrccHarnessResult out;
  out.area_fraction = area_fraction;
  out.city_area = w * h;
  out.psa_area = frozen.area;
  out.trials = trials;
  const double n = static_cast<double>(trials);
  out.psi_a = 1.0 - static_cast<double>(pass_a) / n;
  out.psi_b = 1.0 - static_cast<double>(pass_b) / n;
  out.expected = expected_rrcc(std::min(out.psa_area, out.city_area), out.city_area);
  return out;
}

TrafficMetrics traffic_metrics(const TrafficSnapshot& s) {
  TrafficMetrics m;
  if (s.moving > 0) m.sharing_rate = static_cast<double>(s.onboard) / s.moving;
  if (s.fleet > 0) {
    m.utilization = static_cast<double>(s.moving) / s.fleet;
    m.busy_rate = static_cast<double>(s.busy) / s.fleet;
  }
  m.saved_km = s.completed_direct_km - s.fleet_km;
  return m;
}

}  // namespace psap
