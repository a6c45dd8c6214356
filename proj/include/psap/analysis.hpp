// Closed-form and Monte Carlo analysis of PSA pruning, plus traffic metrics.
#pragma once

#include <cstdint>
#include <optional>

#include "psap/geometry.hpp"
#include "psap/model.hpp"

namespace psap {

struct CandidateCounts {
  long long a = 0;
  long long b = 0;
  long long c = 0;

  long long total() const { return a + b + c; }
};

// Exhaustive candidate counts per case for a path of `path_points` points
// counting the vehicle position (stops + 1): (K(K-1)/2, K-1, 1).
CandidateCounts candidate_counts(int path_points);

struct EtaBounds {
  double eta = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// eta = (alpha + beta - mu) / (alpha_opt + beta_opt - nu) with the
// rectangle-vs-ellipse bounds. Throws DomainError on non-positive
// denominators.
EtaBounds eta_closed(double alpha, double beta, double alpha_opt, double beta_opt, double mu,
                     double nu);

// Ellipse {x : |f1 x| + |x f2| <= sum_bound} and its circumscribing rectangle.
struct FocalRegion {
  Point f1;
  Point f2;
  double sum_bound = 0.0;
};

struct EtaEstimate {
  double alpha = 0.0;      // rectangle areas (exact)
  double beta = 0.0;
  double alpha_opt = 0.0;  // ellipse areas (exact)
  double beta_opt = 0.0;
  double mu = 0.0;         // rectangle intersection (sampled)
  double nu = 0.0;         // ellipse intersection (sampled)
  double eta = 0.0;        // sampled union ratio
  double eta_stderr = 0.0;
  double eta_closed = 0.0;  // eta_closed() fed with the sampled mu, nu
  double lo = 0.0;
  double hi = 0.0;
  long long samples = 0;
  double box = 0.0;  // sampled area, km^2
};

// Uniform sampling over the bounding box of both rectangles. `alpha` may be
// absent (single-region PSA). Deterministic in `seed` and independent of
// the number of worker threads.
EtaEstimate eta_monte_carlo(const std::optional<FocalRegion>& alpha, const FocalRegion& beta,
                            long long samples, std::uint64_t seed);

// Rectangle area over sampled ellipse area, sampling uniformly inside the
// rectangle.
struct AreaRatio {
  double ratio = 0.0;
  double stderr_ = 0.0;
};
AreaRatio rect_ellipse_ratio_mc(const FocalRegion& region, long long samples, std::uint64_t seed);

struct RrccExpectation {
  double psi_a = 0.0;
  double psi_b = 0.0;
};

RrccExpectation expected_rrcc(double psa_area, double city_area);

// Expected candidate evaluations avoided per trial (case C term dropped).
double expected_reduction(int path_points, double psa_area, double city_area);

// Frozen-PSA experiment: a single rectangle of area fraction*S centred in
// the box [lo, hi], request endpoints uniform over the box.
struct RrccHarnessResult {
  double area_fraction = 0.0;
  double psa_area = 0.0;
  double city_area = 0.0;
  long long trials = 0;
  double psi_a = 0.0;
  double psi_b = 0.0;
  RrccExpectation expected;
};
RrccHarnessResult rrcc_harness(Point lo, Point hi, double area_fraction, long long trials,
                               GatingMode mode, std::uint64_t seed);

struct TrafficSnapshot {
  int fleet = 0;
  int moving = 0;   // vehicles with a stop to reach
  int busy = 0;     // vehicles with a non-empty service list
  int onboard = 0;  // requests currently riding
  double completed_direct_km = 0.0;
  double fleet_km = 0.0;
};

struct TrafficMetrics {
  std::optional<double> sharing_rate;  // absent with no moving vehicle
  double utilization = 0.0;
  double busy_rate = 0.0;
  double saved_km = 0.0;
};

TrafficMetrics traffic_metrics(const TrafficSnapshot& s);

}  // namespace psap
