#include "psap/report.hpp"

#include <fstream>

#include <fmt/format.h>

#include "psap/errors.hpp"

namespace psap {

namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> psi(const EpochCounters& c, std::size_t k) {
  if (c.exhaustive[k] == 0) return std::nullopt;
  return static_cast<double>(c.exhaustive[k] - c.evaluated[k]) / static_cast<double>(c.exhaustive[k]);
}

std::string csv_number(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

json counters_to_json(const EpochCounters& c) {
  return {{"M_A", c.evaluated[0]},  {"M_B", c.evaluated[1]},  {"M_C", c.evaluated[2]},
          {"N_A", c.exhaustive[0]}, {"N_B", c.exhaustive[1]}, {"N_C", c.exhaustive[2]},
          {"psi_A", optional_number(psi(c, 0))},
          {"psi_B", optional_number(psi(c, 1))},
          {"psi_C", optional_number(psi(c, 2))}};
}

}  // namespace

json config_to_json(const SimConfig& c) {
  return {{"max_detour", c.max_detour},
          {"wait_threshold_s", c.wait_threshold_s},
          {"buffer_km", c.buffer_km},
          {"capacity", c.capacity},
          {"speed_kmh", c.speed_kmh},
          {"epoch_s", c.epoch_s},
          {"gating", std::string(to_string(c.gating))},
          {"strict_occupancy", c.strict_occupancy},
          {"vehicles", c.vehicles},
          {"seed", c.seed},
          {"horizon_s", c.horizon_s ? json(*c.horizon_s) : json(nullptr)},
          {"start_offset_s", c.start_offset_s}};
}

json report_to_json(const SimReport& report) {
  const auto& t = report.totals;
  json totals = {{"requests", t.requests},
                 {"completed", t.completed},
                 {"unserved", t.unserved},
                 {"incomplete", t.incomplete},
                 {"pv_km", t.pv_km},
                 {"completed_direct_km", t.completed_direct_km},
                 {"all_direct_km", t.all_direct_km},
                 {"saved_km", t.saved_km},
                 {"poev_km", t.poev.total_km},
                 {"poev_fleet", t.poev.fleet},
                 {"epochs", t.epochs},
                 {"end_time_s", t.end_time},
                 {"peak_sharing_rate", optional_number(t.peak_sharing_rate)},
                 {"peak_utilization", t.peak_utilization},
                 {"counters", counters_to_json(t.counters)}};

  json epochs = json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"t_s", e.t},
                      {"counters", counters_to_json(e.counters)},
                      {"onboard", e.snapshot.onboard},
                      {"moving", e.snapshot.moving},
                      {"busy", e.snapshot.busy},
                      {"sharing_rate", optional_number(e.metrics.sharing_rate)},
                      {"utilization", e.metrics.utilization},
                      {"busy_rate", e.metrics.busy_rate},
                      {"saved_km", e.metrics.saved_km},
                      {"assigned", e.assigned},
                      {"unserved", e.unserved}});
  }
  json requests = json::array();
  for (const auto& r : report.requests) {
    requests.push_back({{"id", r.external_id},
                        {"state", std::string(to_string(r.state))},
                        {"vehicle", r.vehicle},
                        {"t_s", r.t},
                        {"direct_km", r.direct_km},
                        {"schedule_time_s", r.schedule_time},
                        {"pickup_time_s", r.pickup_time},
                        {"dropoff_time_s", r.dropoff_time},
                        {"waiting_s", r.waiting_s},
                        {"travel_s", r.travel_s},
                        {"detour", r.detour},
                        {"buffer_km", r.buffer_km},
                        {"buffer_bounded", r.buffer_bounded}});
  }
  json assignments = json::array();
  for (const auto& a : report.assignments) {
    assignments.push_back({{"t_s", a.time},
                           {"request", report.requests.at(static_cast<std::size_t>(a.request)).external_id},
                           {"vehicle", a.vehicle},
                           {"i", a.i},
                           {"j", a.j},
                           {"case", std::string(to_string(a.kase))},
                           {"cost_km", a.cost},
                           {"buffer_bounded", a.buffer_bounded}});
  }
  return {{"scheduler", std::string(to_string(report.scheduler))},
          {"config", config_to_json(report.config)},
          {"totals", totals},
          {"vehicle_km", report.vehicle_km},
          {"epochs", epochs},
          {"requests", requests},
          {"assignments", assignments}};
}

std::string metrics_csv(const SimReport& report) {
  std::string out = "epoch,t_s,psi_A,psi_B,psi_C,sharing_rate,utilization,saved_km,assigned,unserved\n";
  for (const auto& e : report.epochs) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", e.epoch, e.t,
                       csv_number(psi(e.counters, 0)), csv_number(psi(e.counters, 1)),
                       csv_number(psi(e.counters, 2)), csv_number(e.metrics.sharing_rate),
                       e.metrics.utilization, e.metrics.saved_km, e.assigned, e.unserved);
  }
  return out;
}

std::string counters_csv(const SimReport& report) {
  std::string out = "epoch,t_s,M_A,M_B,M_C,N_A,N_B,N_C\n";
  for (const auto& e : report.epochs) {
    const auto& c = e.counters;
    out += fmt::format("{},{},{},{},{},{},{},{}\n", e.epoch, e.t, c.evaluated[0], c.evaluated[1],
                       c.evaluated[2], c.exhaustive[0], c.exhaustive[1], c.exhaustive[2]);
  }
  return out;
}

std::string requests_outcome_csv(const SimReport& report) {
  std::string out =
      "id,state,vehicle,t_s,direct_km,schedule_time_s,pickup_time_s,dropoff_time_s,waiting_s,"
      "travel_s,detour,buffer_km,buffer_bounded\n";
  for (const auto& r : report.requests) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.external_id, to_string(r.state),
                       r.vehicle, r.t, r.direct_km, r.schedule_time, r.pickup_time, r.dropoff_time,
                       r.waiting_s, r.travel_s, r.detour, r.buffer_km, r.buffer_bounded ? 1 : 0);
  }
  return out;
}

std::string assignments_csv(const SimReport& report) {
  std::string out = "seq,t_s,request,vehicle,i,j,case,cost_km,buffer_bounded\n";
  for (std::size_t k = 0; k < report.assignments.size(); ++k) {
    const auto& a = report.assignments[k];
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", k, a.time,
                       report.requests.at(static_cast<std::size_t>(a.request)).external_id,
                       a.vehicle, a.i, a.j, to_string(a.kase), a.cost, a.buffer_bounded ? 1 : 0);
  }
  return out;
}

std::string events_jsonl(const SimReport& report) {
  std::string out;
  for (const auto& e : report.events) {
    nlohmann::ordered_json line = {{"t", e.t},
                 {"kind", std::string(to_string(e.kind))},
                 {"req", e.request >= 0
                             ? nlohmann::ordered_json(report.requests.at(static_cast<std::size_t>(e.request)).external_id)
                             : nlohmann::ordered_json(nullptr)},
                 {"veh", e.vehicle >= 0 ? nlohmann::ordered_json(e.vehicle) : nlohmann::ordered_json(nullptr)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(fmt::format("cannot write {}", tmp.string()));
    out << contents;
    if (!out.flush()) throw InputError(fmt::format("cannot write {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace psap
