#include "showcast/planner.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "showcast/csv.hpp"
#include "showcast/error.hpp"

namespace showcast {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidParams, what);
}

bool feasible_at(const CapacityParams& cap, std::int64_t staff, double required) {
  CapacityParams c = cap;
  c.staff_count = staff;
  return required / time_available(c) <= 1.0;
}

}  // namespace

void CapacityParams::validate() const {
  require(staff_count >= 1, "staff count must be a positive integer");
  require(std::isfinite(working_hours_per_day) && working_hours_per_day > 0.0, "working hours must be > 0");
  require(std::isfinite(utilization_rate) && utilization_rate > 0.0 && utilization_rate <= 1.0,
          "utilization rate must be in (0, 1]");
  require(std::isfinite(working_days) && working_days > 0.0, "working days must be > 0");
}

void DemandParams::validate() const {
  require(std::isfinite(forecasted_customers) && forecasted_customers >= 0.0,
          "forecasted customers must be >= 0");
  require(std::isfinite(service_hours) && service_hours > 0.0, "service time must be > 0");
}

double minutes_to_hours(double minutes) { return minutes / 60.0; }

double time_available(const CapacityParams& cap) {
  cap.validate();
  return double(cap.staff_count) * cap.working_hours_per_day * cap.utilization_rate * cap.working_days;
}

double time_required(const DemandParams& dem) {
  dem.validate();
  return dem.forecasted_customers * dem.service_hours;
}

std::int64_t optimal_staff(const CapacityParams& cap, const DemandParams& dem) {
  cap.validate();
  const double required = time_required(dem);
  const double per_staff = cap.working_hours_per_day * cap.utilization_rate * cap.working_days;
  double estimate = std::ceil(required / per_staff);
  require(estimate < 9.0e15, "demand too large to staff");
  std::int64_t staff = std::max<std::int64_t>(1, static_cast<std::int64_t>(estimate));
  // The closed form can be off by one through rounding; settle on the feasibility test itself.
  while (staff > 1 && feasible_at(cap, staff - 1, required)) --staff;
  while (!feasible_at(cap, staff, required)) ++staff;
  return staff;
}

StaffingPlan plan(const CapacityParams& cap, const DemandParams& dem) {
  StaffingPlan p;
  p.staff_count = cap.staff_count;
  p.time_available = time_available(cap);
  p.time_required = time_required(dem);
  p.ratio = p.time_required / p.time_available;
  p.feasible = p.ratio <= 1.0;
  p.optimal_staff = optimal_staff(cap, dem);
  return p;
}

WhatIfTable what_if(const CapacityParams& cap, std::int64_t lo, std::int64_t hi, const DemandParams& dem,
                    std::int64_t step) {
  require(lo >= 1, "what-if range must start at 1 or more staff");
  require(lo <= hi, "what-if range is empty");
  require(step >= 1, "what-if step must be >= 1");
  WhatIfTable table;
  for (std::int64_t staff = lo; staff <= hi; staff += step) {
    CapacityParams c = cap;
    c.staff_count = staff;
    table.rows.push_back(plan(c, dem));
    if (!table.first_feasible && table.rows.back().feasible) table.first_feasible = table.rows.size() - 1;
  }
  return table;
}

nlohmann::json to_json(const CapacityParams& cap) {
  return {{"staff_count", cap.staff_count},
          {"working_hours_per_day", cap.working_hours_per_day},
          {"utilization_rate", cap.utilization_rate},
          {"working_days", cap.working_days}};
}

nlohmann::json to_json(const DemandParams& dem) {
  return {{"forecasted_customers", dem.forecasted_customers}, {"service_hours", dem.service_hours}};
}

nlohmann::json to_json(const StaffingPlan& p) {
  return {{"staff_count", p.staff_count}, {"time_available", p.time_available},
          {"time_required", p.time_required}, {"ratio", p.ratio},
          {"optimal_staff", p.optimal_staff}, {"feasible", p.feasible}};
}

nlohmann::json to_json(const WhatIfTable& table) {
  auto rows = nlohmann::json::array();
  for (const auto& r : table.rows) rows.push_back(to_json(r));
  nlohmann::json j{{"rows", std::move(rows)}};
  if (table.first_feasible) j["first_feasible_staff"] = table.rows[*table.first_feasible].staff_count;
  else j["first_feasible_staff"] = nullptr;
  return j;
}

std::string render_plan(const CapacityParams& cap, const DemandParams& dem, const StaffingPlan& p) {
  std::ostringstream out;
  out << "Staff: " << cap.staff_count << ", " << format_double(cap.working_hours_per_day) << " h/day, utilization "
      << format_double(cap.utilization_rate) << ", " << format_double(cap.working_days) << " days\n";
  out << "Forecasted customers: " << format_double_fixed(dem.forecasted_customers, 2) << " at "
      << format_double(dem.service_hours * 60.0) << " min each\n";
  out << "Total time available: " << format_double_fixed(p.time_available, 2) << " h\n";
  out << "Total time required:  " << format_double_fixed(p.time_required, 2) << " h\n";
  out << "Ratio: " << format_double_fixed(100.0 * p.ratio, 2) << "% ("
      << (p.feasible ? "enough staff" : "more staff needed") << ")\n";
  out << "Optimal staff: " << p.optimal_staff << '\n';
  return out.str();
}

std::string render_what_if(const WhatIfTable& table) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%6s %14s %14s %9s  %s\n", "Staff", "Available (h)", "Required (h)", "Ratio (%)",
                "Feasible");
  out << line;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    std::snprintf(line, sizeof line, "%6lld %14s %14s %9s  %s%s\n", static_cast<long long>(r.staff_count),
                  format_double_fixed(r.time_available, 2).c_str(), format_double_fixed(r.time_required, 2).c_str(),
                  format_double_fixed(100.0 * r.ratio, 2).c_str(), r.feasible ? "yes" : "no",
                  table.first_feasible == i ? "  <- first feasible" : "");
    out << line;
  }
  return out.str();
}

}  // namespace showcast
