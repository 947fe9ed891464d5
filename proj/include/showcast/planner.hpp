#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace showcast {

// All times are hours.
struct CapacityParams {
  std::int64_t staff_count = 1;
  double working_hours_per_day = 8.0;
  double utilization_rate = 1.0;
  double working_days = 1.0;

  void validate() const;
};

struct DemandParams {
  double forecasted_customers = 0.0;  // expected value or head count
  double service_hours = 0.0;         // per customer

  void validate() const;
};

double minutes_to_hours(double minutes);

struct StaffingPlan {
  std::int64_t staff_count = 0;
  double time_available = 0.0;
  double time_required = 0.0;
  double ratio = 0.0;  // required / available
  std::int64_t optimal_staff = 1;
  bool feasible = false;  // ratio <= 1 at staff_count
};

double time_available(const CapacityParams& cap);
double time_required(const DemandParams& dem);

// Smallest staff count (at least 1) whose ratio is <= 1.
std::int64_t optimal_staff(const CapacityParams& cap, const DemandParams& dem);

StaffingPlan plan(const CapacityParams& cap, const DemandParams& dem);

struct WhatIfTable {
  std::vector<StaffingPlan> rows;
  std::optional<std::size_t> first_feasible;
};

// One plan per staff count lo, lo + step, ... <= hi; cap.staff_count is ignored.
WhatIfTable what_if(const CapacityParams& cap, std::int64_t lo, std::int64_t hi, const DemandParams& dem,
                    std::int64_t step = 1);

nlohmann::json to_json(const CapacityParams& cap);
nlohmann::json to_json(const DemandParams& dem);
nlohmann::json to_json(const StaffingPlan& plan);
nlohmann::json to_json(const WhatIfTable& table);

std::string render_plan(const CapacityParams& cap, const DemandParams& dem, const StaffingPlan& plan);
std::string render_what_if(const WhatIfTable& table);

}  // namespace showcast
