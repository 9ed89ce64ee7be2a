#pragma once

#include <chrono>
#include <optional>
#include <string>

namespace tempo {

// All time handling in this project is UTC with seconds precision.
using UtcSeconds = std::chrono::sys_seconds;
using std::chrono::sys_days;

// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS", or "YYYY-MM-DDTHH:MM:SSZ".
// A space instead of 'T' is also accepted. Returns nullopt for anything else
// or for calendar-invalid dates.
std::optional<UtcSeconds> parse_iso8601(const std::string& s);

// Emits "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(UtcSeconds t);

// Strict "YYYY-MM-DD"; the whole string must be the date.
std::optional<sys_days> parse_iso_date(const std::string& s);

std::string format_iso_date(sys_days d);

// Floor to the start of the UTC calendar day containing t.
sys_days day_of(UtcSeconds t);

// Closest Monday at or before d.
sys_days monday_on_or_before(sys_days d);

// First day of the month containing d.
sys_days first_of_month(sys_days d);

}  // namespace tempo
