#pragma once

#include <ctime>
#include <string>

namespace tds {

/// `YYYY-MM-DDTHH:MM:SSZ`.
std::string iso_utc(std::time_t t);

/// Current time, or SOURCE_DATE_EPOCH when set (reproducible builds).
std::string now_iso_utc();

}  // namespace tds
