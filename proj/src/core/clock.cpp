#include "tdsearch/core/clock.hpp"

#include <cstdlib>

namespace tds {

std::string iso_utc(std::time_t t)
{
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string now_iso_utc()
{
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        return iso_utc(static_cast<std::time_t>(std::strtoll(env, nullptr, 10)));
    }
    return iso_utc(std::time(nullptr));
}

}  // namespace tds
