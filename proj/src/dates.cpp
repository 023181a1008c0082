#include "spikevar/dates.hpp"

#include <charconv>
#include <cstdio>

namespace spikevar {

std::int64_t Date::days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void Date::civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

Date Date::parse(const std::string& iso) {
  int y = 0, mo = 0, da = 0;
  const char* s = iso.c_str();
  const char* end = s + iso.size();
  auto r1 = std::from_chars(s, end, y);
  if (r1.ec != std::errc{} || r1.ptr == end || *r1.ptr != '-')
    throw std::invalid_argument("unparseable date: " + iso);
  auto r2 = std::from_chars(r1.ptr + 1, end, mo);
  if (r2.ec != std::errc{} || r2.ptr == end || *r2.ptr != '-')
    throw std::invalid_argument("unparseable date: " + iso);
  auto r3 = std::from_chars(r2.ptr + 1, end, da);
  if (r3.ec != std::errc{} || r3.ptr != end)
    throw std::invalid_argument("unparseable date: " + iso);
  if (mo < 1 || mo > 12 || da < 1 || da > 31)
    throw std::invalid_argument("date out of range: " + iso);
  return Date(y, mo, da);
}

std::string Date::iso() const {
  int y, m, d;
  civil_from_days(serial_, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return std::string(buf);
}

}  // namespace spikevar
