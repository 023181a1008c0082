#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spikevar {

// Calendar date backed by a serial day number (days since 1970-01-01).
// Conversions use the classic days-from-civil algorithm, valid far beyond
// any sequencing date we will ever see.
class Date {
 public:
  Date() = default;
  explicit Date(std::int64_t serial) : serial_(serial) {}
  Date(int year, int month, int day) : serial_(days_from_civil(year, month, day)) {}

  static Date parse(const std::string& iso);  // "YYYY-MM-DD"
  std::string iso() const;

  std::int64_t serial() const { return serial_; }

  Date operator+(std::int64_t days) const { return Date(serial_ + days); }
  std::int64_t operator-(Date o) const { return serial_ - o.serial_; }
  bool operator==(const Date& o) const { return serial_ == o.serial_; }
  bool operator!=(const Date& o) const { return serial_ != o.serial_; }
  bool operator<(const Date& o) const { return serial_ < o.serial_; }
  bool operator<=(const Date& o) const { return serial_ <= o.serial_; }
  bool operator>(const Date& o) const { return serial_ > o.serial_; }
  bool operator>=(const Date& o) const { return serial_ >= o.serial_; }

  static std::int64_t days_from_civil(int y, int m, int d);
  static void civil_from_days(std::int64_t z, int& y, int& m, int& d);

 private:
  std::int64_t serial_ = 0;
};

}  // namespace spikevar
