#include "versa/core/time.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace versa {

using namespace std::chrono;

Timestamp now_utc() { return time_point_cast<microseconds>(std::chrono::system_clock::now()); }

std::string format_rfc3339(Timestamp t) {
  auto day = floor<days>(t);
  year_month_day ymd{day};
  hh_mm_ss<microseconds> hms{t - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%06lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()),
                static_cast<long long>(hms.subseconds().count()));
  return buf;
}

namespace {

int read_int(std::string_view s, std::size_t pos, std::size_t len) {
  if (pos + len > s.size()) throw std::invalid_argument("timestamp too short");
  int v = 0;
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
  if (ec != std::errc{} || p != s.data() + pos + len) throw std::invalid_argument("timestamp: bad digits");
  return v;
}

void expect(std::string_view s, std::size_t pos, char c) {
  if (pos >= s.size() || (s[pos] != c && !(c == 'T' && (s[pos] == 't' || s[pos] == ' ')))) {
    throw std::invalid_argument("timestamp: unexpected character");
  }
}

}  // namespace

Timestamp parse_rfc3339(std::string_view s) {
  int y = read_int(s, 0, 4);
  expect(s, 4, '-');
  int mo = read_int(s, 5, 2);
  expect(s, 7, '-');
  int d = read_int(s, 8, 2);
  expect(s, 10, 'T');
  int h = read_int(s, 11, 2);
  expect(s, 13, ':');
  int mi = read_int(s, 14, 2);
  expect(s, 16, ':');
  int se = read_int(s, 17, 2);
  std::size_t pos = 19;
  long long micros = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 6) {
        micros = micros * 10 + (s[pos] - '0');
        ++digits;
      }
      ++pos;
    }
    if (digits == 0) throw std::invalid_argument("timestamp: empty fraction");
    for (; digits < 6; ++digits) micros *= 10;
  }
  minutes offset{0};
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    int sign = s[pos] == '-' ? -1 : 1;
    int oh = read_int(s, pos + 1, 2);
    expect(s, pos + 3, ':');
    int om = read_int(s, pos + 4, 2);
    offset = minutes{sign * (oh * 60 + om)};
    pos += 6;
  } else {
    throw std::invalid_argument("timestamp: missing zone");
  }
  if (pos != s.size()) throw std::invalid_argument("timestamp: trailing characters");
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 60) throw std::invalid_argument("timestamp: out of range");
  Timestamp t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{se} + microseconds{micros};
  return t - offset;
}

Clock system_clock() { return &now_utc; }

Clock stepping_clock(Timestamp start, microseconds step) {
  auto counter = std::make_shared<std::atomic<long long>>(0);
  return [=] { return start + step * counter->fetch_add(1); };
}

}  // namespace versa
