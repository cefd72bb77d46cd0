#include "geoload/time.hpp"

#include <charconv>
#include <cstdio>

#include "geoload/error.hpp"

namespace geoload {
namespace {

using namespace std::chrono;

int read_int(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  int value = 0;
  if (pos + len > text.size()) {
    throw Error(ErrorKind::parse, "invalid timestamp '" + std::string(whole) + "'");
  }
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc() || ptr != text.data() + pos + len) {
    throw Error(ErrorKind::parse, "invalid timestamp '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  auto bad = [&] { return Error(ErrorKind::parse, "invalid timestamp '" + std::string(text) + "'"); };
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':') {
    throw bad();
  }
  const int y = read_int(text, 0, 4, text);
  const int mo = read_int(text, 5, 2, text);
  const int d = read_int(text, 8, 2, text);
  const int h = read_int(text, 11, 2, text);
  const int mi = read_int(text, 14, 2, text);
  std::size_t pos = 16;
  int sec = 0;
  if (pos < text.size() && text[pos] == ':') {
    sec = read_int(text, pos + 1, 2, text);
    pos += 3;
  }
  if (pos < text.size() && text[pos] == 'Z') ++pos;
  if (pos != text.size()) throw bad();

  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23) throw bad();
  if (mi != 0 || sec != 0) {
    throw Error(ErrorKind::parse, "timestamp '" + std::string(text) + "' is not on the hour");
  }
  return sys_days{ymd} + hours{h};
}

std::string format_timestamp(Timestamp t) {
  auto day_start = floor<days>(t);
  year_month_day ymd{day_start};
  const auto h = (t - day_start).count();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:00:00Z", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(h));
  return buf;
}

int hour_of_day(Timestamp t) {
  return static_cast<int>((t - floor<days>(t)).count());
}

int weekday(Timestamp t) {
  // iso_encoding: Monday = 1 ... Sunday = 7
  return static_cast<int>(std::chrono::weekday{floor<days>(t)}.iso_encoding()) - 1;
}

int month_index(Timestamp t) {
  return static_cast<int>(static_cast<unsigned>(year_month_day{floor<days>(t)}.month())) - 1;
}

int day_of_year(Timestamp t) {
  auto d = floor<days>(t);
  year_month_day ymd{d};
  return static_cast<int>((d - sys_days{ymd.year() / January / 1}).count());
}

}  // namespace geoload
