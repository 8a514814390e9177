#include "evsched/pricing.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "evsched/rng.hpp"

namespace evsched {
namespace {

int parse_int(std::string_view s, std::string_view what, std::string_view full) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError(fmt::format("bad {} in timestamp '{}'", what, full));
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double parse_decimal(std::string_view s) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw DataError(fmt::format("unparseable price '{}'", s));
  }
  return value;
}

// EUR/MWh values are rescaled by moving the decimal exponent, so "18.3" in
// EUR/MWh and "0.0183" in EUR/kWh parse to the same double.
double parse_price(std::string_view s, PriceUnit unit) {
  if (unit == PriceUnit::EurPerKwh) return parse_decimal(s);
  const auto e = s.find_first_of("eE");
  int exponent = -3;
  std::string_view mantissa = s;
  if (e != std::string_view::npos) {
    int given = 0;
    const std::string_view tail = s.substr(e + 1);
    const auto* first = tail.data() + (!tail.empty() && tail.front() == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(first, tail.data() + tail.size(), given);
    if (ec != std::errc{} || ptr != tail.data() + tail.size()) {
      throw DataError(fmt::format("unparseable price '{}'", s));
    }
    exponent += given;
    mantissa = s.substr(0, e);
  }
  if (mantissa.find_first_of("eE") != std::string_view::npos || mantissa.empty()) {
    throw DataError(fmt::format("unparseable price '{}'", s));
  }
  return parse_decimal(fmt::format("{}e{}", mantissa, exponent));
}

}  // namespace

HourStamp parse_hour_stamp(std::string_view text) {
  // YYYY-MM-DDTHH:00:00Z
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text.substr(14) != "00:00Z") {
    throw DataError(fmt::format("timestamp '{}' is not YYYY-MM-DDTHH:00:00Z", text));
  }
  const int y = parse_int(text.substr(0, 4), "year", text);
  const int m = parse_int(text.substr(5, 2), "month", text);
  const int d = parse_int(text.substr(8, 2), "day", text);
  const int h = parse_int(text.substr(11, 2), "hour", text);
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23) {
    throw DataError(fmt::format("invalid calendar hour '{}'", text));
  }
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return HourStamp{static_cast<std::int64_t>(days_since_epoch) * 24 + h};
}

std::string format_hour_stamp(HourStamp stamp) {
  using namespace std::chrono;
  std::int64_t day_count = stamp.hours / 24;
  std::int64_t hour = stamp.hours % 24;
  if (hour < 0) {
    hour += 24;
    --day_count;
  }
  const year_month_day ymd{sys_days{days{day_count}}};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:00:00Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     hour);
}

PriceSeries::PriceSeries(HourStamp start, std::vector<double> prices)
    : start_(start), prices_(std::move(prices)) {
  if (prices_.empty()) throw DataError("price series is empty");
  for (std::size_t i = 0; i < prices_.size(); ++i) {
    if (!std::isfinite(prices_[i])) {
      throw DataError(fmt::format("non-finite price at {}", format_hour_stamp(stamp(i))));
    }
  }
}

PriceSeries PriceSeries::slice(std::size_t first, std::size_t count) const {
  if (first + count > prices_.size()) {
    throw std::out_of_range("price series slice out of range");
  }
  return PriceSeries(stamp(first),
                     std::vector<double>(prices_.begin() + first,
                                         prices_.begin() + first + count));
}

PriceSeries load_price_csv(const std::filesystem::path& path, PriceUnit unit) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open price file '{}'", path.string()));

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("price file is empty");
  ++line_no;
  if (trim(line) != "timestamp,price") {
    throw DataError(fmt::format("line 1: expected header 'timestamp,price', got '{}'", line));
  }

  std::vector<double> prices;
  HourStamp start{};
  HourStamp previous{};
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos) {
      throw DataError(fmt::format("line {}: expected 'timestamp,price'", line_no));
    }
    HourStamp stamp;
    double price = 0.0;
    try {
      stamp = parse_hour_stamp(trim(row.substr(0, comma)));
      price = parse_price(trim(row.substr(comma + 1)), unit);
    } catch (const DataError& e) {
      throw DataError(fmt::format("line {}: {}", line_no, e.what()));
    }
    if (!std::isfinite(price)) {
      throw DataError(fmt::format("line {}: non-finite price", line_no));
    }
    if (prices.empty()) {
      start = stamp;
    } else if (stamp.hours == previous.hours) {
      throw DataError(fmt::format("line {}: duplicate timestamp {}", line_no,
                                  format_hour_stamp(stamp)));
    } else if (stamp.hours != previous.hours + 1) {
      throw DataError(fmt::format("line {}: gap in hourly series, expected {} but found {}",
                                  line_no, format_hour_stamp(HourStamp{previous.hours + 1}),
                                  format_hour_stamp(stamp)));
    }
    previous = stamp;
    prices.push_back(price);
  }
  if (prices.empty()) throw DataError("price file has no rows");
  return PriceSeries(start, std::move(prices));
}

void write_price_csv(const std::filesystem::path& path, const PriceSeries& series,
                     PriceUnit unit) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  const double factor = unit == PriceUnit::EurPerMwh ? 1000.0 : 1.0;
  out << "timestamp,price\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_hour_stamp(series.stamp(i)) << ',' << fmt::format("{}", series[i] * factor)
        << '\n';
  }
}

DatasetSplit split_train_test(const PriceSeries& series, std::size_t test_days) {
  if (test_days == 0 || series.size() < kHoursPerDay * (test_days + 1)) {
    throw std::invalid_argument(fmt::format(
        "series of {} hours is too short to hold {} test days plus one training day",
        series.size(), test_days));
  }
  const std::size_t test_hours = test_days * kHoursPerDay;
  const std::size_t train_hours = series.size() - test_hours;
  return DatasetSplit{series.slice(0, train_hours), series.slice(train_hours, test_hours),
                      fmt::format("chronological tail: last {} days test", test_days)};
}

std::array<double, kWindowHours> price_window(const PriceSeries& series,
                                              std::size_t end_index) {
  if (end_index + 1 < kWindowHours || end_index >= series.size()) {
    throw std::out_of_range(fmt::format("price window ending at {} needs {}..{} in a {}-hour series",
                                        end_index, kWindowHours - 1, series.size() - 1,
                                        series.size()));
  }
  std::array<double, kWindowHours> window{};
  const auto prices = series.prices();
  std::copy(prices.begin() + static_cast<std::ptrdiff_t>(end_index + 1 - kWindowHours),
            prices.begin() + static_cast<std::ptrdiff_t>(end_index + 1), window.begin());
  return window;
}

PricePattern parse_price_pattern(std::string_view name) {
  if (name == "two-tier") return PricePattern::TwoTier;
  if (name == "sinusoid") return PricePattern::Sinusoid;
  if (name == "random-walk") return PricePattern::RandomWalk;
  throw std::invalid_argument(fmt::format("unknown price pattern '{}'", name));
}

std::string_view to_string(PricePattern pattern) {
  switch (pattern) {
    case PricePattern::TwoTier: return "two-tier";
    case PricePattern::Sinusoid: return "sinusoid";
    case PricePattern::RandomWalk: return "random-walk";
  }
  return "?";
}

PriceSeries gen_synthetic(const SyntheticPriceSpec& spec, std::size_t days) {
  if (days < 2) throw std::invalid_argument("synthetic series needs at least 2 days");
  if (!(spec.noise >= 0.0)) throw std::invalid_argument("noise scale must be >= 0");
  if (spec.pattern == PricePattern::TwoTier) {
    if (!(spec.low < spec.high)) {
      throw std::invalid_argument("two-tier pattern needs low < high");
    }
    if (spec.cheap_start_hour < 0 || spec.cheap_end_hour > 24 ||
        spec.cheap_start_hour >= spec.cheap_end_hour) {
      throw std::invalid_argument("cheap hours must satisfy 0 <= start < end <= 24");
    }
  } else if (!(spec.low <= spec.high)) {
    throw std::invalid_argument("price pattern needs low <= high");
  }

  Rng rng = make_stream(spec.seed, "synthetic-prices");
  const std::size_t hours = days * kHoursPerDay;
  std::vector<double> prices(hours);
  const double mid = 0.5 * (spec.low + spec.high);
  const double amplitude = 0.5 * (spec.high - spec.low);
  double level = mid;
  for (std::size_t i = 0; i < hours; ++i) {
    const int hour = static_cast<int>((spec.start.hours + static_cast<std::int64_t>(i)) % 24);
    switch (spec.pattern) {
      case PricePattern::TwoTier: {
        const bool cheap = hour >= spec.cheap_start_hour && hour < spec.cheap_end_hour;
        prices[i] = cheap ? spec.low : spec.high;
        if (spec.noise > 0.0) prices[i] += spec.noise * standard_normal(rng);
        break;
      }
      case PricePattern::Sinusoid: {
        // Trough at 03:00, peak at 15:00.
        prices[i] = mid - amplitude * std::cos(2.0 * std::numbers::pi * (hour - 3) / 24.0);
        if (spec.noise > 0.0) prices[i] += spec.noise * standard_normal(rng);
        break;
      }
      case PricePattern::RandomWalk: {
        // Starts at the midpoint of [low, high].
        if (i > 0 && spec.noise > 0.0) level += spec.noise * standard_normal(rng);
        prices[i] = level;
        break;
      }
    }
  }
  return PriceSeries(spec.start, std::move(prices));
}

PriceStats price_stats(const PriceSeries& series) {
  const auto prices = series.prices();
  double mean = 0.0;
  for (double p : prices) mean += p;
  mean /= static_cast<double>(prices.size());
  double var = 0.0;
  for (double p : prices) var += (p - mean) * (p - mean);
  var /= static_cast<double>(prices.size());
  const double sd = std::sqrt(var);
  return PriceStats{mean, sd > 1e-12 ? sd : 1.0};
}

}  // namespace evsched
