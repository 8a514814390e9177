#pragma once

// Hourly electricity price series: CSV loading, chronological splitting,
// lookback windows and synthetic generators. Prices are held in EUR/kWh.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evsched {

inline constexpr std::size_t kHoursPerDay = 24;
inline constexpr std::size_t kWindowHours = 24;

/// Malformed or inconsistent price data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A UTC calendar hour, counted from 1970-01-01T00:00Z.
struct HourStamp {
  std::int64_t hours = 0;
  friend auto operator<=>(const HourStamp&, const HourStamp&) = default;
};

/// Parses `YYYY-MM-DDTHH:00:00Z`. Throws DataError.
HourStamp parse_hour_stamp(std::string_view text);
std::string format_hour_stamp(HourStamp stamp);

enum class PriceUnit { EurPerKwh, EurPerMwh };

class PriceSeries {
 public:
  PriceSeries() = default;
  /// Throws DataError on an empty series or a non-finite price.
  PriceSeries(HourStamp start, std::vector<double> prices);

  HourStamp start() const { return start_; }
  HourStamp stamp(std::size_t index) const {
    return HourStamp{start_.hours + static_cast<std::int64_t>(index)};
  }
  std::size_t size() const { return prices_.size(); }
  std::size_t days() const { return prices_.size() / kHoursPerDay; }
  std::span<const double> prices() const { return prices_; }
  double operator[](std::size_t i) const { return prices_[i]; }

  /// Contiguous sub-series [first, first + count).
  PriceSeries slice(std::size_t first, std::size_t count) const;

  friend bool operator==(const PriceSeries&, const PriceSeries&) = default;

 private:
  HourStamp start_{};
  std::vector<double> prices_;
};

struct DatasetSplit {
  PriceSeries train;
  PriceSeries test;
  std::string split_policy;
};

/// Reads a `timestamp,price` CSV. Rows must be hourly, gapless and sorted.
/// EUR/MWh inputs are divided by 1000.
PriceSeries load_price_csv(const std::filesystem::path& path, PriceUnit unit);
void write_price_csv(const std::filesystem::path& path,
                     const PriceSeries& series, PriceUnit unit);

/// The test set is the chronological tail of `test_days` whole days.
DatasetSplit split_train_test(const PriceSeries& series, std::size_t test_days);

/// Prices at end_index-23 .. end_index, oldest first.
std::array<double, kWindowHours> price_window(const PriceSeries& series,
                                              std::size_t end_index);

enum class PricePattern { TwoTier, Sinusoid, RandomWalk };

PricePattern parse_price_pattern(std::string_view name);
std::string_view to_string(PricePattern pattern);

struct SyntheticPriceSpec {
  PricePattern pattern = PricePattern::TwoTier;
  double low = 0.05;   // EUR/kWh
  double high = 0.30;  // EUR/kWh
  /// Cheap hours are [cheap_start_hour, cheap_end_hour) for two-tier.
  int cheap_start_hour = 0;
  int cheap_end_hour = 6;
  /// Std-dev of additive Gaussian noise (two-tier, sinusoid) or of the
  /// random-walk increments, EUR/kWh.
  double noise = 0.0;
  std::uint64_t seed = 0;
  HourStamp start{};
};

PriceSeries gen_synthetic(const SyntheticPriceSpec& spec, std::size_t days);

struct PriceStats {
  double mean = 0.0;
  double stddev = 1.0;
};

/// Population mean and standard deviation. A degenerate (constant) series
/// reports stddev 1 so that centring still works.
PriceStats price_stats(const PriceSeries& series);

}  // namespace evsched
