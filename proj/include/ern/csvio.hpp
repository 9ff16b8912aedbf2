#ifndef ERN_CSVIO_HPP
#define ERN_CSVIO_HPP

/* Long-format CSV artifacts: fixed column order, 17-significant-digit floats,
 * header always present.  Writes are atomic (tmp file + rename).
 */

#include <string>
#include <vector>

namespace ern {

struct SeriesRow {
  std::string run_id;
  std::string kind;
  double p = 0;
  int k = 0;
  double tau = 0;
  double value = 0;
  double err_est = 0;
  std::string flags; // semicolon-separated markers, may be empty
};

struct RateRow {
  std::string run_id;
  std::string kind;
  double p = 0;
  int k = 0;
  double window_lo = 0, window_hi = 0;
  double exponent = 0;
  double stderr_ = 0;
};

extern const char* kSeriesHeader;
extern const char* kRatesHeader;

std::string format_double(double x); // %.17g

void write_series_csv(const std::string& path, const std::vector<SeriesRow>& rows);
void write_rates_csv(const std::string& path, const std::vector<RateRow>& rows);
std::vector<SeriesRow> read_series_csv(const std::string& path);
std::vector<RateRow> read_rates_csv(const std::string& path);

void write_text_atomic(const std::string& path, const std::string& content);

} // namespace ern

#endif
