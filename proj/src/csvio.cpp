#include "ern/csvio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ern {

const char* kSeriesHeader = "run_id,kind,p,k,tau,value,err_est,flags";
const char* kRatesHeader = "run_id,kind,p,k,window_lo,window_hi,exponent,stderr";

std::string format_double(double x) {
  char buf[40];
  snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("csv: cannot write " + tmp);
    out << content;
    if (!out) throw std::runtime_error("csv: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("csv: rename failed for " + path);
}

void write_series_csv(const std::string& path, const std::vector<SeriesRow>& rows) {
  std::ostringstream ss;
  ss << kSeriesHeader << "\n";
  for (const SeriesRow& r : rows)
    ss << r.run_id << ',' << r.kind << ',' << format_double(r.p) << ',' << r.k << ','
       << format_double(r.tau) << ',' << format_double(r.value) << ','
       << format_double(r.err_est) << ',' << r.flags << "\n";
  write_text_atomic(path, ss.str());
}

void write_rates_csv(const std::string& path, const std::vector<RateRow>& rows) {
  std::ostringstream ss;
  ss << kRatesHeader << "\n";
  for (const RateRow& r : rows)
    ss << r.run_id << ',' << r.kind << ',' << format_double(r.p) << ',' << r.k << ','
       << format_double(r.window_lo) << ',' << format_double(r.window_hi) << ','
       << format_double(r.exponent) << ',' << format_double(r.stderr_) << "\n";
  write_text_atomic(path, ss.str());
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> read_table(const std::string& path,
                                                 const char* header, size_t ncols) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw std::runtime_error("csv: bad header in " + path);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_line(line);
    if (f.size() != ncols)
      throw std::runtime_error("csv: wrong column count in " + path);
    rows.push_back(std::move(f));
  }
  return rows;
}

} // namespace

std::vector<SeriesRow> read_series_csv(const std::string& path) {
  std::vector<SeriesRow> out;
  for (auto& f : read_table(path, kSeriesHeader, 8)) {
    SeriesRow r;
    r.run_id = f[0];
    r.kind = f[1];
    r.p = std::stod(f[2]);
    r.k = std::stoi(f[3]);
    r.tau = std::stod(f[4]);
    r.value = std::stod(f[5]);
    r.err_est = std::stod(f[6]);
    r.flags = f[7];
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RateRow> read_rates_csv(const std::string& path) {
  std::vector<RateRow> out;
  for (auto& f : read_table(path, kRatesHeader, 8)) {
    RateRow r;
    r.run_id = f[0];
    r.kind = f[1];
    r.p = std::stod(f[2]);
    r.k = std::stoi(f[3]);
    r.window_lo = std::stod(f[4]);
    r.window_hi = std::stod(f[5]);
    r.exponent = std::stod(f[6]);
    r.stderr_ = std::stod(f[7]);
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace ern
