#include "pfmot/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <system_error>

#include "pfmot/error.hpp"

namespace pfmot {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int parse_int(std::string_view text, std::size_t line_no) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("expected an integer, got '" + std::string(text) + "'", line_no);
  }
  return v;
}

double parse_field(std::string_view text, std::size_t line_no) {
  try {
    return parse_double(text);
  } catch (const InvalidParameter&) {
    throw ParseError("expected a number, got '" + std::string(text) + "'", line_no);
  }
}

/// Reads all data rows. Returns the header fields; `rows` receives the
/// remaining lines with their 1-based line numbers.
std::vector<std::string> read_table(std::istream& is,
                                    std::vector<std::pair<std::size_t, std::string>>& rows) {
  std::string line;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      for (auto f : split(line)) header.emplace_back(f);
      continue;
    }
    if (line.empty()) continue;
    rows.emplace_back(line_no, line);
  }
  return header;
}

void expect_header(const std::vector<std::string>& got, const std::vector<std::string>& want) {
  if (got != want) {
    std::string w;
    for (const auto& f : want) w += (w.empty() ? "" : ",") + f;
    throw ParseError("unexpected header, expected '" + w + "'", 1);
  }
}

std::vector<std::string_view> fields_of(const std::string& line, std::size_t n, std::size_t line_no) {
  auto f = split(line);
  if (f.size() != n) {
    throw ParseError("expected " + std::to_string(n) + " fields, got " + std::to_string(f.size()),
                     line_no);
  }
  return f;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

const std::vector<std::string> kTruthHeader{"k", "object_id", "x", "y", "z", "vx", "vy", "vz"};
const std::vector<std::string> kEstimateHeader{"k",  "label_k", "label_m", "x",        "y", "z",
                                               "vx", "vy",      "vz",      "existence"};

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("failed to format number");
  return {buf, ptr};
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw InvalidParameter("not a number: '" + std::string(text) + "'");
  }
  return v;
}

void write_truth(std::ostream& os, const std::vector<TruthRow>& rows) {
  os << "k,object_id,x,y,z,vx,vy,vz\n";
  for (const auto& r : rows) {
    if (r.state.size() != 6) throw InvalidParameter("truth rows need 6-dimensional states");
    os << r.k << ',' << r.object_id;
    for (Eigen::Index i = 0; i < 6; ++i) os << ',' << format_double(r.state(i));
    os << '\n';
  }
}

std::vector<TruthRow> read_truth(std::istream& is) {
  std::vector<std::pair<std::size_t, std::string>> rows;
  const auto header = read_table(is, rows);
  if (header.empty() && rows.empty()) return {};
  expect_header(header, kTruthHeader);
  std::vector<TruthRow> out;
  out.reserve(rows.size());
  for (const auto& [line_no, line] : rows) {
    const auto f = fields_of(line, 8, line_no);
    TruthRow r;
    r.k = parse_int(f[0], line_no);
    r.object_id = parse_int(f[1], line_no);
    r.state.resize(6);
    for (int i = 0; i < 6; ++i) r.state(i) = parse_field(f[2 + i], line_no);
    out.push_back(std::move(r));
  }
  return out;
}

void write_measurements(std::ostream& os, const std::vector<MeasurementFrame>& frames,
                        Eigen::Index dim) {
  os << "k,meas_index";
  for (Eigen::Index i = 1; i <= dim; ++i) os << ",z_" << i;
  os << '\n';
  for (const auto& frame : frames) {
    for (std::size_t m = 0; m < frame.z.size(); ++m) {
      if (frame.z[m].size() != dim) throw InvalidParameter("measurement dimension mismatch");
      os << frame.k << ',' << m;
      for (Eigen::Index i = 0; i < dim; ++i) os << ',' << format_double(frame.z[m](i));
      os << '\n';
    }
  }
}

std::vector<MeasurementFrame> read_measurements(std::istream& is) {
  std::vector<std::pair<std::size_t, std::string>> rows;
  const auto header = read_table(is, rows);
  if (header.empty() && rows.empty()) return {};
  if (header.size() < 3 || header[0] != "k" || header[1] != "meas_index") {
    throw ParseError("unexpected header, expected 'k,meas_index,z_1,...'", 1);
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t i = 0; i < dim; ++i) {
    if (header[2 + i] != "z_" + std::to_string(i + 1)) {
      throw ParseError("unexpected header column '" + header[2 + i] + "'", 1);
    }
  }

  std::map<int, std::map<int, Eigen::VectorXd>> by_k;
  for (const auto& [line_no, line] : rows) {
    const auto f = fields_of(line, dim + 2, line_no);
    const int k = parse_int(f[0], line_no);
    const int m = parse_int(f[1], line_no);
    if (m < 0) throw ParseError("negative measurement index", line_no);
    Eigen::VectorXd z(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) z(static_cast<Eigen::Index>(i)) = parse_field(f[2 + i], line_no);
    if (!by_k[k].emplace(m, std::move(z)).second) {
      throw ParseError("duplicate measurement index " + std::to_string(m) + " at k=" + std::to_string(k),
                       line_no);
    }
  }

  std::vector<MeasurementFrame> out;
  for (auto& [k, ms] : by_k) {
    MeasurementFrame frame;
    frame.k = k;
    for (auto& [m, z] : ms) frame.z.push_back(std::move(z));
    out.push_back(std::move(frame));
  }
  return out;
}

void write_estimates(std::ostream& os, const std::vector<EstimateRow>& rows) {
  os << "k,label_k,label_m,x,y,z,vx,vy,vz,existence\n";
  for (const auto& r : rows) {
    if (r.state.size() != 6) throw InvalidParameter("estimate rows need 6-dimensional states");
    os << r.k << ',' << r.label.k << ',' << r.label.m;
    for (Eigen::Index i = 0; i < 6; ++i) os << ',' << format_double(r.state(i));
    os << ',' << format_double(r.existence) << '\n';
  }
}

std::vector<EstimateRow> read_estimates(std::istream& is) {
  std::vector<std::pair<std::size_t, std::string>> rows;
  const auto header = read_table(is, rows);
  if (header.empty() && rows.empty()) return {};
  expect_header(header, kEstimateHeader);
  std::vector<EstimateRow> out;
  out.reserve(rows.size());
  for (const auto& [line_no, line] : rows) {
    const auto f = fields_of(line, 10, line_no);
    EstimateRow r;
    r.k = parse_int(f[0], line_no);
    r.label = {parse_int(f[1], line_no), parse_int(f[2], line_no)};
    r.state.resize(6);
    for (int i = 0; i < 6; ++i) r.state(i) = parse_field(f[3 + i], line_no);
    r.existence = parse_field(f[9], line_no);
    out.push_back(std::move(r));
  }
  return out;
}

void write_series(std::ostream& os, const std::string& name, const std::vector<SeriesRow>& rows) {
  os << "k," << name << '\n';
  for (const auto& r : rows) os << r.k << ',' << format_double(r.value) << '\n';
}

std::vector<SeriesRow> read_series(std::istream& is, const std::string& name) {
  std::vector<std::pair<std::size_t, std::string>> rows;
  const auto header = read_table(is, rows);
  if (header.empty() && rows.empty()) return {};
  expect_header(header, {"k", name});
  std::vector<SeriesRow> out;
  out.reserve(rows.size());
  for (const auto& [line_no, line] : rows) {
    const auto f = fields_of(line, 2, line_no);
    out.push_back({parse_int(f[0], line_no), parse_field(f[1], line_no)});
  }
  return out;
}

std::vector<TruthRow> read_truth_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_truth(in);
}

std::vector<MeasurementFrame> read_measurements_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_measurements(in);
}

std::vector<EstimateRow> read_estimates_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_estimates(in);
}

std::vector<SeriesRow> read_series_file(const std::filesystem::path& path, const std::string& name) {
  auto in = open_input(path);
  return read_series(in, name);
}

}  // namespace pfmot
