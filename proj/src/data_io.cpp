#include "sativ/data_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <vector>

#include "sativ/error.hpp"

namespace sativ {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void fail(std::size_t line, const std::string& message) {
  throw ValidationError("line " + std::to_string(line) + ": " + message);
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* column) {
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    fail(line, std::string("cannot parse ") + column + " value '" + std::string(field) + "'");
  }
  return value;
}

int parse_binary(std::string_view field, std::size_t line, const char* column) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  fail(line, std::string(column) + " must be 0 or 1, got '" + std::string(field) + "'");
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), ptr);
}

ExperimentData read_data_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ValidationError("data file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDataHeader) {
    fail(line_no, "expected header '" + std::string(kDataHeader) + "', got '" + line + "'");
  }

  struct Pending {
    Group group;
    std::size_t first_line = 0;
  };
  std::map<std::int64_t, Pending> groups;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 5) fail(line_no, "expected 5 fields, got " + std::to_string(fields.size()));
    const auto id = parse_number<std::int64_t>(fields[0], line_no, "group_id");
    const auto s = parse_number<double>(fields[1], line_no, "saturation");
    const int z = parse_binary(fields[2], line_no, "z");
    const int d = parse_binary(fields[3], line_no, "d");
    const auto y = parse_number<double>(fields[4], line_no, "y");
    if (!(s >= 0.0 && s <= 1.0)) fail(line_no, "saturation must lie in [0, 1]");
    if (!std::isfinite(y)) fail(line_no, "y must be finite");
    if (d == 1 && z == 0) {
      fail(line_no, "one-sided non-compliance violated: d = 1 but z = 0 (group " +
                        std::to_string(id) + ")");
    }
    auto [it, inserted] = groups.try_emplace(id);
    Pending& p = it->second;
    if (inserted) {
      p.group.id = id;
      p.group.saturation = s;
      p.first_line = line_no;
    } else if (std::abs(p.group.saturation - s) > 1e-12) {
      fail(line_no, "saturation differs within group " + std::to_string(id) + " (line " +
                        std::to_string(p.first_line) + " has " + format_double(p.group.saturation) +
                        ")");
    }
    p.group.z.push_back(z);
    p.group.d.push_back(d);
    p.group.y.push_back(y);
  }

  ExperimentData data;
  for (auto& [id, p] : groups) {
    if (p.group.size() < 2) {
      fail(p.first_line, "group " + std::to_string(id) +
                             " has a single member; each group needs at least two");
    }
    data.groups.push_back(std::move(p.group));
  }
  if (data.groups.empty()) throw ValidationError("data file has no observations");
  return data;
}

ExperimentData ingest_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open data file '" + path + "'");
  return read_data_csv(in);
}

void write_data_csv(const ExperimentData& data, std::ostream& out) {
  out << kDataHeader << '\n';
  for (const auto& g : data.groups) {
    const std::string prefix = std::to_string(g.id) + "," + format_double(g.saturation) + ",";
    for (std::size_t i = 0; i < g.z.size(); ++i) {
      out << prefix << g.z[i] << ',' << g.d[i] << ',' << format_double(g.y[i]) << '\n';
    }
  }
}

void write_data_csv(const ExperimentData& data, const std::string& path) {
  auto out = open_output(path);
  write_data_csv(data, out);
}

void write_latent_csv(const ExperimentData& data, std::ostream& out) {
  if (!data.has_latent()) throw ValidationError("data has no latent truth to write");
  out << kLatentHeader << '\n';
  for (const auto& g : data.groups) {
    for (std::size_t i = 0; i < g.z.size(); ++i) {
      const auto& b = g.latent->coefficients[i];
      out << g.id << ',' << g.latent->complier[i] << ',' << format_double(b[0]) << ','
          << format_double(b[1]) << ',' << format_double(b[2]) << ',' << format_double(b[3])
          << '\n';
    }
  }
}

void write_latent_csv(const ExperimentData& data, const std::string& path) {
  auto out = open_output(path);
  write_latent_csv(data, out);
}

}  // namespace sativ
