#include "semicomp/csv_io.hpp"

#include <charconv>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "semicomp/errors.hpp"

namespace semicomp {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(const std::string& field, const std::string& source, int line,
                    const std::string& column) {
  double value = 0.0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw InputError(source, line, "column '" + column + "': expected a number, got '" + field + "'");
  }
  return value;
}

bool parse_flag(const std::string& field, const std::string& source, int line,
                const std::string& column) {
  if (field == "0") return false;
  if (field == "1") return true;
  throw InputError(source, line, "column '" + column + "': expected 0 or 1, got '" + field + "'");
}

// Reads non-blank lines, tracking 1-based physical line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++number_;
      if (!trim(line).empty()) return true;
    }
    return false;
  }
  int number() const { return number_; }

 private:
  std::istream& in_;
  int number_ = 0;
};

void expect_header(const std::vector<std::string>& header, const std::vector<std::string>& expected,
                   const std::string& source, int line) {
  if (header.size() < expected.size()) {
    throw InputError(source, line, "header has too few columns");
  }
  for (size_t i = 0; i < expected.size(); ++i) {
    if (header[i] != expected[i]) {
      throw InputError(source, line,
                       "header column " + std::to_string(i + 1) + " must be '" + expected[i] +
                           "', got '" + header[i] + "'");
    }
  }
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<SubjectRecord> read_subjects_csv(std::istream& in, const std::string& source) {
  static const std::vector<std::string> kFixed = {"id", "entry", "t1", "d1", "t2", "d2"};
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw InputError(source, 1, "empty file");
  const auto header = split(line);
  expect_header(header, kFixed, source, reader.number());
  std::set<std::string> seen_columns;
  for (const auto& h : header) {
    if (h.empty()) throw InputError(source, reader.number(), "empty column name");
    if (!seen_columns.insert(h).second) {
      throw InputError(source, reader.number(), "duplicate column '" + h + "'");
    }
  }

  std::vector<SubjectRecord> records;
  std::set<std::string> ids;
  while (reader.next(line)) {
    const int n = reader.number();
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw InputError(source, n,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    SubjectRecord r;
    r.id = fields[0];
    if (r.id.empty()) throw InputError(source, n, "empty id");
    if (!ids.insert(r.id).second) throw InputError(source, n, "duplicate id '" + r.id + "'");
    r.entry = parse_number(fields[1], source, n, "entry");
    r.t1 = parse_number(fields[2], source, n, "t1");
    r.d1 = parse_flag(fields[3], source, n, "d1");
    r.t2 = parse_number(fields[4], source, n, "t2");
    r.d2 = parse_flag(fields[5], source, n, "d2");
    for (size_t c = kFixed.size(); c < header.size(); ++c) {
      r.baseline[header[c]] = parse_number(fields[c], source, n, header[c]);
    }
    try {
      validate(r);
    } catch (const DataError& e) {
      throw InputError(source, n, e.what());
    }
    records.push_back(std::move(r));
  }
  return records;
}

void read_time_varying_csv(std::istream& in, std::vector<SubjectRecord>& records,
                           const std::string& source) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw InputError(source, 1, "empty file");
  const auto header = split(line);
  expect_header(header, {"id", "interval_index", "name", "value"}, source, reader.number());
  if (header.size() != 4) throw InputError(source, reader.number(), "expected exactly 4 columns");

  std::unordered_map<std::string, SubjectRecord*> by_id;
  for (auto& r : records) by_id[r.id] = &r;

  while (reader.next(line)) {
    const int n = reader.number();
    const auto fields = split(line);
    if (fields.size() != 4) throw InputError(source, n, "expected 4 fields");
    auto it = by_id.find(fields[0]);
    if (it == by_id.end()) throw InputError(source, n, "unknown subject id '" + fields[0] + "'");
    const double index = parse_number(fields[1], source, n, "interval_index");
    if (index != static_cast<int>(index) || index < 1) {
      throw InputError(source, n, "interval_index must be a positive integer");
    }
    if (fields[2].empty()) throw InputError(source, n, "empty covariate name");
    it->second->time_varying[static_cast<int>(index)][fields[2]] =
        parse_number(fields[3], source, n, "value");
  }
}

void write_subjects_csv(std::ostream& out, const std::vector<SubjectRecord>& records) {
  std::set<std::string> names;
  for (const auto& r : records) {
    for (const auto& [name, _] : r.baseline) names.insert(name);
  }
  out << "id,entry,t1,d1,t2,d2";
  for (const auto& name : names) out << ',' << name;
  out << '\n';
  for (const auto& r : records) {
    out << r.id << ',' << format_number(r.entry) << ',' << format_number(r.t1) << ','
        << (r.d1 ? 1 : 0) << ',' << format_number(r.t2) << ',' << (r.d2 ? 1 : 0);
    for (const auto& name : names) {
      auto it = r.baseline.find(name);
      out << ',' << format_number(it == r.baseline.end() ? 0.0 : it->second);
    }
    out << '\n';
  }
}

void write_time_varying_csv(std::ostream& out, const std::vector<SubjectRecord>& records) {
  out << "id,interval_index,name,value\n";
  for (const auto& r : records) {
    for (const auto& [k, values] : r.time_varying) {
      for (const auto& [name, value] : values) {
        out << r.id << ',' << k << ',' << name << ',' << format_number(value) << '\n';
      }
    }
  }
}

}  // namespace semicomp
