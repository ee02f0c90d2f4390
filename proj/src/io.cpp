#include "luders/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "luders/error.hpp"

namespace luders {
namespace {

std::vector<double> number_array(const Json& j, const char* key, std::size_t expected) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw Error(ErrorCode::ParseError, std::string("missing array \"") + key + "\"");
  }
  const Json& arr = j[key];
  if (arr.size() != expected) {
    throw Error(ErrorCode::ParseError, std::string("\"") + key + "\" has " +
                                           std::to_string(arr.size()) + " entries, expected " +
                                           std::to_string(expected));
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const Json& v : arr) {
    if (!v.is_number()) throw Error(ErrorCode::ParseError, std::string("non-numeric entry in \"") + key + "\"");
    out.push_back(v.get<double>());
  }
  return out;
}

std::size_t positive_size(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 1) {
    throw Error(ErrorCode::ParseError, std::string("missing positive integer \"") + key + "\"");
  }
  return j[key].get<std::size_t>();
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

long long parse_int(const std::string& field, std::size_t line) {
  long long value = 0;
  const std::string t = trim(field);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": expected an integer, got \"" + t + "\"");
  }
  return value;
}

void write_bars(std::ostream& os, const ComplexMatrix& m, const std::vector<std::string>& labels) {
  os << "row_label,col_label,abs,phase\n";
  const auto precision = os.precision(12);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double mag = std::abs(m(r, c));
      // Phase of numerically zero elements is meaningless; pin it to 0.
      const double phase = mag > 1e-12 ? std::arg(m(r, c)) : 0.0;
      os << labels[r] << ',' << labels[c] << ',' << mag << ',' << phase << '\n';
    }
  }
  os.precision(precision);
}

}  // namespace

Json matrix_to_json(const ComplexMatrix& m) {
  Json re = Json::array();
  Json im = Json::array();
  for (const Complex& z : m.entries()) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

ComplexMatrix matrix_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "matrix JSON must be an object");
  const std::size_t rows = positive_size(j, "rows");
  const std::size_t cols = positive_size(j, "cols");
  const auto re = number_array(j, "re", rows * cols);
  const auto im = number_array(j, "im", rows * cols);
  std::vector<Complex> entries(rows * cols);
  for (std::size_t k = 0; k < entries.size(); ++k) entries[k] = {re[k], im[k]};
  return ComplexMatrix(rows, cols, std::move(entries));
}

Json state_to_json(const QutritPureState& psi) {
  Json re = Json::array();
  Json im = Json::array();
  for (const Complex& a : psi.amplitudes()) {
    re.push_back(a.real());
    im.push_back(a.imag());
  }
  return Json{{"re", re}, {"im", im}};
}

QutritPureState state_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "state JSON must be an object");
  const auto re = number_array(j, "re", 3);
  const auto im = number_array(j, "im", 3);
  return QutritPureState({Complex(re[0], im[0]), Complex(re[1], im[1]), Complex(re[2], im[2])});
}

Json choi_to_json(const ProcessChoi& chi, std::optional<Complex> g0) {
  Json j = matrix_to_json(chi.matrix());
  j["basis"] = "sys⊗aux";
  if (g0) j["g0"] = Json{{"re", g0->real()}, {"im", g0->imag()}};
  return j;
}

ProcessChoi choi_from_json(const Json& j) {
  ComplexMatrix m = matrix_from_json(j);
  if (j.contains("basis") && j["basis"] != "sys⊗aux") {
    throw Error(ErrorCode::ParseError, "unsupported Choi basis " + j["basis"].dump());
  }
  return ProcessChoi(std::move(m));
}

Json preparation_set_json() {
  Json out = Json::array();
  for (const PreparationUnitary& u : preparation_set()) {
    Json j = matrix_to_json(u.matrix);
    j["index"] = u.index;
    j["sequence"] = u.sequence();
    j["state"] = state_to_json(u.state);
    out.push_back(std::move(j));
  }
  return out;
}

void write_choi_bars(std::ostream& os, const ProcessChoi& chi) {
  std::vector<std::string> labels;
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 3; ++a) labels.push_back(std::to_string(s) + std::to_string(a));
  write_bars(os, chi.matrix(), labels);
}

void write_density_bars(std::ostream& os, const ComplexMatrix& rho) {
  require_shape(rho, 3, 3, "qutrit density matrix");
  write_bars(os, rho, {"0", "1", "2"});
}

void write_dataset_csv(std::ostream& os, const TomographyDataset& data) {
  os << "i,j,n,N\n";
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j)
      os << i + 1 << ',' << j + 1 << ',' << data.count(i, j) << ',' << data.shots() << '\n';
}

TomographyDataset read_dataset_csv(std::istream& is, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::array<int, 81> counts{};
  std::array<bool, 81> seen{};
  long long shots = -1;
  std::size_t rows = 0;

  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header) {
      std::string compact;
      for (char c : t)
        if (c != ' ' && c != '\t') compact += c;
      if (compact != "i,j,n,N") {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line_no) + ": expected header \"i,j,n,N\"");
      }
      header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 4) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 4 fields, got " +
                                             std::to_string(fields.size()));
    }
    const long long i = parse_int(fields[0], line_no);
    const long long j = parse_int(fields[1], line_no);
    const long long n = parse_int(fields[2], line_no);
    const long long big_n = parse_int(fields[3], line_no);
    if (i < 1 || i > 9 || j < 1 || j > 9) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": index out of 1..9");
    }
    if (big_n < 1 || big_n > std::numeric_limits<int>::max()) {
      throw Error(ErrorCode::RangeError, "line " + std::to_string(line_no) + ": N must be a positive int");
    }
    if (n < 0 || n > big_n) {
      throw Error(ErrorCode::RangeError, "line " + std::to_string(line_no) + ": n = " + std::to_string(n) +
                                             " outside [0, N = " + std::to_string(big_n) + "]");
    }
    if (shots >= 0 && big_n != shots) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": N differs from earlier rows");
    }
    shots = big_n;
    const std::size_t k = grid_index(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1));
    if (seen[k]) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": duplicate cell (" +
                                             std::to_string(i) + "," + std::to_string(j) + ")");
    }
    seen[k] = true;
    counts[k] = static_cast<int>(n);
    ++rows;
  }
  if (!header) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no + 1) + ": missing header");
  if (rows != 81) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 81 data rows, got " +
                                           std::to_string(rows));
  }
  return TomographyDataset(counts, static_cast<int>(shots), TomographyDataset::Loaded{source});
}

TomographyDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_dataset_csv(in, path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + p.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace luders
