#include "tbq/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tbq {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row(std::vector<std::string> fields) {
  if (fields.size() != header_.size()) throw ConfigError("CSV row width differs from the header");
  rows_.push_back(std::move(fields));
  return *this;
}

std::string CsvTable::str() const {
  std::ostringstream os;
  auto line = [&os](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os << ',';
      os << csv_escape(fields[i]);
    }
    os << "\r\n";
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return os.str();
}

void CsvTable::write(const std::filesystem::path& path) const { write_text(path, str()); }

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw ConfigError("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json json_number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

nlohmann::json density_json(const CMat& rho) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    nlohmann::json m = nlohmann::json::array();
    for (Eigen::Index j = 0; j < rho.cols(); ++j) {
      r.push_back(rho(i, j).real());
      m.push_back(rho(i, j).imag());
    }
    re.push_back(r);
    im.push_back(m);
  }
  return {{"dimension", rho.rows()}, {"real", re}, {"imag", im}};
}

nlohmann::json state_json(const TimeBinState& psi) {
  nlohmann::json amps = nlohmann::json::array();
  for (Eigen::Index i = 0; i < psi.amplitudes().size(); ++i) {
    amps.push_back({psi.amplitudes()(i).real(), psi.amplitudes()(i).imag()});
  }
  return {{"bin_times", psi.bin_times()},
          {"amplitudes", amps},
          {"mean_photon", psi.mean_photon()},
          {"pulse_overlap", psi.pulse_overlap()}};
}

}  // namespace tbq
