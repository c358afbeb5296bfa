// CSV (RFC 4180 quoting) and JSON output helpers.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tbq/core.hpp"

namespace tbq {

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite.
std::string format_number(double x);

std::string csv_escape(const std::string& field);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& row(std::vector<std::string> fields);
  std::string str() const;
  void write(const std::filesystem::path& path) const;
  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Variadic row builder: numbers go through format_number.
inline std::string cell(const std::string& s) { return s; }
inline std::string cell(const char* s) { return s; }
inline std::string cell(bool b) { return b ? "true" : "false"; }
inline std::string cell(double x) { return format_number(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(long x) { return std::to_string(x); }
inline std::string cell(long long x) { return std::to_string(x); }
inline std::string cell(unsigned long x) { return std::to_string(x); }
inline std::string cell(unsigned long long x) { return std::to_string(x); }

template <typename... Ts>
std::vector<std::string> cells(const Ts&... xs) {
  return {cell(xs)...};
}

void write_text(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Finite doubles as numbers, non-finite as null.
nlohmann::json json_number(double x);

/// {"dimension", "real": [[...]], "imag": [[...]]}, row-major.
nlohmann::json density_json(const CMat& rho);

nlohmann::json state_json(const TimeBinState& psi);

}  // namespace tbq
