#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace bsde {

/// Minimal comma-separated writer. Reals are always written as "%.17e"
/// (C locale, round-trip precision) so output is byte-stable.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& columns);
  CsvWriter& field(double value);
  CsvWriter& field(int value);
  CsvWriter& field(long long value);
  CsvWriter& field(std::uint64_t value);
  CsvWriter& field(std::string_view value);
  CsvWriter& field(const char* value) { return field(std::string_view(value)); }
  /// Row-major flattening.
  CsvWriter& matrix_fields(const Eigen::MatrixXd& M);
  void end_row();

 private:
  void separator();

  std::ostream& out_;
  bool row_started_ = false;
};

std::string format_real(double value);
std::string matrix_entry_name(std::string_view prefix, Eigen::Index i, Eigen::Index j);

}  // namespace bsde
