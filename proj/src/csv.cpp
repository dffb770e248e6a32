#include "bsde/csv.hpp"

#include <cmath>
#include <cstdio>

namespace bsde {

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", value);
  return buf;
}

std::string matrix_entry_name(std::string_view prefix, Eigen::Index i, Eigen::Index j) {
  return std::string(prefix) + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
}

void CsvWriter::separator() {
  if (row_started_) out_ << ',';
  row_started_ = true;
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (const auto& c : columns) field(std::string_view(c));
  end_row();
}

CsvWriter& CsvWriter::field(double value) {
  separator();
  out_ << format_real(value);
  return *this;
}

CsvWriter& CsvWriter::field(int value) {
  separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::field(long long value) {
  separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::field(std::uint64_t value) {
  separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::field(std::string_view value) {
  separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::matrix_fields(const Eigen::MatrixXd& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) field(M(i, j));
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  row_started_ = false;
}

}  // namespace bsde
