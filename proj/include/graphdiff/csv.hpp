#ifndef GRAPHDIFF_CSV_HPP
#define GRAPHDIFF_CSV_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace graphdiff {

/// 17 significant digits, '.' separator, independent of the C++ locale.
std::string format_number(double v);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;  // throws if absent
  bool has_column(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Minimal gnuplot script plotting every column against the first one.
void write_plot_script(const std::filesystem::path& csv, const CsvTable& table, bool log_scale = false);

}  // namespace graphdiff

#endif  // GRAPHDIFF_CSV_HPP
