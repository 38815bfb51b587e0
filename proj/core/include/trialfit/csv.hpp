#ifndef TRIALFIT_CSV_HPP
#define TRIALFIT_CSV_HPP

#include <optional>
#include <string>
#include <vector>

namespace trialfit::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;            // -1 if absent
  int require_column(const std::string& name) const;    // throws MissingColumn
};

Table read_file(const std::string& path);
Table read_string(const std::string& text);

// Shortest round-trip decimal representation (std::to_chars), so that
// export -> ingest reproduces values bitwise and reruns are byte-identical.
std::string format_double(double v);

double parse_double(const std::string& s, const std::string& context);
long parse_long(const std::string& s, const std::string& context);

class Writer {
 public:
  explicit Writer(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  std::string str() const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace trialfit::csv

#endif
