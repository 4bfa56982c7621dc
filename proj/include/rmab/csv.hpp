#pragma once

// CSV emission: every file carries the build identifier, the resolved
// configuration, and the master seed, so a data row can always be traced
// back to the run that produced it. Floats are printed at 12 significant
// digits, which makes re-runs byte-identical.

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#ifndef RMAB_BUILD_ID
#define RMAB_BUILD_ID "unknown"
#endif

namespace rmab {

inline std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::string& command,
            const nlohmann::json& resolved_config, std::uint64_t seed)
      : out_(out) {
    out_ << "# build: " << RMAB_BUILD_ID << "\n";
    out_ << "# command: " << command << "\n";
    out_ << "# config: " << resolved_config.dump() << "\n";
    out_ << "# seed: " << seed << "\n";
  }

  void header(const std::vector<std::string>& columns) {
    write_cells(columns);
  }

  void row(const std::vector<std::string>& cells) { write_cells(cells); }

 private:
  void write_cells(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ostream& out_;
};

}  // namespace rmab
