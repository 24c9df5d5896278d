#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "nlrd/experiments.hpp"

namespace nlrd {

/// Shortest round-trip text for a double ("%.17g").
std::string format_number(double value);

/// Output files of one command. Files created through `path()` are deleted
/// again unless `commit()` is called, so a failed run leaves nothing behind.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path directory);
  ~OutputSet();
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  std::filesystem::path path(const std::string& name);
  void commit() { committed_ = true; }

 private:
  std::filesystem::path directory_;
  bool created_directory_ = false;
  std::vector<std::filesystem::path> files_;
  bool committed_ = false;
};

/// Header: time,species,index_1,index_2,value (index_2 empty in 1d).
void write_fields_csv(std::ostream& out, const std::vector<std::string>& species,
                      const PeriodicGrid& grid, const std::vector<double>& times,
                      const std::vector<std::vector<Field>>& fields);

struct MassRow {
  double time = 0.0;
  std::string model;
  std::string species;
  double mass = 0.0;
  double stderr_value = 0.0;
  bool has_stderr = false;
};

/// Header: time,model,species,mass,stderr (stderr empty for deterministic models).
void write_masses_csv(std::ostream& out, const std::vector<MassRow>& rows);

/// epsilon,err_<species>... one row per width.
void write_convergence_csv(std::ostream& out, const ConvergenceReport& report);
/// species,slope
void write_slopes_csv(std::ostream& out, const ConvergenceReport& report);

/// Mass rows for every model of a comparison, ordered by time then model.
std::vector<MassRow> comparison_mass_rows(const ComparisonReport& report);

void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace nlrd
