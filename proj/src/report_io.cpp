#include "nlrd/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace nlrd {

namespace fs = std::filesystem;

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

OutputSet::OutputSet(fs::path directory) : directory_(std::move(directory)) {
  if (!fs::exists(directory_)) {
    fs::create_directories(directory_);
    created_directory_ = true;
  } else if (!fs::is_directory(directory_)) {
    throw std::runtime_error("output path '" + directory_.string() + "' is not a directory");
  }
}

OutputSet::~OutputSet() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& f : files_) fs::remove(f, ec);
  if (created_directory_) fs::remove(directory_, ec);  // only if left empty
}

fs::path OutputSet::path(const std::string& name) {
  fs::path p = directory_ / name;
  files_.push_back(p);
  return p;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void write_fields_csv(std::ostream& out, const std::vector<std::string>& species,
                      const PeriodicGrid& grid, const std::vector<double>& times,
                      const std::vector<std::vector<Field>>& fields) {
  if (times.size() != fields.size()) throw std::invalid_argument("times and fields differ in length");
  out << "time,species,index_1,index_2,value\n";
  for (std::size_t s = 0; s < times.size(); ++s) {
    const std::string t = format_number(times[s]);
    for (std::size_t j = 0; j < fields[s].size(); ++j) {
      const Field& f = fields[s][j];
      for (std::size_t v = 0; v < f.size(); ++v) {
        const auto idx = grid.multi_index(v);
        out << t << ',' << species.at(j) << ',' << idx[0] << ',';
        if (grid.dimension == 2) out << idx[1];
        out << ',' << format_number(f[v]) << '\n';
      }
    }
  }
}

void write_masses_csv(std::ostream& out, const std::vector<MassRow>& rows) {
  out << "time,model,species,mass,stderr\n";
  for (const auto& r : rows) {
    out << format_number(r.time) << ',' << r.model << ',' << r.species << ','
        << format_number(r.mass) << ',';
    if (r.has_stderr) out << format_number(r.stderr_value);
    out << '\n';
  }
}

void write_convergence_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "epsilon";
  for (const auto& s : report.species) out << ",err_" << s;
  out << '\n';
  for (std::size_t k = 0; k < report.epsilons.size(); ++k) {
    out << format_number(report.epsilons[k]);
    for (double e : report.errors[k]) out << ',' << format_number(e);
    out << '\n';
  }
}

void write_slopes_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "species,slope\n";
  for (std::size_t j = 0; j < report.species.size(); ++j)
    out << report.species[j] << ',' << format_number(report.slopes[j]) << '\n';
}

std::vector<MassRow> comparison_mass_rows(const ComparisonReport& report) {
  std::vector<MassRow> rows;
  for (std::size_t s = 0; s < report.save_times.size(); ++s) {
    const double t = report.save_times[s];
    for (std::size_t j = 0; j < report.species.size(); ++j)
      rows.push_back({t, "SM", report.species[j], report.sm_masses[s][j], 0.0, false});
    for (std::size_t j = 0; j < report.species.size(); ++j)
      rows.push_back({t, "MFM", report.species[j], report.mfm_masses[s][j], 0.0, false});
    for (std::size_t j = 0; j < report.species.size(); ++j)
      rows.push_back({t, "PBSRD", report.species[j], report.pbsrd.mean_masses[s][j],
                      report.pbsrd.stderr_masses[s][j], true});
  }
  return rows;
}

}  // namespace nlrd
