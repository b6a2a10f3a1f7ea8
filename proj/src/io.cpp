#include "hscore/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hscore {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open for writing: " + path);
  out.precision(17);
  return out;
}

void write_metadata(std::ofstream& out, const Metadata& metadata) {
  for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const Metadata& metadata) {
  if (data.t.size() != data.y.rows()) throw InvalidInput("write_dataset_csv: length mismatch");
  std::ofstream out = open_out(path);
  write_metadata(out, metadata);
  out << "t";
  for (int k = 0; k < data.dim_y(); ++k) out << ",y" << (k + 1);
  out << "\n";
  for (int i = 0; i < data.size(); ++i) {
    out << data.t[i];
    for (int k = 0; k < data.dim_y(); ++k) out << "," << data.y(i, k);
    out << "\n";
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open dataset: " + path);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split_csv(line);
    break;
  }
  if (header.empty() || header[0] != "t")
    throw InvalidInput("dataset header must start with t: " + path);
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1) throw InvalidInput("dataset has no observation columns: " + path);
  for (int k = 0; k < d; ++k)
    if (header[k + 1] != "y" + std::to_string(k + 1))
      throw InvalidInput("dataset observation columns must be y1,y2,...: " + path);

  std::vector<double> ts;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = split_csv(line);
    if (static_cast<int>(f.size()) != d + 1)
      throw InvalidInput("dataset row has wrong arity: " + path);
    try {
      ts.push_back(std::stod(f[0]));
      std::vector<double> row(d);
      for (int k = 0; k < d; ++k) row[k] = std::stod(f[k + 1]);
      rows.push_back(std::move(row));
    } catch (const std::exception&) {
      throw InvalidInput("dataset row is not numeric: " + path);
    }
  }

  Dataset data;
  data.t.resize(static_cast<int>(ts.size()));
  data.y.resize(static_cast<int>(rows.size()), d);
  for (size_t i = 0; i < ts.size(); ++i) {
    data.t[static_cast<int>(i)] = ts[i];
    for (int k = 0; k < d; ++k) data.y(static_cast<int>(i), k) = rows[i][k];
  }
  return data;
}

void write_study_csv(const std::string& path, const StudyResult& result,
                     const Metadata& metadata) {
  std::ofstream out = open_out(path);
  write_metadata(out, metadata);
  out << "study,replication,model,t,log_evidence_cum,h_cum\n";
  for (const ReplicationSet& rs : result.models)
    for (size_t rep = 0; rep < rs.traces.size(); ++rep)
      for (const TraceRow& row : rs.traces[rep].rows)
        out << result.study << "," << rep << "," << rs.model << "," << row.t << ","
            << row.logev_cum << "," << row.h_cum << "\n";
}

void write_summary_json(const std::string& path, const StudyResult& result,
                        const Metadata& metadata) {
  nlohmann::json j;
  j["study"] = result.study;
  for (const auto& [k, v] : metadata) j["meta"][k] = v;
  for (const auto& [k, v] : result.summary) {
    if (std::isfinite(v))
      j["summary"][k] = v;
    else
      j["summary"][k] = std::string(v > 0 ? "inf" : (v < 0 ? "-inf" : "nan"));
  }
  std::vector<std::string> names;
  for (const ReplicationSet& rs : result.models) names.push_back(rs.model);
  j["models"] = names;
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_phase_plane_csv(const std::string& path, const PhasePlaneResult& result,
                           const Metadata& metadata) {
  std::ofstream out = open_out(path);
  write_metadata(out, metadata);
  out << "mu,sigma_sq,fisher_gap,kl_gap\n";
  for (int i = 0; i < result.mu_grid.size(); ++i)
    for (int j = 0; j < result.s2_grid.size(); ++j)
      out << result.mu_grid[i] << "," << result.s2_grid[j] << "," << result.fisher_gap(i, j)
          << "," << result.kl_gap(i, j) << "\n";
}

}  // namespace hscore
