#ifndef HSCORE_IO_HPP
#define HSCORE_IO_HPP

#include <map>
#include <string>
#include <vector>

#include "hscore/common.hpp"
#include "hscore/experiments.hpp"
#include "hscore/trace.hpp"

namespace hscore {

// Dataset file layout: optional `# key=value` metadata lines, then a header
// `t,y1[,y2,...]`, then one row per observation.  The t column carries the
// observation epoch (a plain 1..T index for regularly spaced data).
struct Dataset {
  VectorXd t;
  MatrixXd y;

  int size() const { return static_cast<int>(y.rows()); }
  int dim_y() const { return static_cast<int>(y.cols()); }
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const Metadata& metadata = {});
Dataset read_dataset_csv(const std::string& path);

// Long-format study table: study, replication, model, t, log_evidence_cum,
// h_cum; metadata as `#` comment lines before the header.
void write_study_csv(const std::string& path, const StudyResult& result,
                     const Metadata& metadata = {});

// Summary JSON: metadata strings plus the study's scalar summary map.
void write_summary_json(const std::string& path, const StudyResult& result,
                        const Metadata& metadata = {});

// Phase-plane table: mu, sigma_sq, fisher_gap, kl_gap per grid node.
void write_phase_plane_csv(const std::string& path, const PhasePlaneResult& result,
                           const Metadata& metadata = {});

}  // namespace hscore

#endif
