#pragma once

#include "fbmfg/fixed_point.hpp"
#include "fbmfg/run_config.hpp"

#include <string>
#include <vector>

namespace fbmfg {

/// Exit codes shared by the CLI and the library entry points.
enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_diverged = 2, exit_detrunc = 3 };

TorusGrid grid_of(const RunConfig& c);
PicardOptions options_of(const RunConfig& c);

struct ModelSetup {
    CouplingModel model;
    TruncationParams truncation;
};

/// Builds the configured model on `grid` and selects K (or checks the
/// configured one). Throws ConfigError for inconsistent parameters.
ModelSetup build_setup(const RunConfig& c, const TorusGrid& grid);

/// 0 converged with de-truncation, 3 converged without it, 2 otherwise.
int exit_code_for(const IterationReport& r);

struct RunOutcome {
    int exit_code = exit_ok;
    PicardResult result;
    std::string manifest;  // JSON text
};

/// Solves one configuration and writes series.csv, the field snapshots and
/// manifest.json into `out_dir` (config's outputs.dir when empty).
RunOutcome run(const RunConfig& c, const std::string& out_dir = "");

struct SweepOutcome {
    int exit_code = exit_ok;
    std::vector<SweepRow> rows;
};

/// horizon_sweep at the configuration's dt; writes sweep.csv and
/// sweep_manifest.json.
SweepOutcome sweep(const RunConfig& c, const std::vector<double>& T_list, const std::string& out_dir = "",
                   int threads = 1);

/// Worker cap from FBMFG_THREADS, else the hardware concurrency (at least 1).
int thread_cap();

std::string series_csv(const IterationReport& r);
std::string sweep_csv(const std::vector<SweepRow>& rows);
/// Grid snapshot "x,u,m" (or "x,y,u,m") of one slice.
std::string field_csv(const Field& u, const Field& m);
std::string sha256_hex(const std::string& bytes);

}  // namespace fbmfg
