#pragma once

// Experiment drivers behind the command-line tool. Each driver reads a flat
// config, writes CSV (and optionally SVG) files into the output directory and
// reports run-level failures separately from hard errors, which throw.
//
// Seed scheme: every independent unit of work k (a seed replicate, a grid
// point, a block) draws from derive_seed(global_seed, k) or a stream nested
// under it, so outputs do not depend on the number of worker threads.

#include <cstdint>
#include <string>
#include <vector>

#include "blockspec/config.hpp"

namespace blockspec {

struct ExperimentManifest {
  std::string subcommand;
  std::string config_path;  // empty: defaults only
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool cheap = false;
  bool strict = false;
  Config config;

  /// Full manifest as key=value text, written to manifest.txt.
  std::string echo() const;
};

struct ExperimentResult {
  std::vector<std::string> files;     // written, relative to out_dir, in write order
  std::vector<std::string> warnings;
  std::vector<std::string> failures;  // diverged runs, all-diverged grids, failed checks
  std::vector<std::string> summary;   // human-readable lines
};

ExperimentResult run_spectrum(const ExperimentManifest& m);
ExperimentResult run_heatmap(const ExperimentManifest& m);
ExperimentResult run_quadlab(const ExperimentManifest& m);
ExperimentResult run_toynet(const ExperimentManifest& m);

/// Dispatches on m.subcommand.
ExperimentResult run_experiment(const ExperimentManifest& m);

/// 1 when strict mode is on and any run failed, else 0.
int exit_code(const ExperimentManifest& m, const ExperimentResult& r);

double median(std::vector<double> v);

}  // namespace blockspec
