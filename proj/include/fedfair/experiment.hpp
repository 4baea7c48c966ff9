#pragma once

#include <string>
#include <vector>

#include "fedfair/config.hpp"
#include "fedfair/metrics.hpp"
#include "fedfair/runtime.hpp"

namespace fedfair {

inline constexpr const char* kFedfairVersion = "0.1.0";

// Writes output files through a ".partial" staging suffix inside one
// directory. stage() registers a file and returns the temporary path the
// caller should write; commit() renames every staged file to its final
// name. A run that fails before commit leaves only .partial files behind,
// so a directory with bare names always holds a complete, consistent set.
class ArtifactStager {
  public:
    explicit ArtifactStager(std::string dir);

    const std::string& dir() const { return dir_; }
    std::string stage(const std::string& name);
    void commit();

  private:
    std::string dir_;
    std::vector<std::string> staged_;
};

// "checkpoint.bin" for a single objective, "checkpoint_<label>.bin" when
// the config sweeps several.
std::string checkpoint_name(const ExperimentConfig& cfg, const ObjectiveSpec& objective);

struct ObjectiveRun {
    ObjectiveSpec objective;
    TrainResult training;
};

struct ExperimentResult {
    std::vector<ObjectiveRun> runs;
    ClientsTable clients;
};

// Full pipeline into out_dir: federated training per objective, local
// adaptation of every method plus the local-only baseline, and the report
// files. Artifacts: manifest.json, checkpoint files, history.csv,
// clients.csv, report.csv, report_absolute.csv.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

// Training only: manifest.json, checkpoint files and history.csv.
std::vector<ObjectiveRun> run_train_stage(const ExperimentConfig& cfg,
                                          const std::string& out_dir);

// Adaptation only: reads the checkpoints a train stage left in out_dir and
// writes clients.csv. The config must describe the same model and seed.
ClientsTable run_adapt_stage(const ExperimentConfig& cfg, const std::string& out_dir);

// Report only: reads a clients.csv and writes report.csv (relative
// accuracy) plus report_absolute.csv next to it in out_dir.
void run_report_stage(const std::string& clients_csv, const std::string& out_dir);

}  // namespace fedfair
