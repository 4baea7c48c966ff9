#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedfair/matrix.hpp"
#include "fedfair/model.hpp"

namespace fedfair {

// Argmax classification accuracy in percent; ties pick the lowest class
// index. Empty test sets have no accuracy and are excluded from stats.
std::optional<double> accuracy(const ParamVector& params, const ModelSpec& spec,
                               const Batch& test);

double relative_accuracy(double model_acc, double local_acc);

struct ClientValue {
    int client_id = 0;
    double value = 0.0;
};

struct FairnessReport {
    double avg_pct = 0.0;
    int count_neg = 0;
    double b10_pct = 0.0;
    double w10_pct = 0.0;
    double var_avg = 0.0;
    double var_b = 0.0;
    double var_w = 0.0;
};

// Mean, negative count, best/worst decile means and population variances.
// Deciles hold ceil(N/10) clients, ranked by value with id as tiebreak.
FairnessReport population_stats(std::vector<ClientValue> values);

struct ClientRow {
    std::string objective;
    int client_id = 0;
    size_t n_train = 0;
    double fed_acc = 0.0;
    double local_acc = 0.0;
    // parallel to ClientsTable::methods
    std::vector<double> adapted;
};

struct ClientsTable {
    std::vector<std::string> methods;
    std::vector<ClientRow> rows;
};

struct MethodAccuracies {
    std::string method;
    std::map<int, double> acc;
};

// Joins per-model accuracy maps into table rows; every map must cover
// exactly the ids in n_train or the divergent ids are named in the error.
std::vector<ClientRow> merge_client_rows(const std::string& objective,
                                         const std::map<int, size_t>& n_train,
                                         const std::map<int, double>& fed,
                                         const std::map<int, double>& local,
                                         const std::vector<MethodAccuracies>& adapted);

void write_clients_csv(const std::string& path, const ClientsTable& table);
ClientsTable read_clients_csv(const std::string& path);

enum class ReportMode { absolute, relative };

struct ReportRow {
    std::string objective;
    std::string adapt;
    FairnessReport stats;
};

// One row per (objective, adapt method). Relative rows subtract the local
// baseline; absolute rows report raw accuracies plus a closing "local" row.
std::vector<ReportRow> build_report(const ClientsTable& table, ReportMode mode);

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows);

// Fixed-point with 3 decimals; negative zero collapses to "0.000".
std::string format_fixed3(double v);

}  // namespace fedfair
