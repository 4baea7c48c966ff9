#include "fedfair/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <set>
#include <stdexcept>

#include "fedfair/csv.hpp"

namespace fedfair {
namespace {

double mean_of(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

double population_variance(const std::vector<double>& v, double mean) {
    double sum = 0.0;
    for (double x : v) sum += (x - mean) * (x - mean);
    return sum / static_cast<double>(v.size());
}

std::string join_ids(const std::set<int>& ids) {
    std::string out;
    for (int id : ids) {
        if (!out.empty()) out += ", ";
        out += std::to_string(id);
    }
    return out;
}

// ids covered by `map` must equal `expected`; names the offenders otherwise
void check_id_set(const std::set<int>& expected, const std::map<int, double>& map,
                  const std::string& what) {
    std::set<int> missing = expected;
    std::set<int> extra;
    for (const auto& [id, acc] : map) {
        (void)acc;
        if (missing.erase(id) == 0) extra.insert(id);
    }
    if (missing.empty() && extra.empty()) return;
    std::string msg = "inconsistent client sets: " + what;
    if (!missing.empty()) msg += " missing clients " + join_ids(missing);
    if (!extra.empty()) msg += (missing.empty() ? " has" : ", and has") +
                               std::string(" unknown clients ") + join_ids(extra);
    throw std::invalid_argument(msg);
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

std::optional<double> accuracy(const ParamVector& params, const ModelSpec& spec,
                               const Batch& test) {
    if (test.empty()) return std::nullopt;
    const Matrix logits = forward(params, spec, test.features);
    size_t correct = 0;
    for (size_t r = 0; r < logits.rows; ++r) {
        const double* row = logits.row(r);
        size_t best = 0;
        for (size_t c = 1; c < logits.cols; ++c)
            if (row[c] > row[best]) best = c;
        if (static_cast<int>(best) == test.labels[r]) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
}

double relative_accuracy(double model_acc, double local_acc) {
    return model_acc - local_acc;
}

FairnessReport population_stats(std::vector<ClientValue> values) {
    if (values.empty()) throw std::invalid_argument("population_stats: no values");
    std::sort(values.begin(), values.end(), [](const ClientValue& a, const ClientValue& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.client_id < b.client_id;
    });

    const size_t n = values.size();
    const size_t decile = (n + 9) / 10;
    std::vector<double> all, best, worst;
    all.reserve(n);
    for (const auto& cv : values) all.push_back(cv.value);
    best.assign(all.begin(), all.begin() + static_cast<long>(decile));
    worst.assign(all.end() - static_cast<long>(decile), all.end());

    FairnessReport report;
    report.avg_pct = mean_of(all);
    report.b10_pct = mean_of(best);
    report.w10_pct = mean_of(worst);
    report.var_avg = population_variance(all, report.avg_pct);
    report.var_b = population_variance(best, report.b10_pct);
    report.var_w = population_variance(worst, report.w10_pct);
    for (double v : all)
        if (v < 0.0) ++report.count_neg;
    return report;
}

std::vector<ClientRow> merge_client_rows(const std::string& objective,
                                         const std::map<int, size_t>& n_train,
                                         const std::map<int, double>& fed,
                                         const std::map<int, double>& local,
                                         const std::vector<MethodAccuracies>& adapted) {
    if (n_train.empty()) throw std::invalid_argument("merge_client_rows: no clients");
    std::set<int> ids;
    for (const auto& [id, n] : n_train) {
        (void)n;
        ids.insert(id);
    }
    check_id_set(ids, fed, "fed accuracy");
    check_id_set(ids, local, "local accuracy");
    for (const auto& m : adapted) check_id_set(ids, m.acc, "adapt method " + m.method);

    std::vector<ClientRow> rows;
    rows.reserve(ids.size());
    for (int id : ids) {
        ClientRow row;
        row.objective = objective;
        row.client_id = id;
        row.n_train = n_train.at(id);
        row.fed_acc = fed.at(id);
        row.local_acc = local.at(id);
        for (const auto& m : adapted) row.adapted.push_back(m.acc.at(id));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_fixed3(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    if (std::strcmp(buf, "-0.000") == 0) return "0.000";
    return buf;
}

void write_clients_csv(const std::string& path, const ClientsTable& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "objective,client_id,n_train,fed_acc,local_acc";
    for (const auto& m : table.methods) out << ",adapt_" << m << "_acc";
    out << '\n';
    for (const auto& row : table.rows) {
        if (row.adapted.size() != table.methods.size())
            throw std::invalid_argument("clients table row for client " +
                                        std::to_string(row.client_id) +
                                        " does not match the method list");
        out << row.objective << ',' << row.client_id << ',' << row.n_train << ','
            << format_fixed3(row.fed_acc) << ',' << format_fixed3(row.local_acc);
        for (double acc : row.adapted) out << ',' << format_fixed3(acc);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

ClientsTable read_clients_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    ClientsTable table;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = csv::split(line);
        const std::string where = path + ":" + std::to_string(lineno);
        if (lineno == 1) {
            const std::vector<std::string_view> fixed = {"objective", "client_id", "n_train",
                                                         "fed_acc", "local_acc"};
            if (fields.size() < fixed.size())
                throw std::runtime_error(where + ": bad header");
            for (size_t i = 0; i < fixed.size(); ++i)
                if (fields[i] != fixed[i])
                    throw std::runtime_error(where + ": bad header, expected column '" +
                                             std::string(fixed[i]) + "'");
            for (size_t i = fixed.size(); i < fields.size(); ++i) {
                const std::string_view col = fields[i];
                constexpr std::string_view prefix = "adapt_";
                constexpr std::string_view suffix = "_acc";
                if (col.size() <= prefix.size() + suffix.size() ||
                    col.substr(0, prefix.size()) != prefix ||
                    col.substr(col.size() - suffix.size()) != suffix)
                    throw std::runtime_error(where + ": bad adapt column '" +
                                             std::string(col) + "'");
                table.methods.push_back(
                    std::string(col.substr(prefix.size(),
                                           col.size() - prefix.size() - suffix.size())));
            }
            continue;
        }
        if (fields.size() != 5 + table.methods.size())
            throw std::runtime_error(where + ": expected " +
                                     std::to_string(5 + table.methods.size()) +
                                     " fields, got " + std::to_string(fields.size()));
        ClientRow row;
        row.objective = std::string(fields[0]);
        if (row.objective.empty()) throw std::runtime_error(where + ": empty objective");
        row.client_id = static_cast<int>(csv::to_int(fields[1], where));
        row.n_train = static_cast<size_t>(csv::to_int(fields[2], where));
        row.fed_acc = csv::to_double(fields[3], where);
        row.local_acc = csv::to_double(fields[4], where);
        for (size_t i = 0; i < table.methods.size(); ++i)
            row.adapted.push_back(csv::to_double(fields[5 + i], where));
        table.rows.push_back(std::move(row));
    }
    if (lineno == 0) throw std::runtime_error(path + ": empty file");
    if (table.rows.empty()) throw std::runtime_error(path + ": no client rows");
    return table;
}

std::vector<ReportRow> build_report(const ClientsTable& table, ReportMode mode) {
    if (table.rows.empty()) throw std::invalid_argument("build_report: no client rows");

    std::vector<std::string> objectives;
    for (const auto& row : table.rows)
        if (std::find(objectives.begin(), objectives.end(), row.objective) == objectives.end())
            objectives.push_back(row.objective);

    std::vector<ReportRow> report;
    for (const auto& objective : objectives) {
        std::vector<const ClientRow*> group;
        std::set<int> seen;
        for (const auto& row : table.rows) {
            if (row.objective != objective) continue;
            if (row.adapted.size() != table.methods.size())
                throw std::invalid_argument("build_report: client " +
                                            std::to_string(row.client_id) +
                                            " does not match the method list");
            if (!seen.insert(row.client_id).second)
                throw std::invalid_argument("build_report: duplicate client " +
                                            std::to_string(row.client_id) + " under " +
                                            objective);
            group.push_back(&row);
        }

        const auto stats_of = [&](const std::function<double(const ClientRow&)>& value) {
            std::vector<ClientValue> values;
            values.reserve(group.size());
            for (const ClientRow* row : group)
                values.push_back({row->client_id, value(*row)});
            return population_stats(std::move(values));
        };

        const bool relative = mode == ReportMode::relative;
        report.push_back({objective, "none", stats_of([&](const ClientRow& r) {
                              return relative ? r.fed_acc - r.local_acc : r.fed_acc;
                          })});
        for (size_t m = 0; m < table.methods.size(); ++m)
            report.push_back({objective, table.methods[m], stats_of([&](const ClientRow& r) {
                                  return relative ? r.adapted[m] - r.local_acc : r.adapted[m];
                              })});
        if (!relative)
            report.push_back({objective, "local",
                              stats_of([](const ClientRow& r) { return r.local_acc; })});
    }
    return report;
}

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "objective,adapt,avg_pct,acc_lt_0,b10_pct,w10_pct,var_avg,var_b,var_w\n";
    for (const auto& row : rows) {
        out << row.objective << ',' << row.adapt << ',' << format_fixed3(row.stats.avg_pct)
            << ',' << row.stats.count_neg << ',' << format_fixed3(row.stats.b10_pct) << ','
            << format_fixed3(row.stats.w10_pct) << ',' << format_fixed3(row.stats.var_avg)
            << ',' << format_fixed3(row.stats.var_b) << ','
            << format_fixed3(row.stats.var_w) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace fedfair
