#include "fedfair/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string_view>

#include "fedfair/csv.hpp"
#include "fedfair/rng.hpp"

namespace fs = std::filesystem;

namespace fedfair {
namespace {

void check_fraction(double v, const std::string& name) {
    if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument(name + " must be in [0, 1]");
}

// Integer class counts for one client: largest remainder against the drawn
// proportions, capped by what is left in each class pool. Any shortfall the
// caps create is pushed onto the classes with the most spare capacity.
std::vector<size_t> capped_counts(size_t want_total, const std::vector<double>& props,
                                  const std::vector<size_t>& remaining) {
    const size_t classes = props.size();
    std::vector<size_t> take(classes, 0);
    std::vector<double> frac(classes, 0.0);
    size_t assigned = 0;
    for (size_t c = 0; c < classes; ++c) {
        const double ideal = props[c] * static_cast<double>(want_total);
        const double base = std::floor(ideal);
        take[c] = std::min(static_cast<size_t>(base), remaining[c]);
        frac[c] = ideal - base;
        assigned += take[c];
    }
    std::vector<size_t> order(classes);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (frac[a] != frac[b]) return frac[a] > frac[b];
        return a < b;
    });
    for (size_t c : order) {
        if (assigned == want_total) break;
        if (take[c] < remaining[c]) {
            ++take[c];
            ++assigned;
        }
    }
    while (assigned < want_total) {
        size_t best = classes;
        for (size_t c = 0; c < classes; ++c) {
            if (take[c] >= remaining[c]) continue;
            if (best == classes || remaining[c] - take[c] > remaining[best] - take[best])
                best = c;
        }
        if (best == classes)
            throw std::logic_error("dirichlet_partition: class pools exhausted");
        ++take[best];
        ++assigned;
    }
    return take;
}

Matrix class_means(int classes, int dims, double mean_scale, Rng& rng) {
    Matrix mu(static_cast<size_t>(classes), static_cast<size_t>(dims));
    for (double& v : mu.data) v = mean_scale * rng.normal();
    return mu;
}

// Rows grouped per class per counts, then shuffled so no downstream split
// sees class-sorted data.
Batch sample_clusters(const std::vector<size_t>& counts, const Matrix& mu, double noise,
                      Rng& rng) {
    const size_t total = std::accumulate(counts.begin(), counts.end(), size_t{0});
    Batch out;
    out.features = Matrix(total, mu.cols);
    out.labels.resize(total);
    size_t r = 0;
    for (size_t c = 0; c < counts.size(); ++c) {
        for (size_t i = 0; i < counts[c]; ++i, ++r) {
            for (size_t d = 0; d < mu.cols; ++d)
                out.features.at(r, d) = mu.at(c, d) + noise * rng.normal();
            out.labels[r] = static_cast<int>(c);
        }
    }
    std::vector<size_t> order(total);
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(order);
    return gather_rows(out, order);
}

int parse_label(std::string_view tok, const std::string& where) {
    int v = 0;
    const char* end = tok.data() + tok.size();
    const auto res = std::from_chars(tok.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end || v < 0)
        throw std::runtime_error(where + ": bad label '" + std::string(tok) + "'");
    return v;
}

// Expects f0,...,f{d-1},label and returns d.
size_t parse_header(std::string_view line, const std::string& path) {
    const auto fields = csv::split(line);
    if (fields.size() < 2 || fields.back() != "label")
        throw std::runtime_error(path + ":1: bad header, expected f0,...,label");
    for (size_t i = 0; i + 1 < fields.size(); ++i) {
        if (fields[i] != "f" + std::to_string(i))
            throw std::runtime_error(path + ":1: bad header, expected f0,...,label");
    }
    return fields.size() - 1;
}

Batch read_csv_file(const std::string& path, size_t* width, int* max_label) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::string line;
    size_t lineno = 0;
    std::vector<double> values;
    std::vector<int> labels;
    size_t dims = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            dims = parse_header(line, path);
            if (*width == 0) *width = dims;
            if (dims != *width)
                throw std::runtime_error(path + ": inconsistent feature width (got " +
                                         std::to_string(dims) + ", expected " +
                                         std::to_string(*width) + ")");
            continue;
        }
        const auto fields = csv::split(line);
        const std::string where = path + ":" + std::to_string(lineno);
        if (fields.size() != dims + 1)
            throw std::runtime_error(where + ": expected " + std::to_string(dims + 1) +
                                     " fields, got " + std::to_string(fields.size()));
        for (size_t i = 0; i < dims; ++i) values.push_back(csv::to_double(fields[i], where));
        const int label = parse_label(fields.back(), where);
        labels.push_back(label);
        *max_label = std::max(*max_label, label);
    }
    if (lineno == 0) throw std::runtime_error(path + ": empty file");

    Batch out;
    out.features = Matrix(labels.size(), dims);
    out.features.data = std::move(values);
    out.labels = std::move(labels);
    return out;
}

}  // namespace

void SplitSpec::validate(const std::string& key_path) const {
    check_fraction(train_frac, key_path + ".train_frac");
    check_fraction(local_test_frac, key_path + ".local_test_frac");
    check_fraction(fed_test_frac, key_path + ".fed_test_frac");
    if (std::fabs(train_frac + local_test_frac + fed_test_frac - 1.0) > 1e-9)
        throw std::invalid_argument(key_path + " fractions must sum to 1");
}

size_t FederatedDataset::total_train() const {
    size_t n = 0;
    for (const auto& c : clients) n += c.n_k();
    return n;
}

std::vector<double> FederatedDataset::proportions() const {
    const size_t n = total_train();
    if (n == 0) throw std::runtime_error("dataset has no training samples");
    std::vector<double> p;
    p.reserve(clients.size());
    for (const auto& c : clients) p.push_back(static_cast<double>(c.n_k()) / static_cast<double>(n));
    return p;
}

const ClientDataset& FederatedDataset::by_id(int client_id) const {
    for (const auto& c : clients)
        if (c.client_id == client_id) return c;
    throw std::invalid_argument("unknown client id " + std::to_string(client_id));
}

std::vector<size_t> apportion(size_t total, const std::vector<double>& weights) {
    if (weights.empty()) throw std::invalid_argument("apportion: no weights");
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw std::invalid_argument("apportion: weights must be non-negative");
        sum += w;
    }
    if (sum <= 0.0) throw std::invalid_argument("apportion: weights sum to zero");

    const size_t n = weights.size();
    std::vector<size_t> out(n, 0);
    std::vector<double> frac(n, 0.0);
    size_t assigned = 0;
    for (size_t i = 0; i < n; ++i) {
        const double share = weights[i] / sum * static_cast<double>(total);
        const double base = std::floor(share);
        out[i] = static_cast<size_t>(base);
        frac[i] = share - base;
        assigned += out[i];
    }
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (frac[a] != frac[b]) return frac[a] > frac[b];
        return a < b;
    });
    for (size_t i : order) {
        if (assigned == total) break;
        ++out[i];
        ++assigned;
    }
    if (assigned != total) throw std::logic_error("apportion: rounding failed");
    return out;
}

std::vector<std::vector<size_t>> dirichlet_partition(const std::vector<int>& labels,
                                                     int class_count, int num_clients,
                                                     double alpha, std::uint64_t seed) {
    if (class_count < 1) throw std::invalid_argument("dirichlet_partition: class_count must be positive");
    if (num_clients < 1) throw std::invalid_argument("dirichlet_partition: num_clients must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_partition: alpha must be positive");
    if (labels.size() < static_cast<size_t>(num_clients))
        throw std::invalid_argument("dirichlet_partition: more clients than samples");

    const size_t classes = static_cast<size_t>(class_count);
    std::vector<std::vector<size_t>> pools(classes);
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= class_count)
            throw std::invalid_argument("dirichlet_partition: label out of range");
        pools[static_cast<size_t>(labels[i])].push_back(i);
    }
    for (size_t c = 0; c < classes; ++c)
        if (pools[c].empty())
            throw std::invalid_argument("dirichlet_partition: class " + std::to_string(c) +
                                        " has no samples");

    Rng rng(substream(seed, stream::partition));
    std::vector<std::vector<double>> props;
    props.reserve(static_cast<size_t>(num_clients));
    for (int k = 0; k < num_clients; ++k) props.push_back(rng.dirichlet(alpha, class_count));
    for (auto& pool : pools) rng.shuffle(pool);

    const std::vector<size_t> sizes =
        apportion(labels.size(), std::vector<double>(static_cast<size_t>(num_clients), 1.0));

    std::vector<size_t> cursor(classes, 0);
    std::vector<size_t> remaining(classes);
    for (size_t c = 0; c < classes; ++c) remaining[c] = pools[c].size();

    std::vector<std::vector<size_t>> parts(static_cast<size_t>(num_clients));
    for (int k = 0; k < num_clients; ++k) {
        const auto take = capped_counts(sizes[static_cast<size_t>(k)],
                                        props[static_cast<size_t>(k)], remaining);
        auto& mine = parts[static_cast<size_t>(k)];
        for (size_t c = 0; c < classes; ++c) {
            for (size_t i = 0; i < take[c]; ++i) mine.push_back(pools[c][cursor[c] + i]);
            cursor[c] += take[c];
            remaining[c] -= take[c];
        }
        std::sort(mine.begin(), mine.end());
    }
    return parts;
}

ClientSplit split_client(const Batch& samples, const SplitSpec& spec, bool ordered,
                         std::uint64_t seed) {
    spec.validate();
    const size_t n = samples.size();
    if (n == 0) throw std::invalid_argument("split_client: empty sample set");

    const auto count = [n](double frac) {
        return static_cast<size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
    };
    const size_t n_local = count(spec.local_test_frac);
    const size_t n_fed = count(spec.fed_test_frac);
    const size_t n_train = n - n_local - n_fed;

    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    if (!ordered) {
        Rng rng(seed);
        rng.shuffle(idx);
    }

    const auto slice = [&](size_t begin, size_t len) {
        return gather_rows(samples,
                           std::vector<size_t>(idx.begin() + static_cast<long>(begin),
                                               idx.begin() + static_cast<long>(begin + len)));
    };
    ClientSplit out;
    out.train = slice(0, n_train);
    out.local_test = slice(n_train, n_local);
    out.fed_test = slice(n_train + n_local, n_fed);
    return out;
}

void SynthConfig::validate(const std::string& key_path) const {
    if (num_clients < 1) throw std::invalid_argument(key_path + ".num_clients must be at least 1");
    if (classes < 2) throw std::invalid_argument(key_path + ".classes must be at least 2");
    if (dims < 1) throw std::invalid_argument(key_path + ".dims must be at least 1");
    if (min_samples < 1) throw std::invalid_argument(key_path + ".min_samples must be at least 1");
    if (max_samples < min_samples)
        throw std::invalid_argument(key_path + ".max_samples must be at least min_samples");
    if (!(heterogeneity >= 0.0 && heterogeneity <= 1.0))
        throw std::invalid_argument(key_path + ".heterogeneity must be in [0, 1]");
    if (!(mean_scale >= 0.0)) throw std::invalid_argument(key_path + ".mean_scale must be non-negative");
    if (!(noise >= 0.0)) throw std::invalid_argument(key_path + ".noise must be non-negative");
}

RawClients synth_generate_raw(const SynthConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(substream(seed, stream::synth));
    const Matrix mu = class_means(cfg.classes, cfg.dims, cfg.mean_scale, rng);
    const size_t classes = static_cast<size_t>(cfg.classes);

    RawClients raw;
    raw.class_count = cfg.classes;
    raw.clients.reserve(static_cast<size_t>(cfg.num_clients));
    for (int k = 0; k < cfg.num_clients; ++k) {
        const size_t n_k = static_cast<size_t>(cfg.min_samples) +
                           rng.below(static_cast<uint64_t>(cfg.max_samples - cfg.min_samples) + 1);
        const size_t dominant = static_cast<size_t>(k) % classes;
        std::vector<double> mix(classes, (1.0 - cfg.heterogeneity) / static_cast<double>(classes));
        mix[dominant] += cfg.heterogeneity;
        raw.clients.push_back({k, sample_clusters(apportion(n_k, mix), mu, cfg.noise, rng)});
    }
    return raw;
}

Batch synth_pool(int classes, int dims, size_t total_samples, double mean_scale,
                 double noise, std::uint64_t seed) {
    if (classes < 2) throw std::invalid_argument("synth_pool: classes must be at least 2");
    if (dims < 1) throw std::invalid_argument("synth_pool: dims must be at least 1");
    if (total_samples < static_cast<size_t>(classes))
        throw std::invalid_argument("synth_pool: need at least one sample per class");

    Rng rng(substream(seed, stream::synth));
    const Matrix mu = class_means(classes, dims, mean_scale, rng);
    const auto counts =
        apportion(total_samples, std::vector<double>(static_cast<size_t>(classes), 1.0));
    return sample_clusters(counts, mu, noise, rng);
}

RawClients dirichlet_clients(const Batch& pool, int class_count, int num_clients,
                             double alpha, std::uint64_t seed) {
    const auto parts = dirichlet_partition(pool.labels, class_count, num_clients, alpha, seed);
    RawClients raw;
    raw.class_count = class_count;
    raw.clients.reserve(parts.size());
    for (size_t k = 0; k < parts.size(); ++k)
        raw.clients.push_back({static_cast<int>(k), gather_rows(pool, parts[k])});
    return raw;
}

FederatedDataset assemble_dataset(const RawClients& raw, const SplitSpec& spec,
                                  bool ordered, std::uint64_t seed) {
    spec.validate();
    if (raw.clients.empty()) throw std::invalid_argument("no clients");

    std::vector<size_t> order(raw.clients.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return raw.clients[a].client_id < raw.clients[b].client_id;
    });

    FederatedDataset fed;
    fed.class_count = raw.class_count;
    int prev_id = -1;
    for (size_t i : order) {
        const RawClient& rc = raw.clients[i];
        if (rc.client_id == prev_id)
            throw std::invalid_argument("duplicate client id " + std::to_string(rc.client_id));
        prev_id = rc.client_id;
        if (rc.data.empty())
            throw std::runtime_error("client " + std::to_string(rc.client_id) + " has no samples");
        ClientSplit split = split_client(
            rc.data, spec, ordered,
            substream(seed, stream::split, static_cast<uint64_t>(rc.client_id)));
        if (split.train.empty())
            throw std::runtime_error("client " + std::to_string(rc.client_id) +
                                     " has no training samples");
        fed.fed_test = concat_batches(fed.fed_test, split.fed_test);
        fed.clients.push_back(
            {rc.client_id, std::move(split.train), std::move(split.local_test)});
    }
    return fed;
}

FederatedDataset synth_generate(const SynthConfig& cfg, const SplitSpec& spec,
                                std::uint64_t seed) {
    return assemble_dataset(synth_generate_raw(cfg, seed), spec, false, seed);
}

FederatedDataset load_csv_clients(const std::string& dir_path, const SplitSpec& spec,
                                  int min_samples, bool ordered, std::uint64_t seed) {
    if (!fs::is_directory(dir_path))
        throw std::runtime_error("not a directory: " + dir_path);

    std::vector<std::pair<int, std::string>> files;
    std::string fed_test_path;
    for (const auto& entry : fs::directory_iterator(dir_path)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name == "fed_test.csv") {
            fed_test_path = entry.path().string();
            continue;
        }
        constexpr std::string_view prefix = "client_";
        constexpr std::string_view suffix = ".csv";
        if (name.size() <= prefix.size() + suffix.size()) continue;
        if (name.compare(0, prefix.size(), prefix) != 0) continue;
        if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
        const std::string_view digits(name.data() + prefix.size(),
                                      name.size() - prefix.size() - suffix.size());
        int id = 0;
        const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), id);
        if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size()) continue;
        files.emplace_back(id, entry.path().string());
    }
    std::sort(files.begin(), files.end());
    for (size_t i = 1; i < files.size(); ++i)
        if (files[i].first == files[i - 1].first)
            throw std::runtime_error("duplicate client id " + std::to_string(files[i].first));

    size_t width = 0;
    int max_label = -1;
    RawClients raw;
    for (const auto& [id, path] : files) {
        Batch data = read_csv_file(path, &width, &max_label);
        if (data.size() < static_cast<size_t>(min_samples)) continue;
        raw.clients.push_back({id, std::move(data)});
    }
    if (raw.clients.empty()) throw std::runtime_error("no clients in " + dir_path);

    Batch global_test;
    if (!fed_test_path.empty()) global_test = read_csv_file(fed_test_path, &width, &max_label);

    raw.class_count = max_label + 1;
    FederatedDataset fed = assemble_dataset(raw, spec, ordered, seed);
    fed.fed_test = concat_batches(fed.fed_test, global_test);
    return fed;
}

void write_client_csv_dir(const RawClients& raw, const std::string& dir_path) {
    fs::create_directories(dir_path);
    for (const RawClient& rc : raw.clients) {
        const std::string path =
            (fs::path(dir_path) / ("client_" + std::to_string(rc.client_id) + ".csv")).string();
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        const size_t dims = rc.data.features.cols;
        for (size_t j = 0; j < dims; ++j) out << 'f' << j << ',';
        out << "label\n";
        char buf[40];
        for (size_t r = 0; r < rc.data.size(); ++r) {
            for (size_t j = 0; j < dims; ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", rc.data.features.at(r, j));
                out << buf << ',';
            }
            out << rc.data.labels[r] << '\n';
        }
        if (!out) throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace fedfair
