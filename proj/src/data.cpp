#include "parnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "parnn/error.hpp"

namespace parnn {

Dataset Dataset::select(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.features = Matrix(indices.size(), dim());
    out.labels.resize(indices.size());
    out.num_classes = num_classes;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= size()) fail("Dataset::select: index ", src, " out of range ", size());
        std::copy(features.row_ptr(src), features.row_ptr(src) + dim(),
                  out.features.row_ptr(i));
        out.labels[i] = labels[src];
    }
    return out;
}

namespace {

double parse_double(const std::string& field, std::size_t line_no, const char* what) {
    std::size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &consumed);
    } catch (const std::exception&) {
        fail("load_csv: non-numeric ", what, " '", field, "' at line ", line_no);
    }
    if (consumed != field.size() || !std::isfinite(v)) {
        fail("load_csv: non-numeric ", what, " '", field, "' at line ", line_no);
    }
    return v;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail("load_csv: cannot open '", path, "'");
    std::vector<double> values;
    Labels labels;
    std::size_t dim = 0;
    std::size_t line_no = 0;
    int max_label = -1;
    std::string line;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto fields = split_fields(stripped);
        if (fields.size() < 2) {
            fail("load_csv: expected 'label,f1,...' at line ", line_no);
        }
        const double label_val = parse_double(trim(fields[0]), line_no, "label");
        if (label_val < 0 || label_val != std::floor(label_val)) {
            fail("load_csv: label must be a non-negative integer, got '", fields[0],
                 "' at line ", line_no);
        }
        const std::size_t row_dim = fields.size() - 1;
        if (dim == 0) {
            dim = row_dim;
        } else if (row_dim != dim) {
            fail("load_csv: ragged row with ", row_dim, " features (expected ", dim,
                 ") at line ", line_no);
        }
        labels.push_back(static_cast<int>(label_val));
        max_label = std::max(max_label, labels.back());
        for (std::size_t j = 1; j < fields.size(); ++j) {
            values.push_back(parse_double(trim(fields[j]), line_no, "feature"));
        }
    }
    if (labels.empty()) fail("load_csv: no data rows in '", path, "'");
    Dataset ds;
    ds.features = Matrix(labels.size(), dim, std::move(values));
    ds.labels = std::move(labels);
    ds.num_classes = static_cast<std::size_t>(max_label) + 1;
    return ds;
}

void save_csv(const std::string& path, const Dataset& dataset) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) fail("save_csv: cannot open '", path, "' for writing");
    char buf[32];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        os << dataset.labels[i];
        for (std::size_t j = 0; j < dataset.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", dataset.features(i, j));
            os << ',' << buf;
        }
        os << '\n';
    }
    if (!os) fail("save_csv: write failed for '", path, "'");
}

Dataset generate_synthetic(std::size_t classes, std::size_t dim,
                           std::size_t per_class, double separation,
                           std::uint64_t seed) {
    if (classes == 0 || dim == 0 || per_class == 0) {
        fail("generate_synthetic: classes, dim and per_class must be >= 1");
    }
    if (separation < 0.0) {
        fail("generate_synthetic: separation must be >= 0, got ", separation);
    }
    Rng rng(seed);
    // Class means uniformly on the sphere of radius `separation`.
    Matrix means(classes, dim);
    for (std::size_t k = 0; k < classes; ++k) {
        double norm = 0.0;
        do {
            for (std::size_t j = 0; j < dim; ++j) means(k, j) = rng.gaussian(0.0, 1.0);
            norm = frobenius_norm(Vector(means.row_ptr(k), means.row_ptr(k) + dim));
        } while (norm == 0.0);
        const double s = separation / norm;
        for (std::size_t j = 0; j < dim; ++j) means(k, j) *= s;
    }
    Dataset ds;
    ds.num_classes = classes;
    ds.features = Matrix(classes * per_class, dim);
    ds.labels.resize(classes * per_class);
    std::size_t row = 0;
    for (std::size_t k = 0; k < classes; ++k) {
        for (std::size_t i = 0; i < per_class; ++i, ++row) {
            double* out = ds.features.row_ptr(row);
            for (std::size_t j = 0; j < dim; ++j) {
                out[j] = means(k, j) + rng.gaussian(0.0, 1.0);
            }
            ds.labels[row] = static_cast<int>(k);
        }
    }
    return ds;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    return idx;
}

std::pair<Dataset, Dataset> split_cv(const Dataset& dataset, const SplitSpec& spec) {
    if (spec.cv_fraction <= 0.0 || spec.cv_fraction >= 1.0) {
        fail("split_cv: cv_fraction must be in (0,1), got ", spec.cv_fraction);
    }
    if (dataset.size() < 10) {
        fail("split_cv: need at least 10 examples, got ", dataset.size());
    }
    const auto idx = shuffled_indices(dataset.size(), spec.seed);
    const auto cv_count = static_cast<std::size_t>(
        std::ceil(spec.cv_fraction * static_cast<double>(dataset.size())));
    const std::vector<std::size_t> cv_idx(idx.begin(), idx.begin() + cv_count);
    const std::vector<std::size_t> train_idx(idx.begin() + cv_count, idx.end());
    return {dataset.select(train_idx), dataset.select(cv_idx)};
}

std::vector<Minibatch> minibatches(const Dataset& dataset, std::size_t batch_size,
                                   std::uint64_t epoch_seed) {
    if (batch_size == 0) fail("minibatches: batch size must be >= 1");
    if (batch_size > dataset.size()) {
        fail("minibatches: batch size ", batch_size, " exceeds dataset size ",
             dataset.size());
    }
    const auto idx = shuffled_indices(dataset.size(), epoch_seed);
    const std::size_t count = dataset.size() / batch_size;
    std::vector<Minibatch> batches;
    batches.reserve(count);
    for (std::size_t b = 0; b < count; ++b) {
        const std::vector<std::size_t> rows(idx.begin() + b * batch_size,
                                            idx.begin() + (b + 1) * batch_size);
        Dataset sel = dataset.select(rows);
        batches.push_back({std::move(sel.features), std::move(sel.labels)});
    }
    return batches;
}

FeatureStats feature_stats(const Dataset& dataset) {
    if (dataset.size() == 0) fail("feature_stats: empty dataset");
    const std::size_t n = dataset.size();
    const std::size_t d = dataset.dim();
    FeatureStats stats;
    stats.mean.assign(d, 0.0);
    stats.stddev.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = dataset.features.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) stats.mean[j] += row[j];
    }
    for (double& m : stats.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = dataset.features.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double c = row[j] - stats.mean[j];
            stats.stddev[j] += c * c;
        }
    }
    for (double& s : stats.stddev) {
        s = std::sqrt(s / static_cast<double>(n));
        if (s < 1e-12) s = 1.0;
    }
    return stats;
}

void standardize_in_place(Dataset& dataset, const FeatureStats& stats) {
    if (stats.mean.size() != dataset.dim()) {
        fail("standardize: stats dim ", stats.mean.size(), " does not match data dim ",
             dataset.dim());
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        double* row = dataset.features.row_ptr(i);
        for (std::size_t j = 0; j < dataset.dim(); ++j) {
            row[j] = (row[j] - stats.mean[j]) / stats.stddev[j];
        }
    }
}

} // namespace parnn
