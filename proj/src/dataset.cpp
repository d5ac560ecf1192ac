#include "rboost/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace rboost {

void Dataset::validate() const {
    const std::size_t n = labels.size();
    if (features.size() != n * n_features) {
        throw std::invalid_argument("Dataset: feature matrix size mismatch");
    }
    for (int y : labels) {
        if (y != +1 && y != -1) {
            throw std::invalid_argument("Dataset: labels must be +1 or -1");
        }
    }
    if (!true_labels.empty()) {
        if (true_labels.size() != n) {
            throw std::invalid_argument("Dataset: true_labels length mismatch");
        }
        for (int y : true_labels) {
            if (y != +1 && y != -1) {
                throw std::invalid_argument(
                    "Dataset: true_labels must be +1 or -1");
            }
        }
    }
}

FlipMatrix NoiseSpec::expand() const {
    if (!(rate >= 0.0 && rate <= 0.5)) {
        throw std::invalid_argument("NoiseSpec: rate must lie in [0, 0.5]");
    }
    if (kind == NoiseKind::symmetric) {
        return FlipMatrix::from_off_diagonals(rate, rate);
    }
    const double r = std::min(2.0 * rate, 1.0);
    if (affected_class > 0) {
        return FlipMatrix::from_off_diagonals(0.0, r);
    }
    return FlipMatrix::from_off_diagonals(r, 0.0);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    for (auto& f : fields) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ' || f.back() == '\t')) {
            f.pop_back();
        }
        std::size_t start = 0;
        while (start < f.size() && (f[start] == ' ' || f[start] == '\t')) {
            ++start;
        }
        f.erase(0, start);
    }
    return fields;
}

double parse_double(const std::string& field, std::size_t line_no) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || field.empty()) {
        std::ostringstream msg;
        msg << "row " << line_no << ": bad numeric field '" << field << "'";
        throw ParseError(msg.str());
    }
    return v;
}

}  // namespace

Dataset load_csv(const std::string& path, int label_column,
                 const std::string& positive_token, bool has_header) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }

    Dataset out;
    out.name = path;

    std::string line;
    std::size_t line_no = 0;
    std::size_t arity = 0;
    std::size_t label_idx = 0;
    std::vector<std::string> label_tokens;  // per sample
    bool skipped_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        if (has_header && !skipped_header) {
            skipped_header = true;
            continue;
        }
        const auto fields = split_fields(line);
        if (arity == 0) {
            arity = fields.size();
            if (arity < 2) {
                std::ostringstream msg;
                msg << "row " << line_no
                    << ": need at least one feature and one label column";
                throw ParseError(msg.str());
            }
            const int resolved =
                label_column < 0 ? static_cast<int>(arity) + label_column
                                 : label_column;
            if (resolved < 0 || resolved >= static_cast<int>(arity)) {
                throw std::invalid_argument("load_csv: label column out of range");
            }
            label_idx = static_cast<std::size_t>(resolved);
            out.n_features = arity - 1;
        } else if (fields.size() != arity) {
            std::ostringstream msg;
            msg << "row " << line_no << ": expected " << arity
                << " fields, got " << fields.size();
            throw ParseError(msg.str());
        }
        for (std::size_t j = 0; j < arity; ++j) {
            if (j == label_idx) {
                continue;
            }
            out.features.push_back(parse_double(fields[j], line_no));
        }
        label_tokens.push_back(fields[label_idx]);
    }

    if (label_tokens.empty()) {
        throw ParseError("'" + path + "': no data rows");
    }

    std::vector<std::string> distinct;
    for (const auto& tok : label_tokens) {
        if (std::find(distinct.begin(), distinct.end(), tok) == distinct.end()) {
            distinct.push_back(tok);
        }
    }
    if (distinct.size() != 2) {
        std::ostringstream msg;
        msg << "'" << path << "': found " << distinct.size()
            << " distinct label tokens, need exactly 2";
        throw SchemaError(msg.str());
    }
    if (std::find(distinct.begin(), distinct.end(), positive_token) ==
        distinct.end()) {
        throw SchemaError("'" + path + "': positive token '" + positive_token +
                          "' does not occur in the label column");
    }

    out.labels.reserve(label_tokens.size());
    for (const auto& tok : label_tokens) {
        out.labels.push_back(tok == positive_token ? +1 : -1);
    }
    out.validate();
    return out;
}

Dataset generate_two_gaussians(std::size_t n, std::size_t dim,
                               double separation, std::uint64_t seed) {
    if (n < 2) {
        throw std::invalid_argument("generate_two_gaussians: n must be >= 2");
    }
    if (dim < 1) {
        throw std::invalid_argument("generate_two_gaussians: dim must be >= 1");
    }
    if (!(separation > 0.0)) {
        throw std::invalid_argument(
            "generate_two_gaussians: separation must be > 0");
    }

    Dataset out;
    out.name = "two-gaussians";
    out.n_features = dim;
    out.features.reserve(n * dim);
    out.labels.reserve(n);

    const double mean = separation / std::sqrt(static_cast<double>(dim));
    const std::size_t n_pos = (n + 1) / 2;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = i < n_pos ? +1 : -1;
        const double mu = label > 0 ? mean : -mean;
        for (std::size_t j = 0; j < dim; ++j) {
            out.features.push_back(mu + rng.normal());
        }
        out.labels.push_back(label);
    }
    return out;
}

Dataset inject_label_noise(const Dataset& data, const NoiseSpec& spec) {
    if (data.has_true_labels()) {
        throw std::invalid_argument(
            "inject_label_noise: noise already injected");
    }
    const FlipMatrix fm = spec.expand();

    Dataset out = data;
    out.true_labels = data.labels;
    Rng rng(spec.seed);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int cls = class_index(data.labels[i]);
        const double p_flip = fm(cls, 1 - cls);
        if (rng.uniform() < p_flip) {
            out.labels[i] = -data.labels[i];
        }
    }
    return out;
}

namespace {

Dataset subset(const Dataset& data, const std::vector<std::size_t>& indices) {
    Dataset out;
    out.name = data.name;
    out.n_features = data.n_features;
    out.features.reserve(indices.size() * data.n_features);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        const auto r = data.row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        out.labels.push_back(data.labels[i]);
        if (data.has_true_labels()) {
            out.true_labels.push_back(data.true_labels[i]);
        }
    }
    return out;
}

// Stratified draw of `take_total` samples: per-class quotas by largest
// remainder, per-class order randomized by `seed`. Returns (taken, rest)
// index sets, each sorted ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
stratified_indices(const Dataset& data, std::size_t take_total,
                   std::uint64_t seed) {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[static_cast<std::size_t>(class_index(data.labels[i]))]
            .push_back(i);
    }

    const std::size_t n = data.size();
    std::array<std::size_t, 2> quota{};
    std::array<double, 2> remainder{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < 2; ++c) {
        const double exact = static_cast<double>(take_total) *
                             static_cast<double>(by_class[c].size()) /
                             static_cast<double>(n);
        quota[c] = static_cast<std::size_t>(exact);
        remainder[c] = exact - static_cast<double>(quota[c]);
        assigned += quota[c];
    }
    while (assigned < take_total) {
        std::size_t pick = remainder[0] >= remainder[1] ? 0 : 1;
        if (quota[pick] >= by_class[pick].size()) {
            pick = 1 - pick;
        }
        ++quota[pick];
        remainder[pick] = -1.0;
        ++assigned;
    }

    Rng rng(seed);
    std::vector<std::size_t> taken;
    std::vector<std::size_t> rest;
    for (std::size_t c = 0; c < 2; ++c) {
        auto& idx = by_class[c];
        rng.shuffle(idx);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i < quota[c] ? taken : rest).push_back(idx[i]);
        }
    }
    std::sort(taken.begin(), taken.end());
    std::sort(rest.begin(), rest.end());
    return {std::move(taken), std::move(rest)};
}

}  // namespace

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("split: train_fraction must lie in (0, 1)");
    }
    const std::size_t n = data.size();
    const std::size_t train_total = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(n)));
    if (train_total == 0 || train_total >= n) {
        throw StratificationError(
            "split: requested fraction leaves one side empty");
    }
    auto [train_idx, test_idx] = stratified_indices(data, train_total, seed);
    return {subset(data, train_idx), subset(data, test_idx)};
}

std::pair<Dataset, Dataset> take_stratified(const Dataset& data,
                                            std::size_t count,
                                            std::uint64_t seed) {
    if (count == 0 || count >= data.size()) {
        throw std::invalid_argument(
            "take_stratified: count must lie in [1, n-1]");
    }
    auto [taken_idx, rest_idx] = stratified_indices(data, count, seed);
    return {subset(data, taken_idx), subset(data, rest_idx)};
}

}  // namespace rboost
