#pragma once

/**
 * @file ingest.hpp
 * @brief Delimited-text loading, feature preparation, scaling, label
 *        aggregation and tumbling mini-batch windows.
 *
 * Schema files are JSON:
 * @code
 * {
 *   "delimiter": ",",            // single character, default ","
 *   "header": false,             // first line holds column names
 *   "columns": [ {"name": "duration", "kind": "numeric"},
 *                {"name": "service",  "kind": "categorical"},
 *                {"name": "label",    "kind": "label"} ],
 *   "drop": ["service"],         // never emitted; categorical columns must be listed
 *   "dummy_feature": true,       // append a constant-1 feature
 *   "label_trim_suffix": "."     // stripped from label values if present
 * }
 * @endcode
 * With no "columns", every column is numeric; "label" may then name (header
 * files) or index the label column.
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pvq/core.hpp"

namespace pvq::ingest {

/// Malformed input; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

enum class ColumnKind { numeric, categorical, label };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
};

struct Schema {
    char delimiter = ',';
    bool header = false;
    std::vector<ColumnSpec> columns; // empty: infer, all numeric
    std::vector<std::string> drop;
    bool dummy_feature = false;
    std::string label_trim_suffix;
    std::optional<std::string> label; // name or decimal index, only when inferring columns

    static Schema from_json(const nlohmann::json& j) {
        Schema s;
        if (j.contains("delimiter")) {
            const auto d = j.at("delimiter").get<std::string>();
            if (d.size() != 1) throw std::invalid_argument("schema: delimiter must be one character");
            s.delimiter = d[0];
        }
        s.header = j.value("header", false);
        s.dummy_feature = j.value("dummy_feature", false);
        s.label_trim_suffix = j.value("label_trim_suffix", std::string{});
        if (j.contains("label")) {
            const auto& l = j.at("label");
            s.label = l.is_number_integer() ? std::to_string(l.get<long long>()) : l.get<std::string>();
        }
        if (j.contains("drop")) s.drop = j.at("drop").get<std::vector<std::string>>();
        if (j.contains("columns")) {
            for (const auto& c : j.at("columns")) {
                ColumnSpec spec;
                spec.name = c.at("name").get<std::string>();
                const auto kind = c.value("kind", std::string("numeric"));
                if (kind == "numeric") spec.kind = ColumnKind::numeric;
                else if (kind == "categorical") spec.kind = ColumnKind::categorical;
                else if (kind == "label") spec.kind = ColumnKind::label;
                else throw std::invalid_argument("schema: unknown column kind '" + kind + "'");
                s.columns.push_back(std::move(spec));
            }
        }
        s.validate();
        return s;
    }

    static Schema load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open schema file " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument("schema " + path + ": " + e.what());
        }
        return from_json(j);
    }

    void validate() const {
        if (columns.empty()) return;
        std::set<std::string> names;
        std::size_t labels = 0;
        for (const auto& c : columns) {
            if (!names.insert(c.name).second) throw std::invalid_argument("schema: duplicate column " + c.name);
            if (c.kind == ColumnKind::label) ++labels;
        }
        if (labels > 1) throw std::invalid_argument("schema: more than one label column");
        for (const auto& d : drop)
            if (!names.count(d)) throw std::invalid_argument("schema: dropped column '" + d + "' does not exist");
        for (const auto& c : columns) {
            if (c.kind == ColumnKind::categorical && std::find(drop.begin(), drop.end(), c.name) == drop.end())
                throw std::invalid_argument("schema: categorical column '" + c.name + "' must be on the drop list");
        }
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline void split(std::string_view line, char delimiter, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(delimiter, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

inline double parse_real(std::string_view field, std::size_t line, const std::string& column) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v))
        throw ParseError(line, "column '" + column + "': cannot parse '" + std::string(field) + "' as a finite number");
    return v;
}

} // namespace detail

/// Single pass over delimited text. Row ids are 0-based data-row positions.
inline Dataset load_delimited(std::istream& in, const Schema& schema) {
    schema.validate();
    std::vector<ColumnSpec> columns = schema.columns;
    std::vector<std::string_view> fields;
    std::string line;
    std::size_t line_no = 0;
    bool header_pending = schema.header;
    std::vector<std::string> header_names;

    std::vector<std::size_t> feature_cols;
    std::optional<std::size_t> label_col;
    std::vector<std::string> feature_names;
    bool resolved = false;

    auto resolve = [&](std::size_t width) {
        if (columns.empty()) {
            for (std::size_t i = 0; i < width; ++i)
                columns.push_back({header_names.size() == width ? header_names[i] : "f" + std::to_string(i),
                                   ColumnKind::numeric});
            if (schema.label) {
                std::size_t idx = width;
                for (std::size_t i = 0; i < width; ++i)
                    if (columns[i].name == *schema.label) idx = i;
                if (idx == width && !schema.label->empty() &&
                    std::all_of(schema.label->begin(), schema.label->end(), ::isdigit))
                    idx = std::stoul(*schema.label);
                if (idx >= width) throw std::invalid_argument("schema: label column '" + *schema.label + "' not found");
                columns[idx].kind = ColumnKind::label;
            }
            Schema inferred = schema;
            inferred.columns = columns;
            inferred.validate();
        }
        for (std::size_t i = 0; i < columns.size(); ++i) {
            const auto& c = columns[i];
            if (c.kind == ColumnKind::label) {
                label_col = i;
                continue;
            }
            if (std::find(schema.drop.begin(), schema.drop.end(), c.name) != schema.drop.end()) continue;
            feature_cols.push_back(i);
            feature_names.push_back(c.name);
        }
        if (schema.dummy_feature) feature_names.push_back("dummy");
        if (feature_names.empty()) throw std::invalid_argument("schema leaves no feature columns");
        resolved = true;
    };

    std::vector<double> values;
    LabelVector labels;
    std::size_t rows = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        detail::split(line, schema.delimiter, fields);
        if (header_pending) {
            header_pending = false;
            header_names.assign(fields.begin(), fields.end());
            if (!columns.empty() && header_names.size() != columns.size())
                throw ParseError(line_no, "header has " + std::to_string(header_names.size()) +
                                              " columns, schema declares " + std::to_string(columns.size()));
            continue;
        }
        if (!resolved) resolve(fields.size());
        if (fields.size() != columns.size())
            throw ParseError(line_no, "expected " + std::to_string(columns.size()) + " columns, found " +
                                          std::to_string(fields.size()));
        for (std::size_t c : feature_cols) values.push_back(detail::parse_real(fields[c], line_no, columns[c].name));
        if (schema.dummy_feature) values.push_back(1.0);
        if (label_col) {
            std::string_view l = fields[*label_col];
            if (!schema.label_trim_suffix.empty() && l.ends_with(schema.label_trim_suffix))
                l.remove_suffix(schema.label_trim_suffix.size());
            labels.emplace_back(l);
        }
        ++rows;
    }
    if (rows == 0) throw ParseError(line_no, "no data rows");

    const std::size_t width = feature_names.size();
    std::optional<LabelVector> maybe_labels;
    if (label_col) maybe_labels = std::move(labels);
    return Dataset(DataMatrix(rows, width, std::move(values)), std::move(maybe_labels), std::move(feature_names));
}

inline Dataset load_delimited(const std::string& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file " + path);
    return load_delimited(in, schema);
}

/// Per-feature z-score transform. Constant features pass through unchanged.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> scale;

    DataMatrix apply(const DataMatrix& data) const {
        if (data.cols() != mean.size()) throw std::invalid_argument("Scaler: dimension mismatch");
        std::vector<double> out(data.values().begin(), data.values().end());
        const std::size_t d = data.cols();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - mean[i % d]) / scale[i % d];
        const auto ids = data.row_ids();
        return DataMatrix(data.rows(), d, std::move(out), {ids.begin(), ids.end()});
    }
};

inline Scaler fit_scaler(const DataMatrix& data) {
    const std::size_t n = data.rows(), d = data.cols();
    Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
    for (std::size_t j = 0; j < d; ++j) {
        bool constant = true;
        const double first = data.at(0, j);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = data.at(i, j);
            constant = constant && v == first;
            sum += v;
        }
        if (constant) continue;
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = data.at(i, j) - mean;
            ss += dv * dv;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (!(sd > 0.0)) continue;
        s.mean[j] = mean;
        s.scale[j] = sd;
    }
    return s;
}

/// Fine label -> aggregate label. Unmapped labels map to themselves.
struct LabelMap {
    std::map<std::string, std::string> mapping;

    /// Accepts {"map": {...}} or a flat {"fine": "coarse", ...} object.
    static LabelMap from_json(const nlohmann::json& j) {
        const auto& obj = j.contains("map") ? j.at("map") : j;
        return LabelMap{obj.get<std::map<std::string, std::string>>()};
    }

    static LabelMap load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open label map " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument("label map " + path + ": " + e.what());
        }
        return from_json(j);
    }
};

/// Element-wise mapping. Labels without an entry are kept and reported in
/// `unmapped` (sorted, unique) so the caller can warn.
inline LabelVector aggregate_labels(const LabelVector& labels, const LabelMap& map,
                                    std::vector<std::string>* unmapped = nullptr) {
    LabelVector out;
    out.reserve(labels.size());
    std::set<std::string> missing;
    for (const auto& l : labels) {
        const auto it = map.mapping.find(l);
        if (it == map.mapping.end()) {
            missing.insert(l);
            out.push_back(l);
        } else {
            out.push_back(it->second);
        }
    }
    if (unmapped) unmapped->assign(missing.begin(), missing.end());
    return out;
}

struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const noexcept { return end - begin; }
    friend bool operator==(const RowRange&, const RowRange&) = default;
};

/// Consecutive non-overlapping windows; the last one may be short.
inline std::vector<RowRange> window(std::size_t n, std::size_t window_size) {
    if (window_size < 1) throw std::invalid_argument("window: window_size must be >= 1");
    std::vector<RowRange> out;
    for (std::size_t b = 0; b < n; b += window_size) out.push_back({b, std::min(n, b + window_size)});
    return out;
}

inline Dataset slice(const Dataset& data, RowRange range) {
    std::optional<LabelVector> labels;
    if (data.labels)
        labels.emplace(data.labels->begin() + static_cast<std::ptrdiff_t>(range.begin),
                       data.labels->begin() + static_cast<std::ptrdiff_t>(range.end));
    return Dataset(data.features.slice(range.begin, range.end), std::move(labels), data.feature_names);
}

} // namespace pvq::ingest
