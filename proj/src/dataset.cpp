#include "cpapml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cpapml/rng.hpp"

namespace cpapml {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool is_missing_token(const std::string& s) { return s.empty() || s == "NA"; }

}  // namespace

std::string to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::numeric: return "numeric";
        case FeatureKind::binary: return "binary";
        case FeatureKind::ordered_categorical: return "ordered-categorical";
    }
    return "?";
}

std::string to_string(TimePoint t) {
    switch (t) {
        case TimePoint::t0: return "T0";
        case TimePoint::t1: return "T1";
        case TimePoint::t3: return "T3";
    }
    return "?";
}

FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "numeric") return FeatureKind::numeric;
    if (s == "binary") return FeatureKind::binary;
    if (s == "ordered-categorical" || s == "ordinal") return FeatureKind::ordered_categorical;
    throw DataError("unknown feature kind: '" + s + "'");
}

TimePoint timepoint_from_string(const std::string& s) {
    if (s == "T0") return TimePoint::t0;
    if (s == "T1") return TimePoint::t1;
    if (s == "T3") return TimePoint::t3;
    throw DataError("unknown timepoint: '" + s + "'");
}

void Schema::validate() const {
    std::unordered_set<std::string> names;
    for (const auto& f : features) {
        if (f.name.empty()) throw DataError("schema: empty feature name");
        if (!names.insert(f.name).second) throw DataError("schema: duplicate feature name '" + f.name + "'");
        if (f.kind == FeatureKind::numeric) {
            if (!f.categories.empty())
                throw DataError("schema: numeric feature '" + f.name + "' declares categories");
        } else {
            std::size_t need_min = f.kind == FeatureKind::binary ? 2 : 3;
            if (f.kind == FeatureKind::binary && f.categories.size() != 2)
                throw DataError("schema: binary feature '" + f.name + "' needs exactly 2 categories");
            if (f.kind == FeatureKind::ordered_categorical && f.categories.size() < need_min)
                throw DataError("schema: ordered-categorical feature '" + f.name + "' needs >= 3 categories");
            std::unordered_set<std::string> cats;
            for (const auto& c : f.categories)
                if (!cats.insert(c).second)
                    throw DataError("schema: duplicate category '" + c + "' in feature '" + f.name + "'");
        }
    }
}

std::optional<std::size_t> Schema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < features.size(); ++i)
        if (features[i].name == name) return i;
    return std::nullopt;
}

Schema parse_schema(const std::string& text) {
    Schema schema;
    FeatureSchema cur;
    bool open = false;
    auto flush = [&]() {
        if (open) schema.features.push_back(cur);
        cur = FeatureSchema{};
        open = false;
    };
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) {
            flush();
            continue;
        }
        if (t[0] == '#') continue;
        auto colon = t.find(':');
        if (colon == std::string::npos)
            throw DataError("schema line " + std::to_string(lineno) + ": expected 'key: value'");
        std::string key = trim(t.substr(0, colon));
        std::string val = trim(t.substr(colon + 1));
        if (key == "name") {
            if (open && !cur.name.empty()) flush();
            open = true;
            cur.name = val;
        } else if (key == "kind") {
            open = true;
            cur.kind = feature_kind_from_string(val);
        } else if (key == "timepoint") {
            open = true;
            cur.timepoint = timepoint_from_string(val);
        } else if (key == "categories") {
            open = true;
            cur.categories.clear();
            for (auto& c : split_line(val, ',')) {
                std::string cc = trim(c);
                if (!cc.empty()) cur.categories.push_back(cc);
            }
        } else {
            throw DataError("schema line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    flush();
    schema.validate();
    return schema;
}

Schema load_schema(const std::string& path) { return parse_schema(read_file(path)); }

void save_schema(const Schema& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write schema: " + path);
    for (const auto& f : s.features) {
        out << "name: " << f.name << "\n";
        out << "kind: " << to_string(f.kind) << "\n";
        if (f.is_categorical()) {
            out << "categories: ";
            for (std::size_t i = 0; i < f.categories.size(); ++i)
                out << (i ? ", " : "") << f.categories[i];
            out << "\n";
        }
        out << "timepoint: " << to_string(f.timepoint) << "\n\n";
    }
}

RawDataset parse_csv(const std::string& csv_text, const Schema& schema, const std::string& origin) {
    schema.validate();
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw DataError(origin + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_line(line, ',');
    if (header.empty() || trim(header[0]).empty())
        throw DataError(origin + ": first header column must be the row id");
    // Column -> schema feature mapping; every non-id column must be known.
    std::vector<std::size_t> col_feature(header.size(), 0);
    std::vector<bool> seen(schema.size(), false);
    for (std::size_t c = 1; c < header.size(); ++c) {
        auto idx = schema.index_of(trim(header[c]));
        if (!idx) throw DataError(origin + ": unknown column '" + trim(header[c]) + "'");
        col_feature[c] = *idx;
        seen[*idx] = true;
    }
    for (std::size_t i = 0; i < schema.size(); ++i)
        if (!seen[i]) throw DataError(origin + ": missing column '" + schema.features[i].name + "'");

    RawDataset out;
    out.schema = schema;
    std::unordered_set<std::string> ids;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split_line(line, ',');
        if (fields.size() != header.size())
            throw DataError(origin + " line " + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        std::string id = trim(fields[0]);
        if (id.empty() || !ids.insert(id).second)
            throw DataError(origin + " line " + std::to_string(lineno) + ": missing or duplicate row id");
        std::vector<RawCell> row(schema.size());
        for (std::size_t c = 1; c < fields.size(); ++c) {
            const std::string v = trim(fields[c]);
            std::size_t fi = col_feature[c];
            const FeatureSchema& f = schema.features[fi];
            RawCell cell;
            if (!is_missing_token(v)) {
                if (f.kind == FeatureKind::numeric) {
                    try {
                        std::size_t pos = 0;
                        double num = std::stod(v, &pos);
                        if (pos != v.size()) throw std::invalid_argument(v);
                        cell.number = num;
                    } catch (const std::exception&) {
                        throw DataError(origin + " row '" + id + "' column '" + f.name +
                                        "': unparseable numeric value '" + v + "'");
                    }
                } else {
                    if (std::find(f.categories.begin(), f.categories.end(), v) == f.categories.end())
                        throw DataError(origin + " row '" + id + "' column '" + f.name +
                                        "': value '" + v + "' not in schema categories");
                    cell.text = v;
                }
            }
            row[fi] = std::move(cell);
        }
        out.row_ids.push_back(id);
        out.cells.push_back(std::move(row));
    }
    return out;
}

RawDataset load_csv(const std::string& path, const std::string& schema_path) {
    Schema schema = load_schema(schema_path);
    return parse_csv(read_file(path), schema, path);
}

Dataset encode_categoricals(const RawDataset& raw) {
    Dataset d;
    d.schema = raw.schema;
    d.row_ids = raw.row_ids;
    d.values = Matrix(raw.cells.size(), raw.schema.size(), Matrix::missing());
    for (std::size_t r = 0; r < raw.cells.size(); ++r) {
        for (std::size_t c = 0; c < raw.schema.size(); ++c) {
            const RawCell& cell = raw.cells[r][c];
            if (cell.missing()) continue;
            const FeatureSchema& f = raw.schema.features[c];
            if (f.kind == FeatureKind::numeric) {
                d.values.at(r, c) = *cell.number;
            } else {
                auto it = std::find(f.categories.begin(), f.categories.end(), *cell.text);
                d.values.at(r, c) = static_cast<double>(it - f.categories.begin());
            }
        }
    }
    return d;
}

RawDataset decode_categoricals(const Dataset& d) {
    RawDataset raw;
    raw.schema = d.schema;
    raw.row_ids = d.row_ids;
    raw.cells.assign(d.n_rows(), std::vector<RawCell>(d.n_features()));
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        for (std::size_t c = 0; c < d.n_features(); ++c) {
            double v = d.values.at(r, c);
            if (Matrix::is_missing(v)) continue;
            const FeatureSchema& f = d.schema.features[c];
            RawCell cell;
            if (f.kind == FeatureKind::numeric) {
                cell.number = v;
            } else {
                auto code = static_cast<long long>(std::llround(v));
                if (code < 0 || code >= static_cast<long long>(f.categories.size()))
                    throw DataError("decode: code " + std::to_string(code) + " out of range for '" + f.name + "'");
                cell.text = f.categories[static_cast<std::size_t>(code)];
            }
            raw.cells[r][c] = std::move(cell);
        }
    }
    return raw;
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.schema = schema;
    out.values = values.select_rows(idx);
    for (auto i : idx) {
        out.row_ids.push_back(row_ids[i]);
        if (has_labels()) out.labels.push_back(labels[i]);
    }
    return out;
}

Dataset Dataset::select_features(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.row_ids = row_ids;
    out.labels = labels;
    out.values = values.select_cols(idx);
    for (auto i : idx) out.schema.features.push_back(schema.features[i]);
    return out;
}

namespace {
std::string format_value(double v) {
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}
}  // namespace

void save_csv(const Dataset& d, const std::string& path,
              const std::string& label_column, const std::vector<double>& label_values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write csv: " + path);
    out << "id";
    for (const auto& f : d.schema.features) out << "," << f.name;
    if (!label_column.empty()) out << "," << label_column;
    out << "\n";
    RawDataset raw = decode_categoricals(d);
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        out << d.row_ids[r];
        for (std::size_t c = 0; c < d.n_features(); ++c) {
            const RawCell& cell = raw.cells[r][c];
            out << ",";
            if (cell.number)
                out << format_value(*cell.number);
            else if (cell.text)
                out << *cell.text;
        }
        if (!label_column.empty()) out << "," << format_value(label_values.at(r));
        out << "\n";
    }
}

LabelResult derive_labels(const std::vector<std::optional<double>>& hours) {
    LabelResult res;
    for (std::size_t i = 0; i < hours.size(); ++i) {
        if (!hours[i]) {
            res.excluded_rows.push_back(i);
            continue;
        }
        if (*hours[i] < 0) throw DataError("derive_labels: negative hours at row " + std::to_string(i));
        res.kept_rows.push_back(i);
        res.labels.push_back(*hours[i] > 4.0 ? 1 : 0);
    }
    return res;
}

SplitIndex stratified_split(const std::vector<int>& labels, double test_ratio, std::uint64_t seed) {
    if (labels.empty()) throw DataError("stratified_split: no labels");
    if (!(test_ratio > 0.0 && test_ratio < 1.0)) throw DataError("stratified_split: ratio outside (0,1)");
    std::vector<std::vector<std::size_t>> by_label(2);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw DataError("stratified_split: label must be 0/1");
        by_label[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (int lbl = 0; lbl < 2; ++lbl)
        if (by_label[lbl].empty())
            throw DataError("stratified_split: label " + std::to_string(lbl) + " has no rows");

    std::size_t n = labels.size();
    auto total_test = static_cast<std::size_t>(std::llround(test_ratio * static_cast<double>(n)));
    total_test = std::min(std::max<std::size_t>(total_test, 1), n - 1);

    // Largest-remainder allocation of per-label test counts, ties broken by
    // label value ascending.
    std::size_t floor_sum = 0;
    std::vector<std::size_t> take(2, 0);
    std::vector<double> rem(2, 0.0);
    for (int lbl = 0; lbl < 2; ++lbl) {
        double exact = test_ratio * static_cast<double>(by_label[lbl].size());
        take[lbl] = static_cast<std::size_t>(std::floor(exact));
        rem[lbl] = exact - std::floor(exact);
        floor_sum += take[lbl];
    }
    std::vector<int> order = {0, 1};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    std::size_t extra = total_test > floor_sum ? total_test - floor_sum : 0;
    for (int lbl : order) {
        if (extra == 0) break;
        if (take[lbl] < by_label[lbl].size()) {
            ++take[lbl];
            --extra;
        }
    }
    while (floor_sum > total_test) {  // over-allocation (rounding down of total)
        for (int lbl : order)
            if (floor_sum > total_test && take[lbl] > 0) {
                --take[lbl];
                --floor_sum;
            }
    }

    SplitIndex out;
    out.seed = seed;
    for (int lbl = 0; lbl < 2; ++lbl) {
        auto rows = by_label[lbl];
        auto rng = make_rng(seed, {17u, static_cast<std::uint64_t>(lbl)});
        std::shuffle(rows.begin(), rows.end(), rng);
        for (std::size_t i = 0; i < rows.size(); ++i)
            (i < take[lbl] ? out.test_rows : out.train_rows).push_back(rows[i]);
    }
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.test_rows.begin(), out.test_rows.end());
    return out;
}

}  // namespace cpapml
