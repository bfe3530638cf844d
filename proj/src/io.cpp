#include "ecmkit/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "ecmkit/error.hpp"

namespace ecmkit {

using nlohmann::json;

namespace {

[[noreturn]] void parse_error(std::size_t line, std::size_t column, const std::string& what) {
    throw Error(ErrorCode::ParseError, fmt::format("line {}, column {}: {}", line, column, what));
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

bool parse_number(std::string_view token, double& out) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    if (token.empty()) return false;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc() && ptr == token.data() + token.size();
}

std::vector<double> parse_real_array(std::string_view cell, std::size_t line, std::size_t column) {
    std::vector<double> out;
    if (trim(cell).empty()) return out;
    std::size_t start = 0;
    while (start <= cell.size()) {
        auto end = cell.find(';', start);
        if (end == std::string_view::npos) end = cell.size();
        double v = 0.0;
        if (!parse_number(cell.substr(start, end - start), v)) {
            parse_error(line, column, fmt::format("'{}' is not a number", cell.substr(start, end - start)));
        }
        out.push_back(v);
        start = end + 1;
    }
    return out;
}

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ';';
        out += format_double(values[i]);
    }
    return out;
}

Spectrum make_spectrum(std::string id, std::string label, std::vector<double> freq, const std::vector<double>& re,
                       const std::vector<double>& im) {
    if (freq.size() != re.size() || freq.size() != im.size()) {
        throw Error(ErrorCode::LengthMismatch, fmt::format("record '{}' has {} frequencies, {} real and {} imaginary "
                                                           "values",
                                                           id, freq.size(), re.size(), im.size()));
    }
    Spectrum s;
    s.id = std::move(id);
    s.label = std::move(label);
    s.freq = std::move(freq);
    s.z.resize(re.size());
    for (std::size_t i = 0; i < re.size(); ++i) s.z[i] = {re[i], im[i]};
    return s;
}

// Array cells of foreign files: "[1, 2, 3]", "1 2 3", "(1+2j) (3-4j)".
std::vector<std::string_view> split_array_tokens(std::string_view cell) {
    cell = trim(cell);
    if (!cell.empty() && (cell.front() == '[' || cell.front() == '{')) cell.remove_prefix(1);
    if (!cell.empty() && (cell.back() == ']' || cell.back() == '}')) cell.remove_suffix(1);
    std::vector<std::string_view> out;
    std::size_t i = 0;
    auto is_sep = [](char c) { return c == ',' || c == ';' || c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (i < cell.size()) {
        while (i < cell.size() && is_sep(cell[i])) ++i;
        if (i >= cell.size()) break;
        std::size_t j = i;
        if (cell[i] == '(') {
            j = cell.find(')', i);
            j = j == std::string_view::npos ? cell.size() : j + 1;
        } else {
            while (j < cell.size() && !is_sep(cell[j])) ++j;
        }
        out.push_back(cell.substr(i, j - i));
        i = j;
    }
    return out;
}

bool parse_complex(std::string_view token, Complex& out) {
    token = trim(token);
    if (!token.empty() && token.front() == '(' && token.back() == ')') token = token.substr(1, token.size() - 2);
    token = trim(token);
    if (token.empty()) return false;
    const char last = token.back();
    if (last != 'j' && last != 'i' && last != 'J' && last != 'I') {
        double re = 0.0;
        if (!parse_number(token, re)) return false;
        out = {re, 0.0};
        return true;
    }
    token.remove_suffix(1);
    // The split is the last sign that does not belong to an exponent.
    std::size_t split = std::string_view::npos;
    for (std::size_t i = token.size(); i-- > 1;) {
        if ((token[i] == '+' || token[i] == '-') && token[i - 1] != 'e' && token[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    double re = 0.0, im = 0.0;
    if (split == std::string_view::npos) {
        if (!parse_number(token, im)) return false;
    } else {
        if (!parse_number(token.substr(0, split), re)) return false;
        std::string_view imag = token.substr(split);
        if (imag == "+" || imag == "-") {
            im = imag == "+" ? 1.0 : -1.0;
        } else if (!parse_number(imag.front() == '+' ? imag.substr(1) : imag, im)) {
            return false;
        }
    }
    out = {re, im};
    return true;
}

std::vector<double> parse_foreign_reals(std::string_view cell, std::size_t line, std::size_t column) {
    std::vector<double> out;
    for (auto token : split_array_tokens(cell)) {
        double v = 0.0;
        if (!parse_number(token, v)) parse_error(line, column, fmt::format("'{}' is not a number", token));
        out.push_back(v);
    }
    return out;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) { return trim(h) == name; });
    if (it == header.end()) parse_error(1, 1, fmt::format("missing column '{}'", name));
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

DatasetFormat dataset_format_from_string(std::string_view name) {
    if (name == "native-csv" || name == "csv") return DatasetFormat::NativeCsv;
    if (name == "native-jsonl" || name == "jsonl") return DatasetFormat::NativeJsonl;
    if (name == "imported-csv" || name == "imported") return DatasetFormat::ImportedCsv;
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown dataset format '{}'", name));
}

std::string format_double(double x) {
    return fmt::format("{}", x);
}

std::string csv_escape(std::string_view cell) {
    if (cell.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(cell);
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text, char delimiter) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    bool row_has_content = false;
    std::size_t line = 1, column = 1, quote_line = 0, quote_column = 0;
    for (std::size_t i = 0; i < text.size(); ++i, ++column) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                    ++column;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') {
                    ++line;
                    column = 0;
                }
                cell += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            quote_line = line;
            quote_column = column;
            row_has_content = true;
        } else if (c == delimiter) {
            row.push_back(std::move(cell));
            cell.clear();
            row_has_content = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (row_has_content || !cell.empty()) {
                row.push_back(std::move(cell));
                rows.push_back(std::move(row));
            }
            row.clear();
            cell.clear();
            row_has_content = false;
            ++line;
            column = 0;
        } else {
            cell += c;
        }
    }
    if (quoted) parse_error(quote_line, quote_column, "unterminated quoted cell");
    if (row_has_content || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::IoError, fmt::format("failed writing '{}'", path.string()));
}

std::string dataset_to_csv(const Dataset& d) {
    std::string out = "id,circuit,freq,zreal,zimag\n";
    std::vector<double> re, im;
    for (const auto& s : d.spectra) {
        re.resize(s.size());
        im.resize(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            re[i] = s.z[i].real();
            im[i] = s.z[i].imag();
        }
        out += fmt::format("{},{},{},{},{}\n", csv_escape(s.id), csv_escape(s.label), join_doubles(s.freq),
                           join_doubles(re), join_doubles(im));
    }
    return out;
}

Dataset dataset_from_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty()) parse_error(1, 1, "missing header");
    const std::vector<std::string> expected{"id", "circuit", "freq", "zreal", "zimag"};
    if (rows.front() != expected) parse_error(1, 1, "header must be id,circuit,freq,zreal,zimag");
    Dataset d;
    d.provenance = "native-csv";
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::size_t line = r + 1;
        if (row.size() != expected.size()) {
            parse_error(line, 1, fmt::format("expected 5 cells, found {}", row.size()));
        }
        auto s = make_spectrum(row[0], row[1], parse_real_array(row[2], line, 3), parse_real_array(row[3], line, 4),
                               parse_real_array(row[4], line, 5));
        validate(s);
        d.spectra.push_back(std::move(s));
    }
    return d;
}

std::string dataset_to_jsonl(const Dataset& d) {
    std::string out;
    auto array = [](const std::vector<double>& values) {
        std::string a = "[";
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) a += ',';
            a += format_double(values[i]);
        }
        return a + "]";
    };
    std::vector<double> re, im;
    for (const auto& s : d.spectra) {
        re.resize(s.size());
        im.resize(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            re[i] = s.z[i].real();
            im[i] = s.z[i].imag();
        }
        out += fmt::format("{{\"id\":{},\"circuit\":{},\"freq\":{},\"zreal\":{},\"zimag\":{}}}\n", json(s.id).dump(),
                           json(s.label).dump(), array(s.freq), array(re), array(im));
    }
    return out;
}

Dataset dataset_from_jsonl(std::string_view text) {
    Dataset d;
    d.provenance = "native-jsonl";
    std::size_t line = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line;
        const auto content = trim(text.substr(start, end - start));
        start = end + 1;
        if (content.empty()) continue;
        json j;
        try {
            j = json::parse(content);
        } catch (const json::parse_error& e) {
            parse_error(line, e.byte, "invalid JSON");
        }
        try {
            auto s = make_spectrum(j.at("id").get<std::string>(), j.value("circuit", std::string{}),
                                   j.at("freq").get<std::vector<double>>(), j.at("zreal").get<std::vector<double>>(),
                                   j.at("zimag").get<std::vector<double>>());
            validate(s);
            d.spectra.push_back(std::move(s));
        } catch (const json::exception& e) {
            parse_error(line, 1, e.what());
        }
    }
    return d;
}

Dataset import_csv(std::string_view text, const ColumnMapping& mapping) {
    const auto rows = parse_csv(text, mapping.delimiter);
    if (rows.empty()) parse_error(1, 1, "missing header");
    const auto& header = rows.front();
    const auto freq_col = column_index(header, mapping.freq);
    const bool complex_column = !mapping.z.empty();
    const auto z_col = complex_column ? column_index(header, mapping.z) : 0;
    const auto re_col = complex_column ? 0 : column_index(header, mapping.zreal);
    const auto im_col = complex_column ? 0 : column_index(header, mapping.zimag);
    const bool has_id = !mapping.id.empty();
    const auto id_col = has_id ? column_index(header, mapping.id) : 0;
    const bool has_label = !mapping.circuit.empty();
    const auto label_col = has_label ? column_index(header, mapping.circuit) : 0;

    Dataset d;
    d.provenance = "imported-csv";
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::size_t line = r + 1;
        auto cell = [&](std::size_t c) -> const std::string& {
            if (c >= row.size()) parse_error(line, c + 1, "row is shorter than the header");
            return row[c];
        };
        const std::string id = has_id ? std::string(trim(cell(id_col))) : std::to_string(r);
        const std::string label = has_label ? std::string(trim(cell(label_col))) : std::string{};
        auto freq = parse_foreign_reals(cell(freq_col), line, freq_col + 1);
        std::vector<double> re, im;
        if (complex_column) {
            for (auto token : split_array_tokens(cell(z_col))) {
                Complex z;
                if (!parse_complex(token, z)) {
                    parse_error(line, z_col + 1, fmt::format("'{}' is not a complex number", token));
                }
                re.push_back(z.real());
                im.push_back(z.imag());
            }
        } else {
            re = parse_foreign_reals(cell(re_col), line, re_col + 1);
            im = parse_foreign_reals(cell(im_col), line, im_col + 1);
        }
        auto s = make_spectrum(id, label, std::move(freq), re, im);
        if (mapping.sort_by_frequency && !std::is_sorted(s.freq.begin(), s.freq.end())) {
            std::vector<std::size_t> order(s.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s.freq[a] < s.freq[b]; });
            Spectrum sorted = s;
            for (std::size_t i = 0; i < order.size(); ++i) {
                sorted.freq[i] = s.freq[order[i]];
                sorted.z[i] = s.z[order[i]];
            }
            s = std::move(sorted);
        }
        validate(s);
        d.spectra.push_back(std::move(s));
    }
    return d;
}

Dataset read_dataset(const std::filesystem::path& path, DatasetFormat format, const ColumnMapping& mapping) {
    const std::string text = read_text_file(path);
    switch (format) {
        case DatasetFormat::NativeCsv: return dataset_from_csv(text);
        case DatasetFormat::NativeJsonl: return dataset_from_jsonl(text);
        case DatasetFormat::ImportedCsv: return import_csv(text, mapping);
    }
    return {};
}

void write_dataset(const Dataset& d, const std::filesystem::path& path, DatasetFormat format) {
    switch (format) {
        case DatasetFormat::NativeCsv: write_text_file(path, dataset_to_csv(d)); return;
        case DatasetFormat::NativeJsonl: write_text_file(path, dataset_to_jsonl(d)); return;
        case DatasetFormat::ImportedCsv: break;
    }
    throw Error(ErrorCode::InvalidConfig, "datasets are written in a native format");
}

std::string feature_matrix_to_csv(const FeatureMatrix& m) {
    std::string out = "id,label";
    for (const auto& c : m.columns) out += "," + csv_escape(c);
    out += "\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out += csv_escape(r < m.ids.size() ? m.ids[r] : std::to_string(r));
        out += ",";
        out += csv_escape(r < m.labels.size() ? m.labels[r] : std::string{});
        for (double v : m.X.row(r)) {
            out += ",";
            out += format_double(v);
        }
        out += "\n";
    }
    return out;
}

FeatureMatrix feature_matrix_from_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows.front().size() < 2 || rows.front()[0] != "id" || rows.front()[1] != "label") {
        parse_error(1, 1, "header must start with id,label");
    }
    FeatureMatrix m;
    m.columns.assign(rows.front().begin() + 2, rows.front().end());
    m.X = Matrix(rows.size() - 1, m.columns.size());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != m.columns.size() + 2) {
            parse_error(r + 1, 1, fmt::format("expected {} cells, found {}", m.columns.size() + 2, row.size()));
        }
        m.ids.push_back(row[0]);
        m.labels.push_back(row[1]);
        for (std::size_t c = 0; c < m.columns.size(); ++c) {
            double v = 0.0;
            if (!parse_number(row[c + 2], v)) parse_error(r + 1, c + 3, fmt::format("'{}' is not a number", row[c + 2]));
            m.X(r - 1, c) = v;
        }
    }
    return m;
}

}  // namespace ecmkit
