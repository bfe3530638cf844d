#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecmkit/datagen.hpp"
#include "ecmkit/feature_matrix.hpp"

namespace ecmkit {

enum class DatasetFormat { NativeCsv, NativeJsonl, ImportedCsv };

/// Parses "native-csv", "native-jsonl" or "imported-csv".
DatasetFormat dataset_format_from_string(std::string_view name);

/// Column layout of a foreign CSV file. Either `z` names a single column of
/// complex values, or `zreal` and `zimag` name two real columns. Array cells
/// may be bracketed and separated by commas, semicolons or whitespace;
/// complex entries may be written as a+bj, (a+bj) or a+bi.
struct ColumnMapping {
    std::string id;  // empty: ids are the 1-based row numbers
    std::string circuit;  // empty: unlabeled
    std::string freq = "freq";
    std::string z;
    std::string zreal = "zreal";
    std::string zimag = "zimag";
    char delimiter = ',';
    /// Sort each record by frequency when the file lists it descending.
    bool sort_by_frequency = true;
};

/// Shortest decimal that parses back to exactly `x`.
std::string format_double(double x);

/// Quotes a CSV cell when it holds a delimiter, quote or line break.
std::string csv_escape(std::string_view cell);

/// Splits CSV text into records, honouring quoted cells. Throws
/// ParseError(line, column) on an unterminated quote.
std::vector<std::vector<std::string>> parse_csv(std::string_view text, char delimiter = ',');

std::string read_text_file(const std::filesystem::path& path);  // IoError
void write_text_file(const std::filesystem::path& path, std::string_view text);  // IoError

/// Header id,circuit,freq,zreal,zimag; array cells joined by ';'.
std::string dataset_to_csv(const Dataset& d);
Dataset dataset_from_csv(std::string_view text);

/// One JSON object per line with the same keys as the CSV header.
std::string dataset_to_jsonl(const Dataset& d);
Dataset dataset_from_jsonl(std::string_view text);

Dataset import_csv(std::string_view text, const ColumnMapping& mapping);

Dataset read_dataset(const std::filesystem::path& path, DatasetFormat format, const ColumnMapping& mapping = {});
void write_dataset(const Dataset& d, const std::filesystem::path& path, DatasetFormat format);

/// Header id,label,<columns>. Rows in matrix order.
std::string feature_matrix_to_csv(const FeatureMatrix& m);
FeatureMatrix feature_matrix_from_csv(std::string_view text);

}  // namespace ecmkit
