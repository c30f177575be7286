#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace tobitadd {

/// Malformed CSV input (missing file, bad header, non-numeric cell).
struct CsvError : std::runtime_error {
    explicit CsvError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dialect: comma-separated, header row required, UTF-8, '.' decimal point,
// no thousands separators. Lines starting with '#' are metadata comments.

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t num_rows() const { return rows.size(); }

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

inline double parse_double(const std::string& field, std::size_t line_no) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw CsvError("line " + std::to_string(line_no) + ": cannot parse '" + field +
                       "' as a number");
    return value;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const std::vector<std::string> fields = detail::split_line(line);
        if (!have_header) {
            for (const std::string& name : fields)
                if (name.empty())
                    throw CsvError("line " + std::to_string(line_no) + ": empty column name");
            table.columns = fields;
            have_header = true;
            continue;
        }
        if (fields.size() != table.columns.size())
            throw CsvError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(table.columns.size()) + " fields, got " +
                           std::to_string(fields.size()));
        std::vector<double> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i)
            row[i] = detail::parse_double(fields[i], line_no);
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw CsvError("no header row found");
    return table;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open '" + path + "'");
    try {
        return read_csv(in);
    } catch (const CsvError& e) {
        throw CsvError(path + ": " + e.what());
    }
}

/// Shortest round-trip decimal representation.
inline std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

}  // namespace tobitadd
