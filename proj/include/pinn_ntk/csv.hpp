#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pinn_ntk {

/// Locale-independent rendering with 17 significant digits.
std::string format_real(double v);
/// Shortest text that parses back to exactly v.
std::string format_real_shortest(double v);
double parse_real(std::string_view text);
long long parse_integer(std::string_view text);

/// Writes a file whose first lines are "# key=value" header comments
/// followed by CSV rows. Fields containing ',', '"' or newlines are quoted.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header_lines) : header_(std::move(header_lines)) {}

    void columns(const std::vector<std::string>& names) { row(names); }
    void row(const std::vector<std::string>& fields);
    std::string str() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::string body_;
};

std::string csv_escape(const std::string& field);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace pinn_ntk
