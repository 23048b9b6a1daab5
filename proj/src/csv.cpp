#include "coffee/csv.hpp"

#include <charconv>
#include <istream>
#include <iterator>
#include <ostream>
#include <stdexcept>

namespace coffee::csv {

std::vector<Row> read(std::istream& in, char separator) {
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::size_t pos = 0;
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) pos = 3;

    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        // A bare newline (e.g. trailing blank line) is not a record.
        if (!(row.size() == 1 && row.front().empty())) rows.push_back(std::move(row));
        row.clear();
    };

    for (; pos < text.size(); ++pos) {
        const char c = text[pos];
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field.push_back('"');
                    ++pos;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == separator) {
            end_field();
        } else if (c == '\r') {
            if (pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            end_row();
        } else if (c == '\n') {
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw std::runtime_error("csv: unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

void write_row(std::ostream& out, std::span<const std::string> fields, char separator) {
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out << separator;
        first = false;
        if (f.find_first_of(std::string{separator} + "\"\r\n") == std::string::npos) {
            out << f;
            continue;
        }
        out << '"';
        for (char c : f) {
            if (c == '"') out << '"';
            out << c;
        }
        out << '"';
    }
    out << '\n';
}

std::string format_double(double value) {
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    if (ec != std::errc{}) throw std::runtime_error("csv: cannot format number");
    return {buffer, end};
}

}  // namespace coffee::csv
