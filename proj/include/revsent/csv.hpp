#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "revsent/error.hpp"

namespace revsent::csv {

using Row = std::vector<std::string>;

/// One parsed record plus the 1-based physical line it started on.
struct Record {
  Row fields;
  std::size_t line = 0;
};

// RFC-4180 reader: quoted fields may contain commas, doubled quotes and line
// breaks. CRLF and LF record separators are both accepted. Blank lines are skipped.
inline std::vector<Record> parse(std::string_view data) {
  std::vector<Record> records;
  if (data.starts_with("\xEF\xBB\xBF")) data.remove_prefix(3);

  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    const bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = Record{};
    current.line = line;
  };

  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty())
          throw DataError("stray quote inside unquoted field at line " + std::to_string(line));
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < data.size() && data[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_field();
        ++line;
        end_record();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field starting near line " + std::to_string(current.line));
  if (field_started || !current.fields.empty()) {
    end_field();
    end_record();
  }
  return records;
}

inline std::string escape(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void append_row(std::string& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += escape(row[i]);
  }
  out += '\n';
}

inline std::string write(const Row& header, const std::vector<Row>& rows) {
  std::string out;
  append_row(out, header);
  for (const auto& r : rows) append_row(out, r);
  return out;
}

}  // namespace revsent::csv
