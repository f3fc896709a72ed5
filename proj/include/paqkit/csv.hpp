#pragma once

#include <string>
#include <vector>

namespace paqkit {

/// Quotes a field per RFC 4180 when it contains a comma, quote or newline.
std::string csv_escape(const std::string& field);

/// Splits one CSV record honouring quoted fields ("" unescapes to ").
std::vector<std::string> csv_split(const std::string& line);

/// Splits a CSV document into records; handles CRLF and skips a trailing
/// empty line. Quoted fields may not span lines.
std::vector<std::vector<std::string>> csv_parse(const std::string& text);

}
