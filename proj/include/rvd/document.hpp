#pragma once

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace rvd {

/// Generic key-value document. Key order is preserved so that the pipeline
/// and the on-disk form stay byte-stable.
using Document = nlohmann::ordered_json;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses YAML text into a Document.
///
/// Quoted scalars are always strings. Plain scalars follow the YAML 1.2 core
/// schema: null, booleans, integers and floats are typed, everything else
/// (including dates and the literal `None`) stays a string.
Document parse_yaml(std::string_view text);

/// Renders a Document as block-style YAML. Strings are always double quoted
/// so that parse_yaml(render_yaml(d)) == d for every document.
std::string render_yaml(const Document& doc);

/// Shortest decimal text that reads back to exactly `value`. Always carries
/// a fractional part or exponent so it re-parses as a float.
std::string format_double(double value);

}  // namespace rvd
