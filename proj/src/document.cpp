#include "rvd/document.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <limits>
#include <regex>

namespace rvd {
namespace {

const std::regex& int_pattern() {
  static const std::regex re{R"([-+]?[0-9]+)"};
  return re;
}

const std::regex& float_pattern() {
  static const std::regex re{R"([-+]?(\.[0-9]+|[0-9]+(\.[0-9]*)?)([eE][-+]?[0-9]+)?)"};
  return re;
}

Document plain_scalar(const std::string& s) {
  if (s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  if (std::regex_match(s, int_pattern())) {
    std::int64_t v = 0;
    const char* first = s.data() + (s[0] == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec == std::errc{} && ptr == s.data() + s.size()) return v;
  }
  if (std::regex_match(s, float_pattern())) {
    double v = 0;
    const char* first = s.data() + (s[0] == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec == std::errc{} && ptr == s.data() + s.size()) return v;
  }
  if (s == ".inf" || s == ".Inf" || s == "+.inf") return std::numeric_limits<double>::infinity();
  if (s == "-.inf" || s == "-.Inf") return -std::numeric_limits<double>::infinity();
  if (s == ".nan" || s == ".NaN") return std::numeric_limits<double>::quiet_NaN();
  return s;
}

Document convert(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Undefined:
    case YAML::NodeType::Null:
      return nullptr;
    case YAML::NodeType::Scalar:
      if (node.Tag() == "?") return plain_scalar(node.Scalar());
      return node.Scalar();
    case YAML::NodeType::Sequence: {
      Document out = Document::array();
      for (const auto& item : node) out.push_back(convert(item));
      return out;
    }
    case YAML::NodeType::Map: {
      Document out = Document::object();
      for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (out.contains(key)) throw ParseError("duplicate key '" + key + "'");
        out[key] = convert(kv.second);
      }
      return out;
    }
  }
  return nullptr;
}

void emit(YAML::Emitter& out, const Document& value) {
  switch (value.type()) {
    case Document::value_t::null:
      out << YAML::Null;
      break;
    case Document::value_t::boolean:
      out << (value.get<bool>() ? "true" : "false");
      break;
    case Document::value_t::number_integer:
      out << std::to_string(value.get<std::int64_t>());
      break;
    case Document::value_t::number_unsigned:
      out << std::to_string(value.get<std::uint64_t>());
      break;
    case Document::value_t::number_float:
      out << format_double(value.get<double>());
      break;
    case Document::value_t::string:
      out << YAML::DoubleQuoted << value.get<std::string>();
      break;
    case Document::value_t::array:
      out << YAML::BeginSeq;
      for (const auto& item : value) emit(out, item);
      out << YAML::EndSeq;
      break;
    case Document::value_t::object:
      out << YAML::BeginMap;
      for (const auto& [k, v] : value.items()) {
        out << YAML::Key << k << YAML::Value;
        emit(out, v);
      }
      out << YAML::EndMap;
      break;
    default:
      throw std::invalid_argument("cannot render binary or discarded values");
  }
}

}  // namespace

Document parse_yaml(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ParseError(e.what());
  }
  return convert(root);
}

std::string render_yaml(const Document& doc) {
  YAML::Emitter out;
  emit(out, doc);
  if (!out.good()) throw std::runtime_error(out.GetLastError());
  std::string text = out.c_str();
  text += '\n';
  return text;
}

std::string format_double(double value) {
  if (std::isnan(value)) return ".nan";
  if (std::isinf(value)) return value > 0 ? ".inf" : "-.inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  std::string s(buf, ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace rvd
