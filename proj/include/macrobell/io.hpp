#pragma once

// JSON / CSV plumbing: POVM and coefficient parsing, 18-digit CSV output and
// atomic file writes.

#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "macrobell/errors.hpp"
#include "macrobell/numeric.hpp"
#include "macrobell/povm.hpp"

namespace macrobell::io {

using nlohmann::json;

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::InvalidArgument, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidArgument, what + " is not valid JSON: " + e.what());
  }
}

inline json read_json(const std::filesystem::path& path) { return parse_json(read_text(path), path.string()); }

/// Writes to a temporary file beside the target, then renames it into place.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(Errc::InvalidArgument, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(Errc::InvalidArgument, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

/// "%.18g".
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.18g", v);
  return buf;
}

/// A complex number is a JSON number or a [re, im] pair.
inline cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw Error(Errc::InvalidArgument, "complex numbers must be numbers or [re, im] pairs");
}

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline std::vector<cplx> complex_vector_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw Error(Errc::InvalidArgument, "expected a non-empty array of coefficients");
  std::vector<cplx> out;
  for (const auto& v : j) out.push_back(complex_from_json(v));
  return out;
}

/// {"outcomes": [a, ...], "effects": [[[re,im],[re,im]],[[re,im],[re,im]]], ...]}
inline SingleParticlePovm povm_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "POVM must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "outcomes" && key != "effects") throw Error(Errc::InvalidArgument, "unknown POVM key '" + key + "'");
  }
  if (!j.contains("outcomes") || !j.contains("effects")) throw Error(Errc::InvalidArgument, "POVM needs outcomes and effects");
  const auto& jo = j.at("outcomes");
  const auto& je = j.at("effects");
  if (!jo.is_array() || !je.is_array()) throw Error(Errc::InvalidArgument, "outcomes and effects must be arrays");
  std::vector<double> outcomes;
  for (const auto& v : jo) {
    if (!v.is_number()) throw Error(Errc::InvalidArgument, "outcomes must be numbers");
    outcomes.push_back(v.get<double>());
  }
  std::vector<ComplexMatrix2> effects;
  for (std::size_t i = 0; i < je.size(); ++i) {
    const auto& m = je[i];
    if (!m.is_array() || m.size() != 2 || !m[0].is_array() || !m[1].is_array() || m[0].size() != 2 || m[1].size() != 2) {
      throw Error(Errc::InvalidArgument, "effect " + std::to_string(i) + " must be a 2x2 matrix", i);
    }
    ComplexMatrix2 e;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) e(r, c) = complex_from_json(m[r][c]);
    effects.push_back(e);
  }
  return validate_povm(std::move(outcomes), std::move(effects));
}

inline json povm_to_json(const SingleParticlePovm& povm) {
  json effects = json::array();
  for (const auto& e : povm.effects()) {
    effects.push_back(json::array({json::array({complex_to_json(e(0, 0)), complex_to_json(e(0, 1))}),
                                   json::array({complex_to_json(e(1, 0)), complex_to_json(e(1, 1))})}));
  }
  return {{"outcomes", povm.outcomes()}, {"effects", effects}};
}

inline SingleParticlePovm load_povm(const std::filesystem::path& path) { return povm_from_json(read_json(path)); }

/// CSV with a header row and one row per index; every column has equal length.
inline std::string csv(const std::vector<std::string>& header, const std::vector<const std::vector<double>*>& columns) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
  out += '\n';
  const std::size_t rows = columns.empty() ? 0 : columns[0]->size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += fmt((*columns[c])[r]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace macrobell::io
