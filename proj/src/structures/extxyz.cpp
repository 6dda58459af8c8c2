// SPDX-License-Identifier: Apache-2.0
#include "esgnn/structures/extxyz.h"

#include <fstream>
#include <map>
#include <sstream>

#include "esgnn/core/elements.h"
#include "esgnn/core/error.h"

namespace esgnn::structures {

namespace {

// key=value pairs separated by whitespace; values may be quoted.
std::map<std::string, std::string> parse_comment_line(const std::string& line, long lineno) {
  std::map<std::string, std::string> kv;
  size_t i = 0;
  const size_t n = line.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= n) break;
    const size_t key_start = i;
    while (i < n && line[i] != '=' && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= n || line[i] != '=') {
      // bare token without '='; tolerate and skip
      continue;
    }
    const std::string key = line.substr(key_start, i - key_start);
    ++i;  // '='
    std::string value;
    if (i < n && line[i] == '"') {
      ++i;
      const size_t val_start = i;
      while (i < n && line[i] != '"') ++i;
      if (i >= n) throw ParseError("unterminated quote in comment line", lineno);
      value = line.substr(val_start, i - val_start);
      ++i;  // closing quote
    } else {
      const size_t val_start = i;
      while (i < n && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      value = line.substr(val_start, i - val_start);
    }
    kv[key] = value;
  }
  return kv;
}

double parse_double(const std::string& tok, long lineno) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected a number, got '" + tok + "'", lineno);
  }
}

}  // namespace

AtomicStructure read_extxyz(std::istream& in) {
  std::string line;
  long lineno = 0;

  if (!std::getline(in, line)) throw ParseError("empty input", 1);
  ++lineno;
  int natoms = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> natoms) || natoms < 0) throw ParseError("expected atom count", lineno);
  }

  if (!std::getline(in, line)) throw ParseError("missing comment line", 2);
  ++lineno;
  const auto kv = parse_comment_line(line, lineno);

  AtomicStructure s;
  if (auto it = kv.find("Lattice"); it != kv.end()) {
    std::istringstream ss(it->second);
    std::string tok;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        if (!(ss >> tok)) throw ParseError("Lattice needs 9 numbers", lineno);
        s.cell(r, c) = parse_double(tok, lineno);
      }
    s.pbc = {true, true, true};
  }
  if (auto it = kv.find("pbc"); it != kv.end()) {
    std::istringstream ss(it->second);
    std::string tok;
    for (int d = 0; d < 3; ++d) {
      if (!(ss >> tok)) throw ParseError("pbc needs 3 flags", lineno);
      if (tok == "T" || tok == "true" || tok == "True" || tok == "1")
        s.pbc[d] = true;
      else if (tok == "F" || tok == "false" || tok == "False" || tok == "0")
        s.pbc[d] = false;
      else
        throw ParseError("bad pbc flag '" + tok + "'", lineno);
    }
  }
  if (s.any_periodic() && kv.find("Lattice") == kv.end())
    throw ParseError("pbc set but no Lattice given", lineno);

  s.positions.reserve(natoms);
  s.species.reserve(natoms);
  for (int k = 0; k < natoms; ++k) {
    if (!std::getline(in, line)) throw ParseError("expected " + std::to_string(natoms) +
                                                      " atom lines, got " + std::to_string(k),
                                                  lineno + 1);
    ++lineno;
    std::istringstream ss(line);
    std::string sym, xs, ys, zs;
    if (!(ss >> sym >> xs >> ys >> zs)) throw ParseError("expected 'Symbol x y z'", lineno);
    s.species.push_back(atomic_number(sym));
    s.positions.emplace_back(parse_double(xs, lineno), parse_double(ys, lineno),
                             parse_double(zs, lineno));
  }
  return s;
}

AtomicStructure read_extxyz_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return read_extxyz(in);
}

void write_extxyz(std::ostream& out, const AtomicStructure& s) {
  out << s.n_atoms() << "\n";
  out.precision(17);
  if (s.any_periodic()) {
    out << "Lattice=\"";
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << s.cell(r, c) << (r == 2 && c == 2 ? "" : " ");
    out << "\" pbc=\"" << (s.pbc[0] ? "T" : "F") << " " << (s.pbc[1] ? "T" : "F") << " "
        << (s.pbc[2] ? "T" : "F") << "\"";
  }
  out << "\n";
  for (int k = 0; k < s.n_atoms(); ++k) {
    out << element_symbol(s.species[k]) << " " << s.positions[k][0] << " " << s.positions[k][1]
        << " " << s.positions[k][2] << "\n";
  }
}

void write_extxyz_file(const std::string& path, const AtomicStructure& s) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  write_extxyz(out, s);
}

}  // namespace esgnn::structures
