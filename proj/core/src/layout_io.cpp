#include "congrob/layout_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace congrob {

using nlohmann::json;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

void write_layout_json(const std::string& path, const Layout& l) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"grid\": {\"W\": " << l.grid.w << ", \"H\": " << l.grid.h << "},\n";
  os << "  \"cells\": [\n";
  for (int i = 0; i < l.n_cells(); ++i) {
    const auto& c = l.netlist->cells[i];
    os << "    {\"w\": " << format_real(c.width) << ", \"h\": " << format_real(c.height)
       << ", \"macro\": " << (c.is_macro ? "true" : "false") << "}"
       << (i + 1 < l.n_cells() ? "," : "") << "\n";
  }
  os << "  ],\n";
  os << "  \"coords\": [\n";
  for (int i = 0; i < l.n_cells(); ++i) {
    os << "    [" << format_real(l.coords[i][0]) << ", " << format_real(l.coords[i][1])
       << "]" << (i + 1 < l.n_cells() ? "," : "") << "\n";
  }
  os << "  ],\n";
  os << "  \"nets\": [\n";
  for (std::size_t e = 0; e < l.netlist->nets.size(); ++e) {
    const Net& net = l.netlist->nets[e];
    os << "    [";
    for (std::size_t p = 0; p < net.size(); ++p) {
      os << "{\"cell\": " << net[p].cell << ", \"ox\": " << format_real(net[p].ox)
         << ", \"oy\": " << format_real(net[p].oy) << "}"
         << (p + 1 < net.size() ? ", " : "");
    }
    os << "]" << (e + 1 < l.netlist->nets.size() ? "," : "") << "\n";
  }
  os << "  ]\n}\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << os.str();
}

Layout read_layout_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  Layout l;
  auto netlist = std::make_shared<Netlist>();
  try {
    l.grid.w = j.at("grid").at("W").get<int>();
    l.grid.h = j.at("grid").at("H").get<int>();
    for (const auto& jc : j.at("cells")) {
      netlist->cells.push_back({jc.at("w").get<double>(), jc.at("h").get<double>(),
                                jc.at("macro").get<bool>()});
    }
    for (const auto& jc : j.at("coords")) {
      l.coords.push_back({jc.at(0).get<double>(), jc.at(1).get<double>()});
    }
    for (const auto& jn : j.at("nets")) {
      Net net;
      for (const auto& jp : jn) {
        net.push_back({jp.at("cell").get<int>(), jp.at("ox").get<double>(),
                       jp.at("oy").get<double>()});
      }
      netlist->nets.push_back(std::move(net));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": malformed layout json: " + e.what());
  }
  l.netlist = netlist;
  validate_layout(l);
  return l;
}

void write_perturbation_json(const std::string& path, const Perturbation& p) {
  std::ostringstream os;
  os << "{\n  \"eps0\": " << p.eps0 << ",\n  \"n\": " << p.delta.size()
     << ",\n  \"rows\": [\n";
  bool first = true;
  for (std::size_t i = 0; i < p.delta.size(); ++i) {
    if (!p.moved[i]) continue;
    if (!first) os << ",\n";
    first = false;
    os << "    {\"cell\": " << i << ", \"dx\": " << format_real(p.delta[i][0])
       << ", \"dy\": " << format_real(p.delta[i][1]) << "}";
  }
  os << "\n  ]\n}\n";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << os.str();
}

Perturbation read_perturbation_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  try {
    const auto n = j.at("n").get<std::size_t>();
    Perturbation p(n);
    p.eps0 = j.at("eps0").get<int>();
    for (const auto& row : j.at("rows")) {
      const auto cell = row.at("cell").get<std::size_t>();
      if (cell >= n)
        throw std::runtime_error("perturbation row cell index out of range");
      p.delta[cell] = {row.at("dx").get<double>(), row.at("dy").get<double>()};
      p.moved[cell] = p.delta[cell][0] != 0.0 || p.delta[cell][1] != 0.0;
    }
    return p;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": malformed perturbation json: " + e.what());
  }
}

}  // namespace congrob
