#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "congrob/layout_io.hpp"
#include "congrob/predictor.hpp"

namespace congrob {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kind_name(ConvLayer::Kind k) {
  return k == ConvLayer::Kind::conv ? "conv" : "tconv";
}

ConvLayer::Kind kind_from(const std::string& s) {
  if (s == "conv") return ConvLayer::Kind::conv;
  if (s == "tconv") return ConvLayer::Kind::tconv;
  throw std::runtime_error("checkpoint: unknown layer kind " + s);
}

}  // namespace

void save_model(const std::string& dir, const Model& m) {
  fs::create_directories(dir);
  std::ostringstream os;
  os << "{\n";
  os << "  \"type\": \"" << (m.kind == Model::Kind::fcn ? "fcn" : "gcn") << "\",\n";
  os << "  \"scales\": {\"rudy\": " << format_real(m.scales.rudy)
     << ", \"pin_rudy\": " << format_real(m.scales.pin_rudy)
     << ", \"macro\": " << format_real(m.scales.macro) << "},\n";
  if (m.kind == Model::Kind::fcn) {
    os << "  \"layers\": [\n";
    for (std::size_t i = 0; i < m.fcn.layers.size(); ++i) {
      const ConvLayer& L = m.fcn.layers[i];
      const std::string wf = "layer" + std::to_string(i) + "_w.ten";
      const std::string bf = "layer" + std::to_string(i) + "_b.ten";
      write_ten(dir + "/" + wf, flat_tensor(L.w));
      write_ten(dir + "/" + bf, flat_tensor(L.b));
      os << "    {\"kind\": \"" << kind_name(L.kind) << "\", \"in_ch\": " << L.in_ch
         << ", \"out_ch\": " << L.out_ch << ", \"k\": " << L.k
         << ", \"stride\": " << L.stride << ", \"pad\": " << L.pad
         << ", \"relu\": " << (L.relu ? "true" : "false") << ", \"weights\": \"" << wf
         << "\", \"bias\": \"" << bf << "\"}"
         << (i + 1 < m.fcn.layers.size() ? "," : "") << "\n";
    }
    os << "  ]\n";
  } else {
    write_ten(dir + "/w1.ten", flat_tensor(m.gcn.w1));
    write_ten(dir + "/b1.ten", flat_tensor(m.gcn.b1));
    write_ten(dir + "/w2.ten", flat_tensor(m.gcn.w2));
    write_ten(dir + "/b2.ten", flat_tensor({m.gcn.b2}));
    os << "  \"files\": {\"w1\": \"w1.ten\", \"b1\": \"b1.ten\", \"w2\": \"w2.ten\", \"b2\": \"b2.ten\"}\n";
  }
  os << "}\n";
  std::ofstream f(dir + "/manifest.json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + dir + "/manifest.json");
  f << os.str();
}

Model load_model(const std::string& dir) {
  std::ifstream f(dir + "/manifest.json");
  if (!f) throw std::runtime_error("cannot open " + dir + "/manifest.json");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(dir + "/manifest.json: " + e.what());
  }
  Model m;
  const std::string type = j.at("type").get<std::string>();
  m.scales.rudy = j.at("scales").at("rudy").get<double>();
  m.scales.pin_rudy = j.at("scales").at("pin_rudy").get<double>();
  m.scales.macro = j.at("scales").at("macro").get<double>();
  if (type == "fcn") {
    m.kind = Model::Kind::fcn;
    for (const auto& jl : j.at("layers")) {
      ConvLayer L;
      L.kind = kind_from(jl.at("kind").get<std::string>());
      L.in_ch = jl.at("in_ch").get<int>();
      L.out_ch = jl.at("out_ch").get<int>();
      L.k = jl.at("k").get<int>();
      L.stride = jl.at("stride").get<int>();
      L.pad = jl.at("pad").get<int>();
      L.relu = jl.at("relu").get<bool>();
      L.w = read_ten(dir + "/" + jl.at("weights").get<std::string>()).data;
      L.b = read_ten(dir + "/" + jl.at("bias").get<std::string>()).data;
      const std::size_t expect = static_cast<std::size_t>(L.in_ch) * L.out_ch * L.k * L.k;
      if (L.w.size() != expect || L.b.size() != static_cast<std::size_t>(L.out_ch))
        throw std::runtime_error(dir + ": layer tensor size mismatch");
      m.fcn.layers.push_back(std::move(L));
    }
  } else if (type == "gcn") {
    m.kind = Model::Kind::gcn;
    m.gcn.w1 = read_ten(dir + "/" + j.at("files").at("w1").get<std::string>()).data;
    m.gcn.b1 = read_ten(dir + "/" + j.at("files").at("b1").get<std::string>()).data;
    m.gcn.w2 = read_ten(dir + "/" + j.at("files").at("w2").get<std::string>()).data;
    m.gcn.b2 = read_ten(dir + "/" + j.at("files").at("b2").get<std::string>()).data.at(0);
    if (m.gcn.w1.size() != static_cast<std::size_t>(kGcnIn) * kGcnHidden ||
        m.gcn.b1.size() != kGcnHidden || m.gcn.w2.size() != kGcnHidden)
      throw std::runtime_error(dir + ": gcn tensor size mismatch");
  } else {
    throw std::runtime_error(dir + ": unknown model type " + type);
  }
  return m;
}

}  // namespace congrob
