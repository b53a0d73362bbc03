#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "scr/hexfloat.hpp"
#include "scr/nn.hpp"
#include "scr/tensor.hpp"

namespace scr {

// Checkpoint format (one file per ParamStore):
//   scrlab-params v1
//   <count>
//   param <name>
//   shape <d0> <d1> ...
//   values <hexfloat> ...        (numel entries, one line)
inline void save_params(std::ostream& os, const ParamStore& store) {
  os << "scrlab-params v1\n" << store.size() << "\n";
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& e = store.entry(i);
    os << "param " << e.name << "\nshape";
    for (int d : e.value.shape()) os << ' ' << d;
    os << "\nvalues";
    for (std::size_t k = 0; k < e.value.numel(); ++k) os << ' ' << double_to_hex(e.value[k]);
    os << "\n";
  }
}

inline void save_params_file(const std::string& path, const ParamStore& store) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  save_params(os, store);
}

inline ParamStore load_params(std::istream& is) {
  std::string header;
  std::getline(is, header);
  if (header != "scrlab-params v1") throw std::runtime_error("bad checkpoint header: " + header);
  std::size_t count = 0;
  is >> count;
  ParamStore store;
  for (std::size_t i = 0; i < count; ++i) {
    std::string kw, name;
    is >> kw >> name;
    if (kw != "param") throw std::runtime_error("bad checkpoint: expected 'param'");
    is >> kw;
    if (kw != "shape") throw std::runtime_error("bad checkpoint: expected 'shape'");
    std::vector<int> shape;
    while (is.peek() != '\n' && is.good()) {
      int d;
      is >> d;
      shape.push_back(d);
      while (is.peek() == ' ') is.get();
    }
    is >> kw;
    if (kw != "values") throw std::runtime_error("bad checkpoint: expected 'values'");
    Tensor t(shape);
    std::string tok;
    for (std::size_t k = 0; k < t.numel(); ++k) {
      is >> tok;
      t[k] = hex_to_double(tok);
    }
    store.add(name, std::move(t));
  }
  if (!is) throw std::runtime_error("truncated checkpoint");
  return store;
}

inline ParamStore load_params_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return load_params(is);
}

}  // namespace scr
