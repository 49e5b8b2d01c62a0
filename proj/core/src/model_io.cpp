#include "spikecp/model_io.hpp"

#include <fstream>
#include <ostream>

#include "spikecp/error.hpp"
#include "text_io.hpp"

namespace spikecp {

using detail::format_double;

void save_model(std::ostream& os, const NetworkParams& params) {
  params.validate();
  os << "format " << kModelFormat << '\n'
     << "inputs " << params.n_input << '\n'
     << "classes " << params.n_classes << '\n'
     << "steps " << params.steps << '\n'
     << "threshold " << format_double(params.threshold) << '\n'
     << "temperature " << format_double(params.temperature) << '\n'
     << "kernel " << to_string(params.kernel.kind) << '\n'
     << "tau_mem " << format_double(params.kernel.tau_mem) << '\n'
     << "tau_syn " << format_double(params.kernel.tau_syn) << '\n'
     << "tau_ref " << format_double(params.kernel.tau_ref) << '\n'
     << "horizon " << params.kernel.horizon << '\n'
     << "layers " << params.layers.size() << '\n';
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    os << "layer " << l << ' ' << layer.rows << ' ' << layer.cols << '\n';
    for (int r = 0; r < layer.rows; ++r) {
      const auto row = layer.row(r);
      for (int c = 0; c < layer.cols; ++c) os << (c ? " " : "") << format_double(row[c]);
      os << '\n';
    }
  }
  os << "end\n";
}

void save_model(const std::string& path, const NetworkParams& params) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  save_model(os, params);
  if (!os) throw IoError("write to '" + path + "' failed");
}

NetworkParams load_model(std::istream& is, const std::string& name) {
  detail::LineReader in(is, name);
  in.expect_format(kModelFormat);
  NetworkParams p;
  p.n_input = in.to_int(in.expect_value("inputs"), "inputs");
  p.n_classes = in.to_int(in.expect_value("classes"), "classes");
  p.steps = in.to_int(in.expect_value("steps"), "steps");
  p.threshold = in.to_double(in.expect_value("threshold"), "threshold");
  p.temperature = in.to_double(in.expect_value("temperature"), "temperature");
  try {
    p.kernel.kind = kernel_kind_from_string(in.expect_value("kernel"));
  } catch (const ValueError& e) {
    in.fail("kernel", e.what());
  }
  p.kernel.tau_mem = in.to_double(in.expect_value("tau_mem"), "tau_mem");
  p.kernel.tau_syn = in.to_double(in.expect_value("tau_syn"), "tau_syn");
  p.kernel.tau_ref = in.to_double(in.expect_value("tau_ref"), "tau_ref");
  p.kernel.horizon = in.to_int(in.expect_value("horizon"), "horizon");
  const int n_layers = in.to_int(in.expect_value("layers"), "layers");
  if (n_layers < 1 || n_layers > 64) in.fail("layers", "layer count out of range");

  for (int l = 0; l < n_layers; ++l) {
    const std::string section = "layer " + std::to_string(l);
    const auto& t = in.expect(section);
    if (t.size() != 4 || t[0] != "layer" || in.to_int(t[1], section) != l) {
      in.fail(section, "expected 'layer " + std::to_string(l) + " <rows> <cols>'");
    }
    const int rows = in.to_int(t[2], section + " rows");
    const int cols = in.to_int(t[3], section + " cols");
    if (rows < 1 || cols < 1 || rows > (1 << 20) || cols > (1 << 20)) {
      in.fail(section, "bad layer shape");
    }
    LayerParams layer(rows, cols);
    for (int r = 0; r < rows; ++r) {
      in.read_row(static_cast<std::size_t>(cols), section + " row " + std::to_string(r),
                  layer.weights.data() + static_cast<std::size_t>(r) * cols);
    }
    p.layers.push_back(std::move(layer));
  }
  const auto& t = in.expect("end");
  if (t[0] != "end") in.fail("end", "expected 'end' after the last layer");

  try {
    p.validate();
  } catch (const Error& e) {
    throw ParseError(name, in.line(), "model", e.what());
  }
  return p;
}

NetworkParams load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open model file '" + path + "'");
  return load_model(is, path);
}

}  // namespace spikecp
