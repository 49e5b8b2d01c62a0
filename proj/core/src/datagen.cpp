#include "spikecp/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <ostream>

#include "spikecp/error.hpp"
#include "spikecp/rng.hpp"
#include "text_io.hpp"

namespace spikecp {

using detail::format_double;

namespace {

bool unit_interval(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

// FNV-1a over raw bytes.
struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void value(const T& v) {
    bytes(&v, sizeof v);
  }
};

}  // namespace

void SyntheticSpec::validate() const {
  if (n_classes < 1 || n_input < 1 || steps < 1) {
    throw ValueError("synthetic spec needs n_classes, n_input, steps >= 1");
  }
  if (rates.size() != static_cast<std::size_t>(n_classes) * n_input) {
    throw ShapeError("rate matrix must be n_classes x n_input");
  }
  if (!std::all_of(rates.begin(), rates.end(), unit_interval)) {
    throw ValueError("firing rates must lie in [0, 1]");
  }
  if (!unit_interval(noise_rate)) throw ValueError("noise_rate must lie in [0, 1]");
  if (class_prior.size() != static_cast<std::size_t>(n_classes)) {
    throw ShapeError("class prior must have n_classes entries");
  }
  if (!std::all_of(class_prior.begin(), class_prior.end(), unit_interval)) {
    throw ValueError("class prior entries must lie in [0, 1]");
  }
  const double total = std::accumulate(class_prior.begin(), class_prior.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ValueError("class prior must sum to 1");
  if (!allow_degenerate) {
    for (int a = 0; a < n_classes; ++a) {
      for (int b = a + 1; b < n_classes; ++b) {
        if (std::equal(rates.begin() + a * n_input, rates.begin() + (a + 1) * n_input,
                       rates.begin() + b * n_input)) {
          throw ValueError("classes " + std::to_string(a) + " and " + std::to_string(b) +
                           " have identical rates");
        }
      }
    }
  }
}

std::uint64_t SyntheticSpec::fingerprint() const {
  Fnv1a f;
  f.value(n_classes);
  f.value(n_input);
  f.value(steps);
  f.bytes(rates.data(), rates.size() * sizeof(double));
  f.value(noise_rate);
  f.bytes(class_prior.data(), class_prior.size() * sizeof(double));
  return f.h;
}

SyntheticSpec prototype_spec(int n_classes, int n_input, int steps, double on_rate,
                             double off_rate, double neighbor_rate, double noise_rate) {
  SyntheticSpec spec;
  spec.n_classes = n_classes;
  spec.n_input = n_input;
  spec.steps = steps;
  spec.noise_rate = noise_rate;
  spec.rates.assign(static_cast<std::size_t>(n_classes) * n_input, off_rate);
  for (int c = 0; c < n_classes; ++c) {
    for (int j = 0; j < n_input; ++j) {
      const int block = static_cast<int>(static_cast<long long>(j) * n_classes / n_input);
      double& r = spec.rates[static_cast<std::size_t>(c) * n_input + j];
      if (block == c) {
        r = on_rate;
      } else if (n_classes > 1 && block == (c + 1) % n_classes) {
        r = neighbor_rate;
      }
    }
  }
  spec.class_prior.assign(n_classes, 1.0 / n_classes);
  spec.validate();
  return spec;
}

std::vector<int> LabeledDataset::labels() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(s.label);
  return out;
}

void LabeledDataset::validate() const {
  if (n_classes < 1 || n_input < 1 || steps < 1) throw ValueError("dataset dims must be >= 1");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& s = items[i];
    if (s.label < 0 || s.label >= n_classes) {
      throw ValueError("item " + std::to_string(i) + " has label out of range");
    }
    if (s.input.steps != steps || s.input.channels != n_input ||
        s.input.values.size() != static_cast<std::size_t>(steps) * n_input) {
      throw ShapeError("item " + std::to_string(i) + " has the wrong shape");
    }
    if (!std::all_of(s.input.values.begin(), s.input.values.end(), unit_interval)) {
      throw ValueError("item " + std::to_string(i) + " has values outside [0, 1]");
    }
  }
}

LabeledDataset generate(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw ValueError("need at least one item");
  LabeledDataset data;
  data.n_classes = spec.n_classes;
  data.n_input = spec.n_input;
  data.steps = spec.steps;
  data.seed = seed;
  data.fingerprint = spec.fingerprint();
  data.items.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, i));
    const double u = rng.uniform();
    int label = spec.n_classes - 1;
    double cdf = 0.0;
    for (int c = 0; c < spec.n_classes; ++c) {
      cdf += spec.class_prior[c];
      if (u < cdf) {
        label = c;
        break;
      }
    }
    Sample& s = data.items[i];
    s.label = label;
    s.input = InputSequence(spec.steps, spec.n_input);
    for (int t = 1; t <= spec.steps; ++t) {
      auto row = s.input.at(t);
      for (int j = 0; j < spec.n_input; ++j) {
        bool bit = rng.bernoulli(spec.rate(label, j));
        if (rng.bernoulli(spec.noise_rate)) bit = !bit;
        row[j] = bit ? 1.0 : 0.0;
      }
    }
  }
  return data;
}

SplitIndices split_indices(std::size_t n, std::size_t n_cal, std::uint64_t seed) {
  if (n_cal < 1 || n_cal >= n) {
    throw ValueError("n_cal = " + std::to_string(n_cal) + " must lie in 1.." +
                     std::to_string(n == 0 ? 0 : n - 1));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.below(i + 1)]);
  }
  SplitIndices out;
  out.cal.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_cal));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_cal), perm.end());
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split_cal_test(const LabeledDataset& data,
                                                         std::size_t n_cal, std::uint64_t seed) {
  const auto split = split_indices(data.size(), n_cal, seed);
  auto subset = [&](const std::vector<std::size_t>& idx) {
    LabeledDataset d;
    d.n_classes = data.n_classes;
    d.n_input = data.n_input;
    d.steps = data.steps;
    d.seed = data.seed;
    d.fingerprint = data.fingerprint;
    d.items.reserve(idx.size());
    for (auto i : idx) d.items.push_back(data.items[i]);
    return d;
  };
  return {subset(split.cal), subset(split.test)};
}

void save_dataset(std::ostream& os, const LabeledDataset& data) {
  data.validate();
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(data.fingerprint));
  os << "format " << kDatasetFormat << '\n'
     << "classes " << data.n_classes << '\n'
     << "inputs " << data.n_input << '\n'
     << "steps " << data.steps << '\n'
     << "items " << data.size() << '\n'
     << "seed " << data.seed << '\n'
     << "fingerprint " << hex << '\n';
  std::string line;
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    const auto& s = data.items[i];
    os << "item " << i << ' ' << s.label << '\n';
    for (int t = 1; t <= data.steps; ++t) {
      line.clear();
      const auto row = s.input.at(t);
      for (int j = 0; j < data.n_input; ++j) {
        if (j) line += ' ';
        const double v = row[j];
        if (v == 0.0) {
          line += '0';
        } else if (v == 1.0) {
          line += '1';
        } else {
          line += format_double(v);
        }
      }
      os << line << '\n';
    }
  }
  os << "end\n";
}

void save_dataset(const std::string& path, const LabeledDataset& data) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  save_dataset(os, data);
  if (!os) throw IoError("write to '" + path + "' failed");
}

LabeledDataset load_dataset(std::istream& is, const std::string& name) {
  detail::LineReader in(is, name);
  in.expect_format(kDatasetFormat);
  LabeledDataset data;
  data.n_classes = in.to_int(in.expect_value("classes"), "classes");
  data.n_input = in.to_int(in.expect_value("inputs"), "inputs");
  data.steps = in.to_int(in.expect_value("steps"), "steps");
  const auto n = in.to_uint64(in.expect_value("items"), "items");
  data.seed = in.to_uint64(in.expect_value("seed"), "seed");
  {
    const auto token = in.expect_value("fingerprint");
    char* end = nullptr;
    const std::string s(token);
    data.fingerprint = std::strtoull(s.c_str(), &end, 16);
    if (s.empty() || *end != '\0') in.fail("fingerprint", "expected a hex value");
  }
  if (data.n_classes < 1 || data.n_input < 1 || data.steps < 1) {
    in.fail("header", "dimensions must be >= 1");
  }
  if (n > (std::uint64_t{1} << 32)) in.fail("items", "item count out of range");
  data.items.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string section = "item " + std::to_string(i);
    const auto& t = in.expect(section);
    if (t.size() != 3 || t[0] != "item" || in.to_uint64(t[1], section) != i) {
      in.fail(section, "expected 'item " + std::to_string(i) + " <label>'");
    }
    Sample& s = data.items[i];
    s.label = in.to_int(t[2], section + " label");
    if (s.label < 0 || s.label >= data.n_classes) in.fail(section, "label out of range");
    s.input = InputSequence(data.steps, data.n_input);
    for (int step = 1; step <= data.steps; ++step) {
      in.read_row(static_cast<std::size_t>(data.n_input),
                  section + " step " + std::to_string(step), s.input.at(step).data());
    }
  }
  const auto& t = in.expect("end");
  if (t[0] != "end") in.fail("end", "expected 'end' after the last item");
  try {
    data.validate();
  } catch (const Error& e) {
    throw ParseError(name, in.line(), "dataset", e.what());
  }
  return data;
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset file '" + path + "'");
  return load_dataset(is, path);
}

void save_spec(std::ostream& os, const SyntheticSpec& spec) {
  spec.validate();
  os << "format " << kSpecFormat << '\n'
     << "classes " << spec.n_classes << '\n'
     << "inputs " << spec.n_input << '\n'
     << "steps " << spec.steps << '\n'
     << "noise_rate " << format_double(spec.noise_rate) << '\n'
     << "allow_degenerate " << (spec.allow_degenerate ? 1 : 0) << '\n'
     << "prior";
  for (double p : spec.class_prior) os << ' ' << format_double(p);
  os << "\nrates\n";
  for (int c = 0; c < spec.n_classes; ++c) {
    for (int j = 0; j < spec.n_input; ++j) os << (j ? " " : "") << format_double(spec.rate(c, j));
    os << '\n';
  }
  os << "end\n";
}

void save_spec(const std::string& path, const SyntheticSpec& spec) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  save_spec(os, spec);
}

SyntheticSpec load_spec(std::istream& is, const std::string& name) {
  detail::LineReader in(is, name);
  in.expect_format(kSpecFormat);
  SyntheticSpec spec;
  spec.n_classes = in.to_int(in.expect_value("classes"), "classes");
  spec.n_input = in.to_int(in.expect_value("inputs"), "inputs");
  spec.steps = in.to_int(in.expect_value("steps"), "steps");
  if (spec.n_classes < 1 || spec.n_input < 1 || spec.steps < 1 || spec.n_classes > (1 << 16) ||
      spec.n_input > (1 << 20)) {
    in.fail("header", "dimensions out of range");
  }
  spec.noise_rate = in.to_double(in.expect_value("noise_rate"), "noise_rate");
  spec.allow_degenerate = in.to_int(in.expect_value("allow_degenerate"), "allow_degenerate") != 0;
  {
    const auto& t = in.expect("prior");
    if (t[0] != "prior" || t.size() != static_cast<std::size_t>(spec.n_classes) + 1) {
      in.fail("prior", "expected 'prior' followed by one probability per class");
    }
    for (int c = 0; c < spec.n_classes; ++c) spec.class_prior.push_back(in.to_double(t[c + 1], "prior"));
  }
  {
    const auto& t = in.expect("rates");
    if (t[0] != "rates" || t.size() != 1) in.fail("rates", "expected 'rates'");
  }
  spec.rates.resize(static_cast<std::size_t>(spec.n_classes) * spec.n_input);
  for (int c = 0; c < spec.n_classes; ++c) {
    in.read_row(static_cast<std::size_t>(spec.n_input), "rates row " + std::to_string(c),
                spec.rates.data() + static_cast<std::size_t>(c) * spec.n_input);
  }
  const auto& t = in.expect("end");
  if (t[0] != "end") in.fail("end", "expected 'end'");
  try {
    spec.validate();
  } catch (const Error& e) {
    throw ParseError(name, in.line(), "spec", e.what());
  }
  return spec;
}

SyntheticSpec load_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open spec file '" + path + "'");
  return load_spec(is, path);
}

InputSequence load_events(std::istream& is, int steps, int channels, const std::string& name) {
  if (steps < 1 || channels < 1) throw ValueError("event grid must be at least 1x1");
  detail::LineReader in(is, name);
  InputSequence x(steps, channels);
  std::vector<std::string_view> t;
  while (in.next(t)) {
    if (t.size() != 3) in.fail("event", "expected 't channel polarity'");
    const int step = in.to_int(t[0], "t");
    const int channel = in.to_int(t[1], "channel");
    const int polarity = in.to_int(t[2], "polarity");
    if (step < 1 || step > steps) in.fail("t", "time step outside 1.." + std::to_string(steps));
    if (channel < 0 || channel >= channels) in.fail("channel", "channel out of range");
    if (polarity < -1 || polarity > 1) in.fail("polarity", "polarity must be -1, 0 or 1");
    double& v = x.at(step)[channel];
    v = std::min(1.0, v + 1.0);
  }
  return x;
}

InputSequence load_events(const std::string& path, int steps, int channels) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open event file '" + path + "'");
  return load_events(is, steps, channels, path);
}

}  // namespace spikecp
