#include "stochfsi/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace stochfsi {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected a number");
  return out;
}

long long to_int(const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected an integer");
  return out;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::invalid_argument("expected a nonnegative integer");
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw std::invalid_argument("expected on/off");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("empty list entry");
    out.push_back(item);
  }
  return out;
}

WaveShape to_shape(const std::string& v) {
  if (v == "constant") return WaveShape::Constant;
  if (v == "pulse") return WaveShape::Pulse;
  throw std::invalid_argument("expected constant or pulse");
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"T", [](RunConfig& c, const std::string& v) { c.scheme.T = to_double(v); }},
      {"N", [](RunConfig& c, const std::string& v) { c.scheme.N = static_cast<int>(to_int(v)); }},
      {"eps", [](RunConfig& c, const std::string& v) { c.scheme.eps = to_double(v); }},
      {"delta1", [](RunConfig& c, const std::string& v) { c.scheme.delta1 = to_double(v); }},
      {"delta2", [](RunConfig& c, const std::string& v) { c.scheme.delta2 = to_double(v); }},
      {"s_exp", [](RunConfig& c, const std::string& v) { c.scheme.s_exp = to_double(v); }},
      {"alpha", [](RunConfig& c, const std::string& v) { c.scheme.alpha = to_double(v); }},
      {"nu", [](RunConfig& c, const std::string& v) { c.scheme.nu = to_double(v); }},
      {"length", [](RunConfig& c, const std::string& v) { c.scheme.length = to_double(v); }},
      {"nz", [](RunConfig& c, const std::string& v) { c.scheme.nz = static_cast<int>(to_int(v)); }},
      {"nr", [](RunConfig& c, const std::string& v) { c.scheme.nr = static_cast<int>(to_int(v)); }},
      {"beam_elements",
       [](RunConfig& c, const std::string& v) { c.scheme.beam_elements = static_cast<int>(to_int(v)); }},
      {"c_b", [](RunConfig& c, const std::string& v) { c.scheme.c_b = to_double(v); }},
      {"c_0", [](RunConfig& c, const std::string& v) { c.scheme.c_0 = to_double(v); }},
      {"p_in", [](RunConfig& c, const std::string& v) { c.scheme.p_in.amplitude = to_double(v); }},
      {"p_in_shape", [](RunConfig& c, const std::string& v) { c.scheme.p_in.shape = to_shape(v); }},
      {"p_in_period", [](RunConfig& c, const std::string& v) { c.scheme.p_in.period = to_double(v); }},
      {"p_out", [](RunConfig& c, const std::string& v) { c.scheme.p_out.amplitude = to_double(v); }},
      {"p_out_shape", [](RunConfig& c, const std::string& v) { c.scheme.p_out.shape = to_shape(v); }},
      {"p_out_period",
       [](RunConfig& c, const std::string& v) { c.scheme.p_out.period = to_double(v); }},
      {"noise", [](RunConfig& c, const std::string& v) { c.scheme.noise = to_bool(v); }},
      {"noise_modes",
       [](RunConfig& c, const std::string& v) { c.scheme.noise_modes = static_cast<int>(to_int(v)); }},
      {"noise_decay", [](RunConfig& c, const std::string& v) { c.scheme.noise_decay = to_double(v); }},
      {"noise_gain", [](RunConfig& c, const std::string& v) { c.scheme.noise_gain = to_double(v); }},
      {"slip_projection",
       [](RunConfig& c, const std::string& v) {
         if (v == "full") c.scheme.slip = SlipProjection::Full;
         else if (v == "tangential") c.scheme.slip = SlipProjection::Tangential;
         else throw std::invalid_argument("expected full or tangential");
       }},
      {"div_quadrature",
       [](RunConfig& c, const std::string& v) {
         if (v == "centroid") c.scheme.div_rule = DivQuadrature::Centroid;
         else if (v == "gauss") c.scheme.div_rule = DivQuadrature::Gauss;
         else throw std::invalid_argument("expected centroid or gauss");
       }},
      {"picard_tol", [](RunConfig& c, const std::string& v) { c.scheme.picard_tol = to_double(v); }},
      {"max_picard",
       [](RunConfig& c, const std::string& v) { c.scheme.max_picard = static_cast<int>(to_int(v)); }},
      {"max_halvings",
       [](RunConfig& c, const std::string& v) { c.scheme.max_halvings = static_cast<int>(to_int(v)); }},
      {"eta0_amp", [](RunConfig& c, const std::string& v) { c.scheme.eta0_amp = to_double(v); }},
      {"v0_amp", [](RunConfig& c, const std::string& v) { c.scheme.v0_amp = to_double(v); }},
      {"u0_amp", [](RunConfig& c, const std::string& v) { c.scheme.u0_amp = to_double(v); }},
      {"paths", [](RunConfig& c, const std::string& v) { c.paths = static_cast<int>(to_int(v)); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); }},
      {"beta", [](RunConfig& c, const std::string& v) { c.beta = to_double(v); }},
      {"sweep_N",
       [](RunConfig& c, const std::string& v) {
         c.sweep_N.clear();
         for (const auto& s : split_list(v)) c.sweep_N.push_back(static_cast<int>(to_int(s)));
       }},
      {"sweep_eps",
       [](RunConfig& c, const std::string& v) {
         c.sweep_eps.clear();
         for (const auto& s : split_list(v)) c.sweep_eps.push_back(to_double(s));
       }},
      {"sweep_mode",
       [](RunConfig& c, const std::string& v) {
         if (v == "product") c.sweep_mode = SweepMode::Product;
         else if (v == "diagonal") c.sweep_mode = SweepMode::Diagonal;
         else throw std::invalid_argument("expected product or diagonal");
       }},
  };
  return table;
}

}  // namespace

std::vector<std::pair<int, double>> RunConfig::sweep_grid() const {
  std::vector<std::pair<int, double>> g;
  if (sweep_mode == SweepMode::Diagonal) {
    if (sweep_N.size() != sweep_eps.size())
      throw ConfigurationError("diagonal sweep needs sweep_N and sweep_eps of equal length");
    for (std::size_t i = 0; i < sweep_N.size(); ++i) g.emplace_back(sweep_N[i], sweep_eps[i]);
  } else {
    for (int n : sweep_N)
      for (double e : sweep_eps) g.emplace_back(n, e);
  }
  return g;
}

RunConfig parse_config(std::string_view text, const std::string& source) {
  std::map<std::string, const Setter*> lookup;
  for (const auto& [k, s] : setters()) lookup[k] = &s;
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigurationError(where + "expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = lookup.find(key);
    if (it == lookup.end()) throw ConfigurationError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigurationError(where + "duplicate key '" + key + "'");
    if (value.empty()) throw ConfigurationError(where + "missing value for '" + key + "'");
    try {
      (*it->second)(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigurationError(where + "bad value for '" + key + "': " + e.what());
    }
  }
  for (const char* req : {"T", "N", "eps", "delta1", "delta2"})
    if (!seen.count(req))
      throw ConfigurationError(source + ": missing required field '" + std::string(req) + "'");
  if (cfg.paths < 1) throw ConfigurationError(source + ": paths must be >= 1");
  cfg.scheme.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigurationError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

std::string canonical_config(const RunConfig& c) {
  const SchemeConfig& s = c.scheme;
  auto shape = [](WaveShape w) { return w == WaveShape::Pulse ? "pulse" : "constant"; };
  std::ostringstream o;
  o << "T = " << fmt(s.T) << "\nN = " << s.N << "\neps = " << fmt(s.eps)
    << "\ndelta1 = " << fmt(s.delta1) << "\ndelta2 = " << fmt(s.delta2)
    << "\ns_exp = " << fmt(s.s_exp) << "\nalpha = " << fmt(s.alpha) << "\nnu = " << fmt(s.nu)
    << "\nlength = " << fmt(s.length) << "\nnz = " << s.nz << "\nnr = " << s.nr
    << "\nbeam_elements = " << s.beam_elements << "\nc_b = " << fmt(s.c_b)
    << "\nc_0 = " << fmt(s.c_0) << "\np_in = " << fmt(s.p_in.amplitude)
    << "\np_in_shape = " << shape(s.p_in.shape) << "\np_in_period = " << fmt(s.p_in.period)
    << "\np_out = " << fmt(s.p_out.amplitude) << "\np_out_shape = " << shape(s.p_out.shape)
    << "\np_out_period = " << fmt(s.p_out.period) << "\nnoise = " << (s.noise ? "on" : "off")
    << "\nnoise_modes = " << s.noise_modes << "\nnoise_decay = " << fmt(s.noise_decay)
    << "\nnoise_gain = " << fmt(s.noise_gain)
    << "\nslip_projection = " << (s.slip == SlipProjection::Full ? "full" : "tangential")
    << "\ndiv_quadrature = " << (s.div_rule == DivQuadrature::Centroid ? "centroid" : "gauss")
    << "\npicard_tol = " << fmt(s.picard_tol) << "\nmax_picard = " << s.max_picard
    << "\nmax_halvings = " << s.max_halvings << "\neta0_amp = " << fmt(s.eta0_amp)
    << "\nv0_amp = " << fmt(s.v0_amp) << "\nu0_amp = " << fmt(s.u0_amp)
    << "\npaths = " << c.paths << "\nseed = " << c.seed << "\nbeta = " << fmt(c.beta);
  if (!c.sweep_N.empty()) {
    o << "\nsweep_N = ";
    for (std::size_t i = 0; i < c.sweep_N.size(); ++i) o << (i ? ", " : "") << c.sweep_N[i];
  }
  if (!c.sweep_eps.empty()) {
    o << "\nsweep_eps = ";
    for (std::size_t i = 0; i < c.sweep_eps.size(); ++i) o << (i ? ", " : "") << fmt(c.sweep_eps[i]);
  }
  o << "\nsweep_mode = " << (c.sweep_mode == SweepMode::Diagonal ? "diagonal" : "product") << "\n";
  return o.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace stochfsi
